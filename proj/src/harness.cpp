#include "daugs/harness.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "daugs/parallel.hpp"
#include "daugs/patching.hpp"
#include "daugs/stats.hpp"

namespace daugs {
namespace {

constexpr std::uint64_t kInternalFirstId = 0;
constexpr std::uint64_t kShiftedFirstId = 10000;
constexpr std::uint64_t kValidationFirstId = 20000;

std::vector<SelectionEntry> ok_entries(const std::vector<ModelOutcome>& row, std::vector<std::size_t>& index) {
  std::vector<SelectionEntry> entries;
  index.clear();
  for (std::size_t m = 0; m < row.size(); ++m)
    if (row[m].ok) {
      entries.push_back(row[m].entry());
      index.push_back(m);
    }
  if (entries.empty()) throw Error("every model failed on a case");
  return entries;
}

const ModelOutcome& pick(const std::vector<ModelOutcome>& row, UMetric metric) {
  std::vector<std::size_t> index;
  const auto entries = ok_entries(row, index);
  return row[index[daugs_select(entries, metric).chosen]];
}

std::string hd_cell(const std::optional<double>& v) { return v ? fmt(*v) : ""; }

}  // namespace

void GridConfig::validate(int width, int height) const {
  if (patch < 1 || patch > std::min(width, height)) throw DataError("patch size does not fit the image");
  if (recon_stride < 1 || recon_stride > patch || umap_stride < 1 || umap_stride > patch)
    throw DataError("strides must lie in [1, patch]");
}

SegmentationSolution solve(const SegmenterSpec& spec, const Case& c, const GridConfig& grid, std::uint64_t seed,
                           bool with_umap) {
  const ImageSeries& s = c.series;
  grid.validate(s.width, s.height);
  const CaseContext ctx{seed, c.id, &c.truth, c.shift_magnitude};
  auto seg = make_segmenter(spec, ctx, grid.patch, s.n_frames);

  const PatchGrid rgrid = make_grid(s.height, s.width, grid.patch, grid.recon_stride);
  PatchGrid ugrid;
  std::vector<PatchPrediction> upreds;
  std::map<std::pair<int, int>, std::size_t> shared;
  if (with_umap) {
    ugrid = make_grid(s.height, s.width, grid.patch, grid.umap_stride);
    upreds = segment_grid(*seg, s, ugrid);
    for (std::size_t i = 0; i < ugrid.origins.size(); ++i) shared[{ugrid.origins[i].x0, ugrid.origins[i].y0}] = i;
  }
  std::vector<PatchPrediction> rpreds;
  rpreds.reserve(rgrid.origins.size());
  for (std::size_t i = 0; i < rgrid.origins.size(); ++i) {
    const Origin o = rgrid.origins[i];
    const auto it = shared.find({o.x0, o.y0});
    PatchPrediction p = it != shared.end() ? upreds[it->second] : seg->segment(view_patch(s, o, grid.patch));
    p.patch_index = i;
    rpreds.push_back(std::move(p));
  }
  seg->finish();

  SegmentationSolution out;
  out.model_id = spec.model_id;
  out.mean_probs = combine_mean(rpreds, rgrid);
  out.mask = binarize_smap(out.mean_probs);
  const auto n_myo = static_cast<std::int64_t>(out.mask.count(kMyocardium));
  if (with_umap) {
    out.umap = compute_umap(upreds, ugrid, n_myo);
  } else {
    out.umap.width = s.width;
    out.umap.height = s.height;
    out.umap.n_myo = n_myo;
  }
  return out;
}

CaseRun run_case(const Case& c, const std::vector<SegmenterSpec>& pool, const GridConfig& grid, std::uint64_t seed,
                 int jobs) {
  if (pool.empty()) throw DataError("run_case: empty pool");
  std::vector<std::optional<SegmentationSolution>> slots(pool.size());
  std::vector<std::optional<ModelFailure>> failed(pool.size());
  parallel_for(pool.size(), jobs, [&](std::size_t m) {
    try {
      slots[m] = solve(pool[m], c, grid, seed);
    } catch (const BackendError& e) {
      failed[m] = ModelFailure{pool[m].model_id, to_string(e.kind()), e.what()};
    }
  });
  CaseRun run;
  for (std::size_t m = 0; m < pool.size(); ++m) {
    if (slots[m]) run.solutions.push_back(std::move(*slots[m]));
    if (failed[m]) run.failures.push_back(std::move(*failed[m]));
  }
  if (run.solutions.empty()) {
    const ModelFailure& f = run.failures.front();
    throw BackendError(BackendError::Kind::Terminated, f.model_id,
                       "every model failed on case " + c.name + " (first: " + f.message + ")");
  }
  return run;
}

ModelOutcome evaluate_solution(const SegmentationSolution& s, const Case& c) {
  ModelOutcome o;
  o.model_id = s.model_id;
  o.u_pp = s.umap.u_pp;
  o.u_tot = s.umap.u_tot;
  o.n_myo = s.umap.n_myo;
  o.dice_myo = dice(s.mask, c.truth, kMyocardium);
  o.dice_bp = dice(s.mask, c.truth, kBloodpool);
  if (s.mask.count(kMyocardium) > 0) {
    o.hd95_mm = hd95(s.mask, c.truth, kMyocardium, c.series.spacing);
    const Point rv = c.rv_centroid;
    o.failure = detect_failure(s.mask, aha6_split(s.mask, rv));
  }
  return o;
}

OutcomeTable evaluate_pool(const std::vector<Case>& cases, const std::vector<SegmenterSpec>& pool,
                           const GridConfig& grid, std::uint64_t seed, int jobs, bool with_umap) {
  OutcomeTable out(cases.size(), std::vector<ModelOutcome>(pool.size()));
  const std::size_t M = pool.size();
  parallel_for(cases.size() * M, jobs, [&](std::size_t k) {
    const std::size_t ci = k / M, m = k % M;
    ModelOutcome& o = out[ci][m];
    try {
      o = evaluate_solution(solve(pool[m], cases[ci], grid, seed, with_umap), cases[ci]);
    } catch (const BackendError& e) {
      o = ModelOutcome{};
      o.model_id = pool[m].model_id;
      o.ok = false;
      o.error = e.what();
    }
  });
  return out;
}

int established_select(std::vector<SegmenterSpec>& pool, const std::vector<Case>& validation,
                       const GridConfig& grid, std::uint64_t seed, int jobs) {
  if (pool.empty()) throw DataError("established selection: empty pool");
  if (validation.empty()) throw DataError("established selection: empty validation set");
  const OutcomeTable t = evaluate_pool(validation, pool, grid, seed, jobs, false);
  for (std::size_t m = 0; m < pool.size(); ++m) {
    double sum = 0.0;
    for (const auto& row : t) sum += row[m].ok ? row[m].dice_myo : 0.0;
    pool[m].validation_dice = sum / static_cast<double>(t.size());
  }
  return established_choice(pool);
}

std::vector<SegmenterSpec> candidate_pool(std::uint64_t seed, int runs, int candidates) {
  std::vector<SegmenterSpec> out;
  for (int r = 0; r < runs; ++r) {
    Rng rr = Rng::stream(seed, StreamTag::Pool, {static_cast<std::uint64_t>(r)});
    const double run_jitter = rr.uniform(0.3, 1.5);
    const double run_sensitivity = rr.uniform(0.2, 3.0);
    for (int c = 0; c < candidates; ++c) {
      Rng rc = Rng::stream(seed, StreamTag::Pool, {static_cast<std::uint64_t>(r), static_cast<std::uint64_t>(c) + 1});
      SegmenterSpec s;
      s.kind = SegmenterKind::PerturbedOracle;
      s.model_id = r * candidates + c;
      s.run_id = r;
      s.checkpoint_id = c;
      s.perturb.boundary_jitter_px = run_jitter * rc.uniform(0.7, 1.3);
      s.perturb.label_noise_rate = rc.uniform(0.0, 0.01);
      s.perturb.shift_sensitivity = run_sensitivity * rc.uniform(0.6, 1.4);
      out.push_back(s);
    }
  }
  return out;
}

AbReport experiment_ab(const std::vector<Case>& internal, const std::vector<Case>& shifted,
                       const std::vector<Case>& validation, std::vector<SegmenterSpec> pool, const AbConfig& cfg,
                       std::uint64_t seed, int jobs) {
  if (pool.empty()) throw DataError("experiment_ab: empty pool");
  AbReport r;
  const bool scored = std::all_of(pool.begin(), pool.end(), [](const auto& s) { return s.validation_dice.has_value(); });
  r.established_model = scored ? established_choice(pool) : established_select(pool, validation, cfg.grid, seed, jobs);
  r.pool = pool;
  std::size_t est_index = 0;
  while (pool[est_index].model_id != r.established_model) ++est_index;

  r.cases.header = {"cohort", "case", "shift_magnitude", "established_model", "established_dice_myo",
                    "established_hd95_mm", "established_failed", "daugs_model", "daugs_u_pp", "daugs_u_tot",
                    "daugs_dice_myo", "daugs_hd95_mm", "daugs_failed"};

  auto run_cohort = [&](const std::string& name, const std::vector<Case>& cases) {
    if (cases.empty()) {
      r.warnings.push_back("cohort " + name + " is empty; skipped");
      return;
    }
    const OutcomeTable t = evaluate_pool(cases, pool, cfg.grid, seed, jobs);
    std::vector<double> d_est, d_daugs, h_est, h_daugs;
    int f_est = 0, f_daugs = 0;
    for (std::size_t i = 0; i < cases.size(); ++i) {
      ModelOutcome est = t[i][est_index];
      if (!est.ok) est.failure.failed = true;
      const ModelOutcome& dg = pick(t[i], cfg.metric);
      d_est.push_back(est.dice_myo);
      d_daugs.push_back(dg.dice_myo);
      if (est.hd95_mm) h_est.push_back(*est.hd95_mm);
      if (dg.hd95_mm) h_daugs.push_back(*dg.hd95_mm);
      f_est += est.failure.failed;
      f_daugs += dg.failure.failed;
      r.cases.add({name, cases[i].name, fmt(cases[i].shift_magnitude), fmt(est.model_id), fmt(est.dice_myo),
                   hd_cell(est.hd95_mm), fmt(est.failure.failed), fmt(dg.model_id), fmt(dg.u_pp), fmt(dg.u_tot),
                   fmt(dg.dice_myo), hd_cell(dg.hd95_mm), fmt(dg.failure.failed)});
    }
    const int n = static_cast<int>(cases.size());
    auto summary = [&](const char* method, const std::vector<double>& d, const std::vector<double>& h, int f) {
      const MeanSd ds = mean_sd(d), hs = mean_sd(h);
      r.summaries.push_back({name, method, n, ds.mean, ds.sd, hs.mean, hs.sd, static_cast<int>(h.size()), f});
    };
    summary("established", d_est, h_est, f_est);
    summary("daugs", d_daugs, h_daugs, f_daugs);
    r.comparisons.push_back({name, n, wilcoxon_signed_rank_p(d_daugs, d_est), fisher_exact(f_daugs, n, f_est, n)});
  };
  run_cohort("internal", internal);
  run_cohort("shifted", shifted);
  return r;
}

FilterResult default_pool(std::uint64_t seed, const GridConfig& grid, int n_validation, int jobs) {
  if (n_validation < 1) throw DataError("default pool needs a validation cohort");
  std::vector<Case> validation;
  for (auto& c : gen_cohort(n_validation, ShiftRegime::None, seed, kValidationFirstId, jobs))
    validation.push_back(std::move(c.data));
  std::vector<SegmenterSpec> candidates = candidate_pool(seed);
  established_select(candidates, validation, grid, seed, jobs);
  FilterResult filtered = checkpoint_filter(candidates);
  if (filtered.kept.empty()) throw DataError("no candidate passed the checkpoint filter");
  return filtered;
}

AbReport run_abtest(const AbConfig& cfg, std::uint64_t seed, int jobs) {
  auto cases = [&](int n, ShiftRegime regime, std::uint64_t first) {
    std::vector<Case> out;
    if (n <= 0) return out;
    for (auto& c : gen_cohort(n, regime, seed, first, jobs)) out.push_back(std::move(c.data));
    return out;
  };
  const auto internal = cases(cfg.n_internal, ShiftRegime::None, kInternalFirstId);
  const auto shifted = cases(cfg.n_shifted, ShiftRegime::Shifted, kShiftedFirstId);
  FilterResult pool = default_pool(seed, cfg.grid, cfg.n_validation, jobs);
  AbReport r = experiment_ab(internal, shifted, {}, pool.kept, cfg, seed, jobs);
  r.warnings.insert(r.warnings.begin(), pool.warnings.begin(), pool.warnings.end());
  return r;
}

void write_ab_report(const std::filesystem::path& dir, const AbReport& r) {
  r.cases.write(dir / "ab_cases.csv");

  Csv s;
  s.header = {"cohort", "method", "n", "dice_mean", "dice_sd", "hd95_mean_mm", "hd95_sd_mm", "hd95_n",
              "failures", "failure_rate"};
  for (const MethodSummary& m : r.summaries)
    s.add({m.cohort, m.method, fmt(m.n), fmt(m.dice_mean), fmt(m.dice_sd), fmt(m.hd95_mean), fmt(m.hd95_sd),
           fmt(m.hd95_n), fmt(m.failures), fmt(m.n ? static_cast<double>(m.failures) / m.n : 0.0)});
  s.write(dir / "ab_summary.csv");

  Csv t;
  t.header = {"cohort", "n", "wilcoxon_p_dice", "fisher_p_failures"};
  for (const CohortComparison& c : r.comparisons) t.add({c.cohort, fmt(c.n), fmt(c.wilcoxon_p), fmt(c.fisher_p)});
  t.write(dir / "ab_tests.csv");

  Csv p;
  p.header = {"model_id", "run_id", "checkpoint_id", "kind", "boundary_jitter_px", "label_noise_rate",
              "shift_sensitivity", "validation_dice", "established"};
  for (const SegmenterSpec& m : r.pool)
    p.add({fmt(m.model_id), fmt(m.run_id), fmt(m.checkpoint_id), to_string(m.kind), fmt(m.perturb.boundary_jitter_px),
           fmt(m.perturb.label_noise_rate), fmt(m.perturb.shift_sensitivity),
           m.validation_dice ? fmt(*m.validation_dice) : "", fmt(m.model_id == r.established_model)});
  p.write(dir / "ab_pool.csv");

  std::vector<std::string> cohorts;
  PlotSeries est{"established", {}, {}, {}}, dg{"DAUGS", {}, {}, {}};
  PlotSeries fest{"established", {}, {}, {}}, fdg{"DAUGS", {}, {}, {}};
  for (const MethodSummary& m : r.summaries) {
    if (m.method == "established") cohorts.push_back(m.cohort);
    PlotSeries& d = m.method == "established" ? est : dg;
    PlotSeries& f = m.method == "established" ? fest : fdg;
    d.y.push_back(m.dice_mean);
    d.err.push_back(m.dice_sd);
    f.y.push_back(m.n ? 100.0 * m.failures / m.n : 0.0);
  }
  write_text(dir / "ab_dice.svg", svg_bar_plot("Myocardial Dice (mean +/- SD)", "Dice", cohorts, {est, dg}));
  write_text(dir / "ab_failures.svg", svg_bar_plot("Segmentation failures", "failure rate (%)", cohorts, {fest, fdg}));
}

CurveParams phantom_prototypes(const PhantomSpec& spec) {
  CurveParams p;
  for (std::uint8_t c = 0; c < kNumClasses; ++c) p.prototypes[c] = class_curve(spec, c);
  return p;
}

std::vector<MocoRow> experiment_moco(const MocoConfig& cfg, std::uint64_t seed, int jobs) {
  if (cfg.f_max < 0 || cfg.n_mc < 1) throw DataError("experiment_moco: bad frame range or run count");
  const auto pair = gen_moco_pair(seed);
  SegmenterSpec spec;
  spec.kind = SegmenterKind::CurveMatching;
  spec.curve = cfg.curve;
  if (spec.curve.prototypes[0].empty()) {
    const CurveParams proto = phantom_prototypes(PhantomSpec{});
    spec.curve.prototypes = proto.prototypes;
  }

  const std::size_t F = static_cast<std::size_t>(cfg.f_max) + 1, N = static_cast<std::size_t>(cfg.n_mc);
  std::vector<double> upp(F * N);
  parallel_for(F * N, jobs, [&](std::size_t k) {
    const int f = static_cast<int>(k / N);
    Rng rng = Rng::stream(seed, StreamTag::MoCo, {static_cast<std::uint64_t>(f), k % N});
    Case c;
    c.id = k;
    c.series = moco_corrupt(pair[0].series, pair[1].series, f, rng);
    c.truth = pair[0].truth;
    c.rv_centroid = pair[0].rv_centroid;
    upp[k] = solve(spec, c, cfg.grid, seed).umap.u_pp;
  });
  std::vector<MocoRow> rows;
  for (std::size_t f = 0; f < F; ++f) {
    MocoRow row;
    row.f = static_cast<int>(f);
    row.u_pp.assign(upp.begin() + f * N, upp.begin() + (f + 1) * N);
    const MeanSd m = mean_sd(row.u_pp);
    row.mean = m.mean;
    row.sd = m.sd;
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_moco_report(const std::filesystem::path& dir, const std::vector<MocoRow>& rows) {
  Csv csv;
  csv.header = {"f", "n_mc", "u_pp_mean", "u_pp_sd"};
  Csv runs;
  runs.header = {"f", "run", "u_pp"};
  PlotSeries s{"U_pp", {}, {}, {}};
  for (const MocoRow& r : rows) {
    csv.add({fmt(r.f), fmt(static_cast<int>(r.u_pp.size())), fmt(r.mean), fmt(r.sd)});
    for (std::size_t i = 0; i < r.u_pp.size(); ++i) runs.add({fmt(r.f), fmt(static_cast<int>(i)), fmt(r.u_pp[i])});
    s.x.push_back(r.f);
    s.y.push_back(r.mean);
    s.err.push_back(r.sd);
  }
  csv.write(dir / "moco.csv");
  runs.write(dir / "moco_runs.csv");
  write_text(dir / "moco.svg", svg_line_plot("Uncertainty vs swapped frames", "swapped frames f", "mean U_pp", {s}));
}

PoolReport pool_layout(const std::vector<SegmenterSpec>& pool, const std::vector<SegmentationSolution>& solutions,
                       int bins) {
  if (pool.size() < 2) throw DataError("pool report needs at least two models");
  if (solutions.empty()) throw DataError("pool report: no solutions");
  std::map<int, std::size_t> by_id;
  for (std::size_t i = 0; i < solutions.size(); ++i) by_id[solutions[i].model_id] = i;
  auto index_of = [&](int model_id) {
    const auto it = by_id.find(model_id);
    return it == by_id.end() ? -1 : static_cast<int>(it->second);
  };

  PoolReport r;
  const bool structured =
      std::all_of(pool.begin(), pool.end(), [](const auto& s) { return s.run_id >= 0 && s.checkpoint_id >= 0; });
  if (structured) {
    std::map<int, std::vector<const SegmenterSpec*>> runs;
    for (const auto& s : pool) runs[s.run_id].push_back(&s);
    r.rows = static_cast<int>(runs.size());
    for (auto& [id, members] : runs) {
      std::sort(members.begin(), members.end(), [](const SegmenterSpec* a, const SegmenterSpec* b) {
        return a->checkpoint_id != b->checkpoint_id ? a->checkpoint_id < b->checkpoint_id : a->model_id < b->model_id;
      });
      r.cols = std::max(r.cols, static_cast<int>(members.size()));
    }
    r.layout.assign(static_cast<std::size_t>(r.rows * r.cols), -1);
    int row = 0;
    for (const auto& [id, members] : runs) {
      for (std::size_t c = 0; c < members.size(); ++c) r.layout[row * r.cols + c] = index_of(members[c]->model_id);
      ++row;
    }
  } else {
    r.cols = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(pool.size()))));
    r.rows = static_cast<int>((pool.size() + r.cols - 1) / r.cols);
    r.layout.assign(static_cast<std::size_t>(r.rows * r.cols), -1);
    for (std::size_t i = 0; i < pool.size(); ++i) r.layout[i] = index_of(pool[i].model_id);
  }
  r.chosen = daugs_select(solutions).chosen;
  std::vector<double> upp;
  for (const auto& s : solutions) upp.push_back(s.umap.u_pp);
  r.upp_hist = histogram(upp, bins);
  return r;
}

void write_pool_report(const std::filesystem::path& dir, const Case& c, const std::vector<SegmenterSpec>& pool,
                       const std::vector<SegmentationSolution>& solutions, const PoolReport& r) {
  const int w = c.series.width, h = c.series.height, gap = 2;
  const int W = r.cols * (w + gap) + gap, H = r.rows * (h + gap) + gap;

  std::vector<float> peak(c.series.frame_size(), 0.0f);
  for (int t = 0; t < c.series.n_frames; ++t)
    for (std::size_t i = 0; i < peak.size(); ++i) peak[i] = std::max(peak[i], c.series.frame(t)[i]);
  const float pmax = std::max(*std::max_element(peak.begin(), peak.end()), 1e-6f);

  std::vector<Rgb> masks(static_cast<std::size_t>(W) * H, Rgb{255, 255, 255});
  UncertaintyMap umaps;
  umaps.width = W;
  umaps.height = H;
  umaps.u.assign(static_cast<std::size_t>(W) * H, 0.0f);
  for (int cell = 0; cell < r.rows * r.cols; ++cell) {
    const int idx = r.layout[cell];
    if (idx < 0) continue;
    const SegmentationSolution& s = solutions[idx];
    const int ox = gap + (cell % r.cols) * (w + gap), oy = gap + (cell / r.cols) * (h + gap);
    const bool chosen = static_cast<std::size_t>(idx) == r.chosen;
    for (int y = -gap; y < h + gap; ++y)
      for (int x = -gap; x < w + gap; ++x) {
        const std::size_t o = static_cast<std::size_t>(oy + y) * W + ox + x;
        if (x < 0 || y < 0 || x >= w || y >= h) {
          if (chosen) masks[o] = {255, 200, 0};
          continue;
        }
        const auto g = static_cast<std::uint8_t>(std::clamp(peak[y * w + x] / pmax, 0.0f, 1.0f) * 200.0f);
        Rgb px{g, g, g};
        const std::uint8_t label = s.mask.at(x, y);
        if (label == kMyocardium) px = {static_cast<std::uint8_t>(128 + g / 2), static_cast<std::uint8_t>(g / 3), 0};
        if (label == kBloodpool) px = {0, static_cast<std::uint8_t>(g / 3), static_cast<std::uint8_t>(128 + g / 2)};
        masks[o] = px;
        if (!s.umap.u.empty()) umaps.u[o] = s.umap.at(x, y);
      }
  }
  write_ppm(dir / "pool_masks.ppm", W, H, masks);
  write_umap_pgm(dir / "pool_umaps.pgm", umaps);

  Csv csv;
  csv.header = {"row", "col", "model_id", "run_id", "checkpoint_id", "u_pp", "u_tot", "n_myo", "chosen"};
  std::map<int, const SegmenterSpec*> spec_of;
  for (const auto& p : pool) spec_of[p.model_id] = &p;
  for (int cell = 0; cell < r.rows * r.cols; ++cell) {
    const int idx = r.layout[cell];
    if (idx < 0) continue;
    const SegmentationSolution& s = solutions[idx];
    const SegmenterSpec* p = spec_of.at(s.model_id);
    csv.add({fmt(cell / r.cols), fmt(cell % r.cols), fmt(s.model_id), fmt(p->run_id), fmt(p->checkpoint_id),
             fmt(s.umap.u_pp), fmt(s.umap.u_tot), fmt(s.umap.n_myo), fmt(static_cast<std::size_t>(idx) == r.chosen)});
  }
  csv.write(dir / "pool_solutions.csv");
  write_text(dir / "pool_upp_hist.svg",
             svg_histogram("U_pp across the pool", "U_pp", r.upp_hist, solutions[r.chosen].umap.u_pp));
}

MetricCompareReport metric_variant_compare(const std::vector<CohortOutcomes>& cohorts) {
  MetricCompareReport rep;
  for (const CohortOutcomes& co : cohorts) {
    if (co.case_names.size() != co.outcomes.size()) throw DataError("metric compare: case names do not match");
    MetricCompareCohort sum;
    sum.cohort = co.name;
    sum.n = static_cast<int>(co.outcomes.size());
    for (std::size_t i = 0; i < co.outcomes.size(); ++i) {
      const ModelOutcome& a = pick(co.outcomes[i], UMetric::Upp);
      const ModelOutcome& b = pick(co.outcomes[i], UMetric::Utot);
      MetricCompareRow row{co.name,     co.case_names[i], a.model_id,  b.model_id,
                           a.n_myo,     b.n_myo,          a.dice_myo,  b.dice_myo,
                           !a.failure.noncontiguous_segments.empty(), !b.failure.noncontiguous_segments.empty()};
      sum.dice_upp += a.dice_myo;
      sum.dice_utot += b.dice_myo;
      sum.noncontiguous_upp += row.noncontiguous_upp;
      sum.noncontiguous_utot += row.noncontiguous_utot;
      if (a.model_id != b.model_id) sum.disagreements.push_back(co.case_names[i]);
      rep.rows.push_back(row);
    }
    if (sum.n > 0) {
      sum.dice_upp /= sum.n;
      sum.dice_utot /= sum.n;
    }
    rep.cohorts.push_back(std::move(sum));
  }
  return rep;
}

void write_metric_compare(const std::filesystem::path& dir, const MetricCompareReport& r) {
  Csv s;
  s.header = {"cohort", "n", "dice_mean_upp", "dice_mean_utot", "noncontiguous_upp", "noncontiguous_utot",
              "disagreements"};
  for (const auto& c : r.cohorts)
    s.add({c.cohort, fmt(c.n), fmt(c.dice_upp), fmt(c.dice_utot), fmt(c.noncontiguous_upp),
           fmt(c.noncontiguous_utot), fmt(static_cast<int>(c.disagreements.size()))});
  s.write(dir / "metric_compare.csv");

  Csv rows;
  rows.header = {"cohort", "case", "model_upp", "model_utot", "n_myo_upp", "n_myo_utot", "dice_upp", "dice_utot",
                 "noncontiguous_upp", "noncontiguous_utot", "disagree"};
  for (const auto& x : r.rows)
    rows.add({x.cohort, x.case_name, fmt(x.model_upp), fmt(x.model_utot), fmt(x.n_myo_upp), fmt(x.n_myo_utot),
              fmt(x.dice_upp), fmt(x.dice_utot), fmt(x.noncontiguous_upp), fmt(x.noncontiguous_utot),
              fmt(x.model_upp != x.model_utot)});
  rows.write(dir / "metric_compare_cases.csv");
}

}  // namespace daugs
