#include "daugs/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "daugs/harness.hpp"
#include "daugs/parallel.hpp"
#include "daugs/perfusion.hpp"
#include "daugs/preprocess.hpp"
#include "daugs/tensor_io.hpp"

namespace daugs::cli {

namespace fs = std::filesystem;
namespace pt = boost::property_tree;

std::array<std::vector<double>, kNumClasses> read_prototypes(const fs::path& path) {
  std::ifstream f(path);
  if (!f) throw DataError("cannot open prototypes: " + path.string());
  std::array<std::vector<double>, kNumClasses> out;
  std::string line;
  std::size_t row = 0;
  while (std::getline(f, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    if (row >= kNumClasses) throw DataError("prototype file has more than three rows: " + path.string());
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) out[row].push_back(parse_double(cell));
    ++row;
  }
  if (row != kNumClasses) throw DataError("prototype file needs three rows: " + path.string());
  return out;
}

void write_prototypes(const fs::path& path, const std::array<std::vector<double>, kNumClasses>& p) {
  std::string text;
  for (const auto& row : p) {
    for (std::size_t t = 0; t < row.size(); ++t) text += (t ? "," : "") + fmt(row[t]);
    text += '\n';
  }
  write_text(path, text);
}

std::vector<SegmenterSpec> read_pool_cfg(const fs::path& path) {
  pt::ptree tree;
  try {
    pt::read_ini(path.string(), tree);
  } catch (const pt::ini_parser_error& e) {
    throw DataError(std::string("pool config: ") + e.what());
  }
  std::vector<SegmenterSpec> pool;
  for (const auto& [section, node] : tree) {
    try {
      SegmenterSpec s;
      s.kind = parse_segmenter_kind(node.get<std::string>("kind"));
      s.model_id = node.get<int>("model_id");
      s.run_id = node.get("run_id", -1);
      s.checkpoint_id = node.get("checkpoint_id", -1);
      if (auto v = node.get_optional<double>("validation_dice")) s.validation_dice = *v;
      s.perturb.boundary_jitter_px = node.get("boundary_jitter_px", 0.0);
      s.perturb.label_noise_rate = node.get("label_noise_rate", 0.0);
      s.perturb.shift_sensitivity = node.get("shift_sensitivity", 0.0);
      s.curve.temperature = node.get("temperature", s.curve.temperature);
      s.curve.context_weight = node.get("context_weight", s.curve.context_weight);
      if (auto p = node.get_optional<std::string>("prototypes")) {
        const fs::path proto = fs::path(*p).is_absolute() ? fs::path(*p) : path.parent_path() / *p;
        s.curve.prototypes = read_prototypes(proto);
      }
      s.external.command = node.get("command", std::string{});
      s.external.timeout_s = node.get("timeout_s", s.external.timeout_s);
      if (s.kind == SegmenterKind::CurveMatching && s.curve.prototypes[0].empty()) {
        const CurveParams proto = phantom_prototypes(PhantomSpec{});
        s.curve.prototypes = proto.prototypes;
      }
      s.validate();
      pool.push_back(std::move(s));
    } catch (const pt::ptree_error& e) {
      throw DataError("pool config section [" + section + "]: " + e.what());
    }
  }
  if (pool.empty()) throw DataError("pool config lists no models: " + path.string());
  return pool;
}

void write_pool_cfg(const fs::path& path, const std::vector<SegmenterSpec>& pool) {
  std::string text;
  for (const SegmenterSpec& s : pool) {
    text += "[model" + std::to_string(s.model_id) + "]\n";
    text += "kind = " + to_string(s.kind) + "\n";
    text += "model_id = " + fmt(s.model_id) + "\n";
    if (s.run_id >= 0) text += "run_id = " + fmt(s.run_id) + "\n";
    if (s.checkpoint_id >= 0) text += "checkpoint_id = " + fmt(s.checkpoint_id) + "\n";
    if (s.validation_dice) text += "validation_dice = " + fmt(*s.validation_dice) + "\n";
    switch (s.kind) {
      case SegmenterKind::Oracle: break;
      case SegmenterKind::PerturbedOracle:
        text += "boundary_jitter_px = " + fmt(s.perturb.boundary_jitter_px) + "\n";
        text += "label_noise_rate = " + fmt(s.perturb.label_noise_rate) + "\n";
        text += "shift_sensitivity = " + fmt(s.perturb.shift_sensitivity) + "\n";
        break;
      case SegmenterKind::CurveMatching: {
        const std::string name = path.stem().string() + "_model" + std::to_string(s.model_id) + "_prototypes.csv";
        write_prototypes(path.parent_path() / name, s.curve.prototypes);
        text += "prototypes = " + name + "\n";
        text += "temperature = " + fmt(s.curve.temperature) + "\n";
        text += "context_weight = " + fmt(s.curve.context_weight) + "\n";
        break;
      }
      case SegmenterKind::External:
        text += "command = " + s.external.command + "\n";
        text += "timeout_s = " + fmt(s.external.timeout_s) + "\n";
        break;
    }
    text += "\n";
  }
  write_text(path, text);
}

namespace {

struct Globals {
  std::uint64_t seed = 1;
  int jobs = default_jobs();
  std::string out = "out";
  int umap_stride = 2;
  int recon_stride = 32;
  int patch = 64;
  std::string metric = "upp";
  std::vector<std::string> backends;
  std::string pool;
  bool umap_stride_set = false;
};

GridConfig grid_of(const Globals& g, int experiment_umap_stride = 0) {
  GridConfig grid{g.patch, g.recon_stride, g.umap_stride};
  if (experiment_umap_stride > 0 && !g.umap_stride_set) grid.umap_stride = experiment_umap_stride;
  return grid;
}

// --pool file, else the default filtered pool; --backend entries are appended
// as external members with fresh ids.
std::vector<SegmenterSpec> load_pool(const Globals& g, const GridConfig& grid, std::vector<std::string>& warnings) {
  std::vector<SegmenterSpec> pool;
  if (!g.pool.empty()) {
    pool = read_pool_cfg(g.pool);
  } else if (g.backends.empty()) {
    FilterResult f = default_pool(g.seed, grid, 10, g.jobs);
    warnings = f.warnings;
    pool = std::move(f.kept);
  }
  int next = 0;
  for (const auto& s : pool) next = std::max(next, s.model_id + 1);
  for (const auto& cmd : g.backends) {
    SegmenterSpec s;
    s.kind = SegmenterKind::External;
    s.model_id = next++;
    s.external.command = cmd;
    pool.push_back(s);
  }
  return pool;
}

fs::path model_dir(const fs::path& run_dir, const std::string& case_name, int model_id) {
  return run_dir / "cases" / case_name / ("model_" + std::to_string(model_id));
}

struct StoredSolution {
  int model_id = 0;
  LabelMask mask;
  UncertaintyMap umap;
};

// Solutions persisted by `run`, in ascending model id.
std::vector<StoredSolution> load_solutions(const fs::path& run_dir, const std::string& case_name) {
  const fs::path dir = run_dir / "cases" / case_name;
  if (!fs::is_directory(dir)) throw DataError("no solutions for case " + case_name + " under " + run_dir.string());
  std::vector<StoredSolution> out;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const std::string name = entry.path().filename().string();
    if (!entry.is_directory() || name.rfind("model_", 0) != 0) continue;
    StoredSolution s;
    s.model_id = static_cast<int>(parse_int(name.substr(6)));
    s.mask = mask_from_tensor(read_fpt(entry.path() / "mask.fpt"));
    const Tensor u = read_fpt(entry.path() / "umap.fpt");
    if (u.dtype != DType::F32 || u.dims.size() != 2) throw DataError("umap tensor must be f32 [H, W]");
    s.umap.height = static_cast<int>(u.dims[0]);
    s.umap.width = static_cast<int>(u.dims[1]);
    s.umap.u = u.f32;
    s.umap.n_myo = static_cast<std::int64_t>(s.mask.count(kMyocardium));
    const UMetrics m = u_metrics(s.umap);
    s.umap.u_pp = m.u_pp;
    s.umap.u_tot = m.u_tot;
    out.push_back(std::move(s));
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.model_id < b.model_id; });
  if (out.empty()) throw DataError("no model solutions for case " + case_name);
  return out;
}

std::vector<std::string> case_dirs(const fs::path& run_dir) {
  std::vector<std::string> names;
  const fs::path dir = run_dir / "cases";
  if (!fs::is_directory(dir)) throw DataError("not a run directory: " + run_dir.string());
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_directory()) names.push_back(e.path().filename().string());
  std::sort(names.begin(), names.end());
  return names;
}

Csv cmd_phantom(const Globals& g, int n, const std::string& regime, std::uint64_t first_id) {
  const auto cohort = gen_cohort(n, parse_regime(regime), g.seed, first_id, g.jobs);
  write_cohort(g.out, cohort, g.seed);
  Csv s;
  s.header = {"id", "name", "regime", "shift_magnitude"};
  for (const auto& c : cohort)
    s.add({fmt(static_cast<std::int64_t>(c.data.id)), c.data.name, to_string(c.regime), fmt(c.data.shift_magnitude)});
  return s;
}

Csv cmd_preprocess(const Globals& g, const std::string& input, double dt, const std::vector<double>& center,
                   int size, int frames, bool no_upsample, double dx, double dy, const std::string& output) {
  const ImageSeries raw = series_from_tensor(read_fpt(input), dt, Spacing{dx, dy});
  PreprocessOptions opts;
  opts.crop.size = size;
  opts.crop.upsample_first = !no_upsample;
  opts.n_frames = frames;
  if (!center.empty()) {
    if (center.size() != 2) throw DataError("--center takes x,y");
    opts.center = Point{center[0], center[1]};
  }
  const ImageSeries out = preprocess(raw, opts);
  write_fpt(fs::path(g.out) / output, to_tensor(out));
  Csv s;
  s.header = {"input", "output", "width", "height", "frames", "dt_s", "dx_mm", "dy_mm"};
  s.add({input, output, fmt(out.width), fmt(out.height), fmt(out.n_frames), fmt(out.mean_dt()), fmt(out.spacing.dx),
         fmt(out.spacing.dy)});
  return s;
}

Csv cmd_run(const Globals& g, const std::string& manifest, std::vector<std::string>& warnings) {
  const GridConfig grid = grid_of(g);
  const auto cases = read_manifest(manifest);
  const auto pool = load_pool(g, grid, warnings);
  write_pool_cfg(fs::path(g.out) / "pool.cfg", pool);
  Csv s;
  s.header = {"case", "model_id", "status", "u_pp", "u_tot", "n_myo", "chosen", "error"};
  const UMetric metric = parse_umetric(g.metric);
  for (const Case& c : cases) {
    const CaseRun run = run_case(c, pool, grid, g.seed, g.jobs);
    const Selection sel = daugs_select(run.solutions, metric);
    std::vector<SelectionEntry> entries;
    for (std::size_t i = 0; i < run.solutions.size(); ++i) {
      const SegmentationSolution& sol = run.solutions[i];
      const fs::path dir = model_dir(g.out, c.name, sol.model_id);
      fs::create_directories(dir);
      write_fpt(dir / "probs.fpt", to_tensor(sol.mean_probs));
      write_fpt(dir / "mask.fpt", to_tensor(sol.mask));
      write_fpt(dir / "umap.fpt", to_tensor(sol.umap));
      entries.push_back(selection_entry(sol));
      s.add({c.name, fmt(sol.model_id), "ok", fmt(sol.umap.u_pp), fmt(sol.umap.u_tot), fmt(sol.umap.n_myo),
             fmt(i == sel.chosen), ""});
    }
    for (const ModelFailure& f : run.failures) {
      s.add({c.name, fmt(f.model_id), "failed", "", "", "", "0", f.kind});
      warnings.push_back(c.name + " model " + std::to_string(f.model_id) + ": " + f.message);
    }
    write_selection_csv(fs::path(g.out) / "cases" / c.name / "solutions.csv", entries, sel);
  }
  return s;
}

Csv cmd_select(const Globals& g, const std::string& run_dir, const std::string& method) {
  const UMetric metric = parse_umetric(g.metric);
  std::optional<int> established;
  if (method == "established") {
    if (g.pool.empty()) throw DataError("established selection needs --pool with validation_dice entries");
    established = established_choice(read_pool_cfg(g.pool));
  }
  Csv s;
  s.header = {"case", "method", "metric", "model_id", "u_pp", "u_tot", "n_myo"};
  for (const std::string& name : case_dirs(run_dir)) {
    const auto sols = load_solutions(run_dir, name);
    std::size_t chosen = 0;
    if (established) {
      const auto it = std::find_if(sols.begin(), sols.end(), [&](const auto& x) { return x.model_id == *established; });
      if (it == sols.end()) throw DataError("established model has no solution for case " + name);
      chosen = static_cast<std::size_t>(it - sols.begin());
    } else {
      std::vector<SelectionEntry> entries;
      for (const auto& x : sols) entries.push_back({x.model_id, x.umap.u_pp, x.umap.u_tot, x.umap.n_myo});
      chosen = daugs_select(entries, metric).chosen;
    }
    const StoredSolution& x = sols[chosen];
    s.add({name, method, established ? "" : g.metric, fmt(x.model_id), fmt(x.umap.u_pp), fmt(x.umap.u_tot),
           fmt(x.umap.n_myo)});
  }
  return s;
}

std::map<std::string, std::vector<std::pair<std::string, int>>> read_selection(const std::string& path) {
  std::map<std::string, std::vector<std::pair<std::string, int>>> out;
  if (path.empty()) return out;
  const Csv sel = read_csv(path);
  for (std::size_t r = 0; r < sel.rows.size(); ++r)
    out[sel.cell(r, "case")].push_back({sel.cell(r, "method"), static_cast<int>(parse_int(sel.cell(r, "model_id")))});
  return out;
}

Csv cmd_eval(const std::string& manifest, const std::string& run_dir, const std::string& selection) {
  const auto picks = read_selection(selection);
  Csv s;
  s.header = {"case", "model_id", "selected_by", "dice_myo", "dice_bp", "hd95_mm", "failed", "bloodpool_inclusion",
              "noncontiguous_segments"};
  for (const Case& c : read_manifest(manifest)) {
    for (const auto& x : load_solutions(run_dir, c.name)) {
      SegmentationSolution sol;
      sol.model_id = x.model_id;
      sol.mask = x.mask;
      sol.umap = x.umap;
      const ModelOutcome o = evaluate_solution(sol, c);
      std::string by;
      if (auto it = picks.find(c.name); it != picks.end())
        for (const auto& [method, id] : it->second)
          if (id == x.model_id) by += (by.empty() ? "" : ";") + method;
      std::string segs;
      for (int seg : o.failure.noncontiguous_segments) segs += (segs.empty() ? "" : ";") + std::to_string(seg);
      s.add({c.name, fmt(o.model_id), by, fmt(o.dice_myo), fmt(o.dice_bp), o.hd95_mm ? fmt(*o.hd95_mm) : "",
             fmt(o.failure.failed), fmt(o.failure.bloodpool_inclusion), segs});
    }
  }
  return s;
}

Csv cmd_mbf(const Globals& g, const std::string& manifest, const std::string& run_dir, const std::string& selection,
            const std::string& lut_path, double mbf_scale) {
  const auto picks = read_selection(selection);
  std::optional<Lut> lut;
  if (!lut_path.empty()) lut = Lut::read(lut_path);
  FitOptions opts;
  opts.mbf_scale = mbf_scale;
  std::vector<MbfTable> tables;
  for (const Case& c : read_manifest(manifest)) {
    const auto sols = load_solutions(run_dir, c.name);
    std::vector<std::pair<std::string, LabelMask>> methods;
    auto it = picks.find(c.name);
    if (it != picks.end()) {
      for (const auto& [method, id] : it->second) {
        const auto s = std::find_if(sols.begin(), sols.end(), [&](const auto& x) { return x.model_id == id; });
        if (s == sols.end()) throw DataError("selected model has no solution for case " + c.name);
        methods.push_back({method, s->mask});
      }
    } else {
      for (const auto& x : sols) methods.push_back({"model_" + std::to_string(x.model_id), x.mask});
    }
    tables.push_back(mbf_table(c, methods, opts, lut ? &*lut : nullptr));
  }
  write_mbf_report(g.out, tables);
  Csv s;
  s.header = {"case", "method", "segment", "mbf", "flagged"};
  for (const MbfTable& t : tables)
    for (const MbfMethodRow& r : t.rows)
      for (int k = 0; k < 6; ++k)
        s.add({t.case_name, r.method, fmt(k + 1), r.mbf[k] ? fmt(*r.mbf[k]) : "", fmt(r.flagged[k])});
  return s;
}

Csv cmd_mocosim(const Globals& g, int f_max, int n_mc, double temperature, double context_weight) {
  MocoConfig cfg;
  cfg.curve.temperature = temperature;
  cfg.curve.context_weight = context_weight;
  cfg.f_max = f_max;
  cfg.n_mc = n_mc;
  cfg.grid = grid_of(g, 4);
  const auto rows = experiment_moco(cfg, g.seed, g.jobs);
  write_moco_report(g.out, rows);
  Csv s;
  s.header = {"f", "u_pp_mean", "u_pp_sd"};
  for (const auto& r : rows) s.add({fmt(r.f), fmt(r.mean), fmt(r.sd)});
  return s;
}

Csv cmd_abtest(const Globals& g, int n_internal, int n_shifted, int n_validation, std::vector<std::string>& warnings) {
  AbConfig cfg;
  cfg.n_internal = n_internal;
  cfg.n_shifted = n_shifted;
  cfg.n_validation = n_validation;
  cfg.grid = grid_of(g, 4);
  cfg.metric = parse_umetric(g.metric);
  AbReport r;
  if (g.pool.empty() && g.backends.empty()) {
    r = run_abtest(cfg, g.seed, g.jobs);
  } else {
    auto cohort = [&](int n, ShiftRegime regime, std::uint64_t first) {
      std::vector<Case> out;
      if (n > 0)
        for (auto& c : gen_cohort(n, regime, g.seed, first, g.jobs)) out.push_back(std::move(c.data));
      return out;
    };
    std::vector<std::string> unused;
    r = experiment_ab(cohort(n_internal, ShiftRegime::None, 0), cohort(n_shifted, ShiftRegime::Shifted, 10000),
                      cohort(n_validation, ShiftRegime::None, 20000), load_pool(g, cfg.grid, unused), cfg, g.seed,
                      g.jobs);
  }
  write_ab_report(g.out, r);
  warnings.insert(warnings.end(), r.warnings.begin(), r.warnings.end());
  Csv s;
  s.header = {"cohort", "method", "n", "dice_mean", "dice_sd", "failures", "wilcoxon_p_dice", "fisher_p_failures"};
  for (const MethodSummary& m : r.summaries) {
    const auto c = std::find_if(r.comparisons.begin(), r.comparisons.end(),
                                [&](const CohortComparison& x) { return x.cohort == m.cohort; });
    s.add({m.cohort, m.method, fmt(m.n), fmt(m.dice_mean), fmt(m.dice_sd), fmt(m.failures), fmt(c->wilcoxon_p),
           fmt(c->fisher_p)});
  }
  return s;
}

Csv cmd_poolreport(const Globals& g, const std::string& manifest, const std::string& case_name,
                   std::vector<std::string>& warnings) {
  const GridConfig grid = grid_of(g);
  const auto cases = read_manifest(manifest);
  if (cases.empty()) throw DataError("empty manifest");
  auto it = cases.begin();
  if (!case_name.empty()) {
    it = std::find_if(cases.begin(), cases.end(), [&](const Case& c) { return c.name == case_name; });
    if (it == cases.end()) throw DataError("case not in manifest: " + case_name);
  }
  const auto pool = load_pool(g, grid, warnings);
  const CaseRun run = run_case(*it, pool, grid, g.seed, g.jobs);
  for (const ModelFailure& f : run.failures)
    warnings.push_back("model " + std::to_string(f.model_id) + ": " + f.message);
  const PoolReport r = pool_layout(pool, run.solutions);
  write_pool_report(g.out, *it, pool, run.solutions, r);
  Csv s;
  s.header = {"case", "rows", "cols", "models", "chosen_model", "chosen_u_pp"};
  s.add({it->name, fmt(r.rows), fmt(r.cols), fmt(static_cast<int>(run.solutions.size())),
         fmt(run.solutions[r.chosen].model_id), fmt(run.solutions[r.chosen].umap.u_pp)});
  return s;
}

Csv cmd_metriccompare(const Globals& g, const std::vector<std::string>& manifests, int n_internal, int n_shifted,
                      std::vector<std::string>& warnings) {
  const GridConfig grid = grid_of(g, 4);
  std::vector<std::pair<std::string, std::vector<Case>>> cohorts;
  if (manifests.empty()) {
    auto gen = [&](int n, ShiftRegime regime, std::uint64_t first) {
      std::vector<Case> out;
      if (n > 0)
        for (auto& c : gen_cohort(n, regime, g.seed, first, g.jobs)) out.push_back(std::move(c.data));
      return out;
    };
    cohorts.push_back({"internal", gen(n_internal, ShiftRegime::None, 0)});
    cohorts.push_back({"shifted", gen(n_shifted, ShiftRegime::Shifted, 10000)});
  } else {
    for (const auto& m : manifests) cohorts.push_back({fs::path(m).parent_path().filename().string(), read_manifest(m)});
  }
  const auto pool = load_pool(g, grid, warnings);
  std::vector<CohortOutcomes> outcomes;
  for (const auto& [name, cases] : cohorts) {
    CohortOutcomes co;
    co.name = name;
    for (const Case& c : cases) co.case_names.push_back(c.name);
    co.outcomes = evaluate_pool(cases, pool, grid, g.seed, g.jobs);
    outcomes.push_back(std::move(co));
  }
  const MetricCompareReport r = metric_variant_compare(outcomes);
  write_metric_compare(g.out, r);
  Csv s;
  s.header = {"cohort", "n", "dice_mean_upp", "dice_mean_utot", "noncontiguous_upp", "noncontiguous_utot",
              "disagreements"};
  for (const auto& c : r.cohorts)
    s.add({c.cohort, fmt(c.n), fmt(c.dice_upp), fmt(c.dice_utot), fmt(c.noncontiguous_upp), fmt(c.noncontiguous_utot),
           fmt(static_cast<int>(c.disagreements.size()))});
  return s;
}

}  // namespace

int dispatch(int argc, char** argv) {
  CLI::App app{"DAUGS: uncertainty-guided selection of myocardial perfusion segmentations", "daugs"};
  app.require_subcommand(1);
  app.set_config("--config", "", "INI config file; command-line flags take precedence");

  Globals g;
  app.add_option("--seed", g.seed, "Master seed")->capture_default_str();
  app.add_option("--jobs", g.jobs, "Worker threads")->check(CLI::PositiveNumber)->capture_default_str();
  app.add_option("--out", g.out, "Output directory")->capture_default_str();
  auto* umap_opt =
      app.add_option("--umap-stride", g.umap_stride, "U-map patch stride")->check(CLI::PositiveNumber)->capture_default_str();
  app.add_option("--recon-stride", g.recon_stride, "Reconstruction stride")->check(CLI::PositiveNumber)->capture_default_str();
  app.add_option("--patch", g.patch, "Patch size")->check(CLI::PositiveNumber)->capture_default_str();
  app.add_option("--metric", g.metric, "Selection metric")->check(CLI::IsMember({"upp", "utot"}))->capture_default_str();
  app.add_option("--backend", g.backends, "External backend command (repeatable)");
  app.add_option("--pool", g.pool, "pool.cfg");

  auto sub = [&](const char* name, const char* desc) {
    CLI::App* s = app.add_subcommand(name, desc);
    s->fallthrough();
    return s;
  };

  int n = 10;
  std::string regime = "none";
  std::uint64_t first_id = 0;
  auto* phantom = sub("phantom", "Generate a synthetic cohort with manifest");
  phantom->add_option("--n", n, "Number of cases")->check(CLI::PositiveNumber)->capture_default_str();
  phantom->add_option("--regime", regime, "none | shifted")->check(CLI::IsMember({"none", "shifted"}))->capture_default_str();
  phantom->add_option("--first-id", first_id, "First case id")->capture_default_str();

  std::string input, output = "preprocessed.fpt";
  double dt = 1.0, dx = 1.0, dy = 1.0;
  std::vector<double> center;
  int size = 128, frames = 30;
  bool no_upsample = false;
  auto* pre = sub("preprocess", "Upsample, crop, resample and normalize a raw series");
  pre->add_option("--input", input, "Raw series (FPT, [T, H, W])")->required();
  pre->add_option("--output", output, "Output file name inside --out")->capture_default_str();
  pre->add_option("--dt", dt, "Frame spacing in seconds")->capture_default_str();
  pre->add_option("--dx", dx, "Pixel spacing x (mm)")->capture_default_str();
  pre->add_option("--dy", dy, "Pixel spacing y (mm)")->capture_default_str();
  pre->add_option("--center", center, "ROI centre x,y after upsampling")->delimiter(',')->expected(2);
  pre->add_option("--size", size, "ROI size")->check(CLI::PositiveNumber)->capture_default_str();
  pre->add_option("--frames", frames, "Output frame count")->check(CLI::PositiveNumber)->capture_default_str();
  pre->add_flag("--no-upsample", no_upsample, "Skip 2x upsampling");

  std::string manifest, run_dir, method = "daugs", selection, lut;
  auto* run = sub("run", "Segment every case of a manifest with every pool member");
  run->add_option("--manifest", manifest, "Cohort manifest.csv")->required();

  auto* select = sub("select", "Choose one solution per case");
  select->add_option("--run-dir", run_dir, "Output directory of `run`")->required();
  select->add_option("--method", method, "daugs | established")
      ->check(CLI::IsMember({"daugs", "established"}))
      ->capture_default_str();

  auto* eval = sub("eval", "Dice, HD95 and failure detection against the ground truth");
  eval->add_option("--manifest", manifest, "Cohort manifest.csv")->required();
  eval->add_option("--run-dir", run_dir, "Output directory of `run`")->required();
  eval->add_option("--selection", selection, "summary.csv of `select`");

  double mbf_scale = 1.0;
  auto* mbf = sub("mbf", "Per-segment Fermi MBF for the manual and automated masks");
  mbf->add_option("--manifest", manifest, "Cohort manifest.csv")->required();
  mbf->add_option("--run-dir", run_dir, "Output directory of `run`")->required();
  mbf->add_option("--selection", selection, "summary.csv of `select` (default: every model)");
  mbf->add_option("--lut", lut, "Signal-to-concentration table (CSV)");
  mbf->add_option("--mbf-scale", mbf_scale, "MBF = R(0) * scale")->capture_default_str();

  int f_max = 4, n_mc = 30;
  auto* moco = sub("mocosim", "Uncertainty vs number of motion-corrupted frames");
  moco->add_option("--f-max", f_max, "Largest number of swapped frames")->check(CLI::Range(0, 15))->capture_default_str();
  moco->add_option("--n-mc", n_mc, "Monte Carlo runs per f")->check(CLI::PositiveNumber)->capture_default_str();
  double temperature = CurveParams{}.temperature, context_weight = CurveParams{}.context_weight;
  moco->add_option("--temperature", temperature, "Curve-matching softmax temperature")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  moco->add_option("--context-weight", context_weight, "Curve-matching context weight")->capture_default_str();

  int n_internal = 20, n_shifted = 40, n_validation = 10;
  auto* ab = sub("abtest", "Established vs DAUGS on unshifted and shifted cohorts");
  ab->add_option("--n-internal", n_internal, "Unshifted test cases")->check(CLI::NonNegativeNumber)->capture_default_str();
  ab->add_option("--n-shifted", n_shifted, "Shifted test cases")->check(CLI::NonNegativeNumber)->capture_default_str();
  ab->add_option("--n-validation", n_validation, "Validation cases")->check(CLI::PositiveNumber)->capture_default_str();

  std::string case_name;
  auto* poolrep = sub("poolreport", "Montage and U_pp histogram of every pool solution on one case");
  poolrep->add_option("--manifest", manifest, "Cohort manifest.csv")->required();
  poolrep->add_option("--case", case_name, "Case name (default: first)");

  std::vector<std::string> manifests;
  auto* mc = sub("metriccompare", "Selections under U_pp vs U_tot");
  mc->add_option("--manifest", manifests, "Cohort manifest (repeatable; default: generated cohorts)");
  mc->add_option("--n-internal", n_internal, "Generated unshifted cases")->capture_default_str();
  mc->add_option("--n-shifted", n_shifted, "Generated shifted cases")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    if (code == 0) return 0;
    std::cerr << app.help();
    return 1;
  }
  g.umap_stride_set = umap_opt->count() > 0;

  try {
    const fs::path out(g.out);
    fs::create_directories(out);
    std::vector<std::string> warnings;
    Csv summary;
    if (phantom->parsed()) summary = cmd_phantom(g, n, regime, first_id);
    else if (pre->parsed()) summary = cmd_preprocess(g, input, dt, center, size, frames, no_upsample, dx, dy, output);
    else if (run->parsed()) summary = cmd_run(g, manifest, warnings);
    else if (select->parsed()) summary = cmd_select(g, run_dir, method);
    else if (eval->parsed()) summary = cmd_eval(manifest, run_dir, selection);
    else if (mbf->parsed()) summary = cmd_mbf(g, manifest, run_dir, selection, lut, mbf_scale);
    else if (moco->parsed()) summary = cmd_mocosim(g, f_max, n_mc, temperature, context_weight);
    else if (ab->parsed()) summary = cmd_abtest(g, n_internal, n_shifted, n_validation, warnings);
    else if (poolrep->parsed()) summary = cmd_poolreport(g, manifest, case_name, warnings);
    else if (mc->parsed()) summary = cmd_metriccompare(g, manifests, n_internal, n_shifted, warnings);
    summary.write(out / "summary.csv");
    write_text(out / "config.ini", app.config_to_str(true, false));
    write_text(out / "format.txt", "daugs-output 1\nfpt 1\ndaugs-wire 1\n");
    std::string w;
    for (const auto& line : warnings) {
      std::cerr << "warning: " << line << '\n';
      w += line + '\n';
    }
    if (!warnings.empty()) write_text(out / "warnings.txt", w);
    return 0;
  } catch (const BackendError& e) {
    std::cerr << "backend error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}

}  // namespace daugs::cli
