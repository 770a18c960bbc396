#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "daugs/harness.hpp"
#include "daugs/stats.hpp"
#include "daugs/tensor_io.hpp"
#include "fixtures.hpp"

using namespace daugs;

namespace {

const GridConfig kFast{64, 32, 16};

Case phantom_case(std::uint64_t id = 0) {
  auto c = gen_cohort(1, ShiftRegime::None, 1, id);
  return std::move(c[0].data);
}

SegmenterSpec perturbed(int id, double jitter, double noise = 0.0, double sens = 0.0) {
  SegmenterSpec s;
  s.kind = SegmenterKind::PerturbedOracle;
  s.model_id = id;
  s.perturb = {jitter, noise, sens};
  return s;
}

SegmenterSpec crashing(int id) {
  SegmenterSpec s;
  s.kind = SegmenterKind::External;
  s.model_id = id;
  s.external.command = std::string(DAUGS_FAKE_BACKEND) + " crash";
  return s;
}

SegmentationSolution with_upp(int id, double upp) {
  SegmentationSolution s;
  s.model_id = id;
  s.umap.u_pp = upp;
  s.umap.n_myo = 10;
  return s;
}

}  // namespace

TEST_SUITE("harness") {
  TEST_CASE("oracle solution is exact with zero uncertainty") {
    const Case c = phantom_case();
    const SegmentationSolution s = solve(SegmenterSpec{}, c, kFast, 1);
    CHECK(s.mask == c.truth);
    CHECK(s.umap.u_pp == 0.0);
    CHECK(s.umap.u_tot == 0.0);
    CHECK(s.umap.n_myo == static_cast<std::int64_t>(c.truth.count(kMyocardium)));
    const ModelOutcome o = evaluate_solution(s, c);
    CHECK(o.dice_myo == 1.0);
    CHECK(o.dice_bp == 1.0);
    CHECK(*o.hd95_mm == 0.0);
    CHECK_FALSE(o.failure.failed);
  }

  TEST_CASE("solve matches the explicit pipeline") {
    const Case c = phantom_case();
    const SegmenterSpec spec = perturbed(3, 1.0, 0.01);
    const SegmentationSolution s = solve(spec, c, kFast, 1);
    const CaseContext ctx{1, c.id, &c.truth, 0.0};
    auto seg = make_segmenter(spec, ctx, 64, c.series.n_frames);
    const PatchGrid rg = make_grid(128, 128, 64, 32), ug = make_grid(128, 128, 64, 16);
    const auto rp = segment_grid(*seg, c.series, rg);
    const auto up = segment_grid(*seg, c.series, ug);
    const ClassProbabilityMap mean = combine_mean(rp, rg);
    CHECK(s.mean_probs.probs == mean.probs);
    CHECK(s.mask == binarize_smap(mean));
    const UncertaintyMap u = compute_umap(up, ug, s.umap.n_myo);
    CHECK(s.umap.u == u.u);
    CHECK(s.umap.u_pp == u.u_pp);
    const SegmentationSolution lean = solve(spec, c, kFast, 1, false);
    CHECK(lean.mask == s.mask);
    CHECK(lean.umap.u.empty());
  }

  TEST_CASE("identical models give identical solutions") {
    const Case c = phantom_case();
    const auto a = solve(perturbed(4, 1.0, 0.02), c, kFast, 1);
    const auto b = solve(perturbed(4, 1.0, 0.02), c, kFast, 1);
    CHECK(a.umap.u == b.umap.u);
    CHECK(a.mask == b.mask);
  }

  TEST_CASE("grid validation") {
    const Case c = phantom_case();
    CHECK_THROWS_AS(solve(SegmenterSpec{}, c, GridConfig{256, 32, 4}, 1), DataError);
    CHECK_THROWS_AS(solve(SegmenterSpec{}, c, GridConfig{64, 0, 4}, 1), DataError);
  }

  TEST_CASE("backend crashes are isolated per model") {
    const Case c = phantom_case();
    const CaseRun run = run_case(c, {SegmenterSpec{}, crashing(1)}, kFast, 1, 2);
    REQUIRE(run.solutions.size() == 1);
    CHECK(run.solutions[0].model_id == 0);
    REQUIRE(run.failures.size() == 1);
    CHECK(run.failures[0].model_id == 1);
    CHECK(run.failures[0].kind == "backend terminated");
    CHECK_THROWS_AS(run_case(c, {crashing(0), crashing(1)}, kFast, 1, 1), BackendError);

    const OutcomeTable t = evaluate_pool({c}, {SegmenterSpec{}, crashing(1)}, kFast, 1, 1);
    CHECK(t[0][0].ok);
    CHECK_FALSE(t[0][1].ok);
  }

  TEST_CASE("established selection prefers the clean model") {
    std::vector<SegmenterSpec> pool = {perturbed(0, 2.0, 0.3), perturbed(1, 0.0), perturbed(2, 1.0, 0.1)};
    const int est = established_select(pool, {phantom_case(20000)}, kFast, 1, 1);
    CHECK(est == 1);
    CHECK(*pool[1].validation_dice == 1.0);
    CHECK(*pool[0].validation_dice < *pool[2].validation_dice);
  }

  TEST_CASE("candidate pool structure") {
    const auto pool = candidate_pool(1);
    REQUIRE(pool.size() == 60);
    CHECK(pool[13].run_id == 1);
    CHECK(pool[13].checkpoint_id == 1);
    CHECK(pool[13].model_id == 13);
    for (const auto& s : pool) {
      CHECK(s.perturb.boundary_jitter_px >= 0.3 * 0.7);
      CHECK(s.perturb.label_noise_rate < 0.01);
    }
    CHECK(candidate_pool(1)[7].perturb.shift_sensitivity == pool[7].perturb.shift_sensitivity);
    CHECK(candidate_pool(2)[7].perturb.shift_sensitivity != pool[7].perturb.shift_sensitivity);
  }

  TEST_CASE("ab experiment report structure") {
    std::vector<SegmenterSpec> pool = {perturbed(0, 0.5, 0.0, 2.0), perturbed(1, 1.0, 0.0, 0.2)};
    pool[0].validation_dice = 0.95;
    pool[1].validation_dice = 0.90;
    const std::vector<Case> internal = {phantom_case(0)};
    AbConfig cfg;
    cfg.grid = kFast;
    const AbReport r = experiment_ab(internal, {}, {}, pool, cfg, 1, 1);
    CHECK(r.established_model == 0);
    REQUIRE(r.summaries.size() == 2);
    CHECK(r.summaries[0].method == "established");
    CHECK(r.comparisons.size() == 1);
    CHECK(r.cases.rows.size() == 1);
    REQUIRE(r.warnings.size() == 1);
    CHECK(r.warnings[0].find("shifted") != std::string::npos);
    const auto dir = test::scratch_dir("ab");
    write_ab_report(dir, r);
    CHECK(read_csv(dir / "ab_summary.csv").rows.size() == 2);
    CHECK(std::filesystem::exists(dir / "ab_dice.svg"));
  }

  TEST_CASE("moco experiment shape") {
    MocoConfig cfg;
    cfg.f_max = 1;
    cfg.n_mc = 2;
    cfg.grid = kFast;
    const auto rows = experiment_moco(cfg, 1, 1);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].u_pp.size() == 2);
    CHECK(rows[0].u_pp[0] == rows[0].u_pp[1]);
    CHECK(rows[0].sd == 0.0);
    CHECK(rows[1].mean == doctest::Approx(mean_sd(rows[1].u_pp).mean));
    const auto dir = test::scratch_dir("moco");
    write_moco_report(dir, rows);
    CHECK(read_csv(dir / "moco.csv").rows.size() == 2);
  }

  TEST_CASE("pool layout follows runs and checkpoints") {
    auto pool = candidate_pool(1, 5, 10);
    std::reverse(pool.begin(), pool.end());
    std::vector<SegmentationSolution> sols;
    for (const auto& s : pool) sols.push_back(with_upp(s.model_id, 0.01 * (s.model_id % 7) + 0.001));
    const PoolReport r = pool_layout(pool, sols);
    CHECK(r.rows == 5);
    CHECK(r.cols == 10);
    for (int row = 0; row < 5; ++row)
      for (int col = 0; col < 10; ++col) CHECK(sols[r.layout[row * 10 + col]].model_id == row * 10 + col);
    CHECK(sols[r.chosen].model_id == 0);
    int total = 0;
    for (int n : r.upp_hist.counts) total += n;
    CHECK(total == 50);
  }

  TEST_CASE("unstructured pool layout and single-bin histogram") {
    std::vector<SegmenterSpec> pool(7);
    std::vector<SegmentationSolution> sols;
    for (int i = 0; i < 7; ++i) {
      pool[i].model_id = i;
      if (i != 3) sols.push_back(with_upp(i, 0.02));
    }
    const PoolReport r = pool_layout(pool, sols, 5);
    CHECK(r.rows == 3);
    CHECK(r.cols == 3);
    CHECK(r.layout[3] == -1);
    CHECK(r.layout[7] == -1);
    CHECK(r.layout[8] == -1);
    CHECK(r.upp_hist.counts[0] == 6);
    CHECK_THROWS_AS(pool_layout({pool[0]}, sols), DataError);

    const auto dir = test::scratch_dir("poolrep");
    const Case c = phantom_case();
    std::vector<SegmentationSolution> real;
    for (int i = 0; i < 7; ++i) {
      pool[i] = perturbed(i, 0.5 * i);
      if (i != 3) real.push_back(solve(pool[i], c, kFast, 1));
    }
    write_pool_report(dir, c, pool, real, pool_layout(pool, real));
    for (const char* f : {"pool_masks.ppm", "pool_umaps.pgm", "pool_solutions.csv", "pool_upp_hist.svg"})
      CHECK(std::filesystem::exists(dir / f));
  }

  TEST_CASE("metric comparison") {
    const auto fx = test::metric_fixture();
    CohortOutcomes co{"fixture", {fx.c.name}, {{}}};
    for (const auto& s : fx.solutions) co.outcomes[0].push_back(evaluate_solution(s, fx.c));
    const MetricCompareReport r = metric_variant_compare({co});
    REQUIRE(r.rows.size() == 1);
    CHECK(r.rows[0].model_upp == 0);
    CHECK(r.rows[0].model_utot == 1);
    CHECK(r.rows[0].noncontiguous_utot);
    CHECK_FALSE(r.rows[0].noncontiguous_upp);
    CHECK(r.rows[0].n_myo_upp > r.rows[0].n_myo_utot);
    CHECK(r.cohorts[0].disagreements == std::vector<std::string>{"ring"});

    CohortOutcomes same{"same", {"a"}, {{co.outcomes[0][0], co.outcomes[0][0]}}};
    same.outcomes[0][1].model_id = 5;
    const MetricCompareReport s = metric_variant_compare({same});
    CHECK(s.cohorts[0].disagreements.empty());
    CHECK(s.cohorts[0].dice_upp == s.cohorts[0].dice_utot);
  }
}
