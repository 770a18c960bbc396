#pragma once

// End-to-end pipeline per (case, model) and the experiments built on it.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "daugs/core.hpp"
#include "daugs/metrics.hpp"
#include "daugs/report.hpp"
#include "daugs/segmenters.hpp"
#include "daugs/selection.hpp"
#include "daugs/synth.hpp"

namespace daugs {

struct GridConfig {
  int patch = 64;
  int recon_stride = 32;
  int umap_stride = 2;

  void validate(int width, int height) const;
};

// One model on one case: patches on the reconstruction grid -> combine_mean
// -> binarize_smap, and the U-map on the U-map grid with n_myo from that
// mask. Predictions for origins shared by both grids are computed once.
// With with_umap = false only the reconstruction grid is segmented.
SegmentationSolution solve(const SegmenterSpec& spec, const Case& c, const GridConfig& grid, std::uint64_t seed,
                           bool with_umap = true);

struct ModelFailure {
  int model_id = 0;
  std::string kind;
  std::string message;
};

struct CaseRun {
  std::vector<SegmentationSolution> solutions;  // pool order, failed models skipped
  std::vector<ModelFailure> failures;
};

// Every pool member on one case. Backend errors are isolated per model; the
// call throws only when every model fails.
CaseRun run_case(const Case& c, const std::vector<SegmenterSpec>& pool, const GridConfig& grid, std::uint64_t seed,
                 int jobs);

// Scalar summary of one solution against the case ground truth.
struct ModelOutcome {
  int model_id = 0;
  bool ok = true;
  std::string error;
  double u_pp = kInfiniteUncertainty;
  double u_tot = 0.0;
  std::int64_t n_myo = 0;
  double dice_myo = 0.0;
  double dice_bp = 0.0;
  std::optional<double> hd95_mm;
  FailureReport failure;

  SelectionEntry entry() const { return {model_id, u_pp, u_tot, n_myo}; }
};

ModelOutcome evaluate_solution(const SegmentationSolution& s, const Case& c);

// outcomes[case][model] for every pair, computed in parallel over pairs.
using OutcomeTable = std::vector<std::vector<ModelOutcome>>;
OutcomeTable evaluate_pool(const std::vector<Case>& cases, const std::vector<SegmenterSpec>& pool,
                           const GridConfig& grid, std::uint64_t seed, int jobs, bool with_umap = true);

// Mean myocardial Dice per pool member over the validation cases, written
// into each spec's validation_dice. Returns the established model id.
int established_select(std::vector<SegmenterSpec>& pool, const std::vector<Case>& validation,
                       const GridConfig& grid, std::uint64_t seed, int jobs);

// Candidate pool: runs x candidates perturbed oracles with heterogeneous
// jitter, label noise and shift sensitivity (model_id = run * candidates + c).
std::vector<SegmenterSpec> candidate_pool(std::uint64_t seed, int runs = 5, int candidates = 12);

// Candidate pool scored on a seeded unshifted validation cohort and passed
// through checkpoint_filter.
FilterResult default_pool(std::uint64_t seed, const GridConfig& grid, int n_validation, int jobs);

struct AbConfig {
  int n_internal = 20;
  int n_shifted = 40;
  int n_validation = 10;
  GridConfig grid{64, 32, 4};
  UMetric metric = UMetric::Upp;
};

struct MethodSummary {
  std::string cohort;
  std::string method;
  int n = 0;
  double dice_mean = 0.0, dice_sd = 0.0;
  double hd95_mean = 0.0, hd95_sd = 0.0;
  int hd95_n = 0;
  int failures = 0;
};

struct CohortComparison {
  std::string cohort;
  int n = 0;
  double wilcoxon_p = 1.0;  // paired, Dice
  double fisher_p = 1.0;    // failure counts
};

struct AbReport {
  int established_model = 0;
  std::vector<SegmenterSpec> pool;
  std::vector<std::string> warnings;
  std::vector<MethodSummary> summaries;
  std::vector<CohortComparison> comparisons;
  Csv cases;  // one row per (cohort, case)
};

// Established (best validation Dice) vs DAUGS (per-case argmin of the
// uncertainty metric) on the internal and shifted cohorts.
AbReport experiment_ab(const std::vector<Case>& internal, const std::vector<Case>& shifted,
                       const std::vector<Case>& validation, std::vector<SegmenterSpec> pool, const AbConfig& cfg,
                       std::uint64_t seed, int jobs);

// Generates the cohorts and the filtered default pool, then runs experiment_ab.
AbReport run_abtest(const AbConfig& cfg, std::uint64_t seed, int jobs);

void write_ab_report(const std::filesystem::path& dir, const AbReport& r);

struct MocoRow {
  int f = 0;
  std::vector<double> u_pp;  // one per Monte Carlo run
  double mean = 0.0;
  double sd = 0.0;
};

struct MocoConfig {
  int f_max = 4;
  int n_mc = 30;
  GridConfig grid{64, 32, 4};
  CurveParams curve;  // prototypes default to the systolic class curves
};

std::vector<MocoRow> experiment_moco(const MocoConfig& cfg, std::uint64_t seed, int jobs);
void write_moco_report(const std::filesystem::path& dir, const std::vector<MocoRow>& rows);

// Curve-matching prototypes from the noise-free class curves of a spec.
CurveParams phantom_prototypes(const PhantomSpec& spec);

struct PoolReport {
  int rows = 0, cols = 0;
  std::vector<int> layout;  // model index per cell (row-major), -1 when empty
  std::size_t chosen = 0;
  Histogram upp_hist;
};

// Montage layout: one row per run with columns ordered by checkpoint when
// every member carries run/checkpoint ids, else a ceil(sqrt(n)) grid.
PoolReport pool_layout(const std::vector<SegmenterSpec>& pool, const std::vector<SegmentationSolution>& solutions,
                       int bins = 20);

void write_pool_report(const std::filesystem::path& dir, const Case& c, const std::vector<SegmenterSpec>& pool,
                       const std::vector<SegmentationSolution>& solutions, const PoolReport& r);

struct MetricCompareCohort {
  std::string cohort;
  int n = 0;
  double dice_upp = 0.0, dice_utot = 0.0;
  int noncontiguous_upp = 0, noncontiguous_utot = 0;
  std::vector<std::string> disagreements;  // case names
};

struct MetricCompareRow {
  std::string cohort;
  std::string case_name;
  int model_upp = 0, model_utot = 0;
  std::int64_t n_myo_upp = 0, n_myo_utot = 0;
  double dice_upp = 0.0, dice_utot = 0.0;
  bool noncontiguous_upp = false, noncontiguous_utot = false;
};

struct MetricCompareReport {
  std::vector<MetricCompareCohort> cohorts;
  std::vector<MetricCompareRow> rows;
};

struct CohortOutcomes {
  std::string name;
  std::vector<std::string> case_names;
  OutcomeTable outcomes;
};

MetricCompareReport metric_variant_compare(const std::vector<CohortOutcomes>& cohorts);
void write_metric_compare(const std::filesystem::path& dir, const MetricCompareReport& r);

}  // namespace daugs
