#pragma once

// Segment-wise myocardial blood flow by Fermi-constrained deconvolution.

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "daugs/core.hpp"
#include "daugs/metrics.hpp"
#include "daugs/stats.hpp"

namespace daugs {

struct PerfusionCurves {
  std::vector<double> aif;
  std::array<std::vector<double>, 6> tissue;  // segment s + 1 at index s
  std::array<bool, 6> present{};              // false: segment had no pixels
  double dt_s = 1.0;
  int baseline_frames = 3;
};

// AIF = mean over the LV cavity, tissue[s] = mean over segment s + 1; each
// curve minus the mean of its first `baseline_frames` frames.
PerfusionCurves extract_curves(const ImageSeries& series, const LabelMask& mask, const SegmentLabels& segments,
                               int baseline_frames = 3);

// Impulse response R(t) = F / (1 + exp((t - w) / k)) applied to the AIF
// delayed by d seconds (linear interpolation, zero before the first frame):
//   model_i = dt * sum_{j <= i} aif_d(t_j) R(t_i - t_j)
struct FermiParams {
  double F = 0.0;
  double w = 0.0;
  double k = 1.0;
  double delay = 0.0;

  double impulse(double t) const;
  double r0() const { return impulse(0.0); }
};

std::vector<double> fermi_model(const FermiParams& p, const std::vector<double>& aif, double dt_s);

// Signal-to-concentration lookup: piecewise-linear, linear extrapolation at
// both ends. Two-column CSV (signal, concentration), strictly increasing.
struct Lut {
  std::vector<double> signal;
  std::vector<double> concentration;

  double operator()(double s) const;
  static Lut read(const std::filesystem::path& path);
};

struct FitOptions {
  double mbf_scale = 1.0;  // MBF = R(0) * mbf_scale
  int max_iterations = 500;
  double tolerance = 1e-8;
};

struct SegmentMbf {
  double mbf = 0.0;
  FermiParams params;
  double residual_rms = 0.0;
  double gradient_norm = 0.0;
  int iterations = 0;
  bool converged = false;
  std::vector<double> objective_trace;  // accepted iterates of the winning start
};

// Levenberg-Marquardt with a central-difference Jacobian and parameters
// projected onto their bounds, started from 4 fixed initialisations (F by
// linear least squares at each); the lowest residual wins. Stops when the
// step or the gradient falls below the tolerance or after max_iterations.
// Throws DataError for an all-zero AIF or a length mismatch.
SegmentMbf fermi_fit(const std::vector<double>& tissue, const std::vector<double>& aif, double dt_s,
                     const FitOptions& opts = {});

struct MbfResult {
  std::array<std::optional<SegmentMbf>, 6> segments;  // empty when omitted
  bool converged = true;
};

MbfResult quantify_mbf(const ImageSeries& series, const LabelMask& mask, Point rv_centroid,
                       const FitOptions& opts = {}, const Lut* lut = nullptr);

struct MbfMethodRow {
  std::string method;
  std::array<std::optional<double>, 6> mbf;  // empty when the segment is missing
  std::array<bool, 6> flagged{};              // segment of a failed mask
};

struct MbfTable {
  std::string case_name;
  std::vector<MbfMethodRow> rows;  // rows[0] is the reference ("manual")
};

// MBF per segment for the ground-truth mask and each method mask, each
// mask providing its own AIF and segments. Segments of a failed mask are
// flagged: all six for a bloodpool inclusion, the noncontiguous ones
// otherwise.
MbfTable mbf_table(const Case& c, const std::vector<std::pair<std::string, LabelMask>>& methods,
                   const FitOptions& opts = {}, const Lut* lut = nullptr);

struct MbfAgreement {
  std::string method;
  std::optional<Agreement> stats;  // needs >= 3 pairs with varying reference
  int n_pairs = 0;
  int n_excluded = 0;
  std::vector<double> reference, values;
};

// Pools segment pairs over cases; flagged or missing segments are excluded
// and counted.
std::vector<MbfAgreement> mbf_agreement(const std::vector<MbfTable>& tables);

void write_mbf_report(const std::filesystem::path& dir, const std::vector<MbfTable>& tables);

}  // namespace daugs
