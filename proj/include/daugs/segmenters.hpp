#pragma once

// Segmenter abstraction (space-time patch -> 3-class probabilities) and the
// built-in reference segmenters used to exercise the pipeline.

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "daugs/core.hpp"
#include "daugs/patching.hpp"
#include "daugs/rng.hpp"
#include "daugs/wire.hpp"

namespace daugs {

enum class SegmenterKind { Oracle, PerturbedOracle, CurveMatching, External };

std::string to_string(SegmenterKind kind);
SegmenterKind parse_segmenter_kind(const std::string& s);

struct PerturbParams {
  double boundary_jitter_px = 0.0;
  double label_noise_rate = 0.0;
  double shift_sensitivity = 0.0;
};

// Pixel curves are compared with three class prototypes (indexed by class
// code). Distances are weighted over time by the patch's own mean curve:
//
//   w_t = max(0, 1 + context_weight * (m_t - mean(m)) / s)
//   d_k = sqrt(sum_t w_t (c_t - P_k,t)^2 / sum_t w_t) / s
//
// with m the patch-mean curve and s the mean population std of the
// prototypes. Probabilities are softmax(-d / temperature).
struct CurveParams {
  std::array<std::vector<double>, kNumClasses> prototypes;
  double temperature = 0.25;
  double context_weight = 0.8;
};

struct ExternalParams {
  std::string command;
  double timeout_s = 30.0;
};

struct SegmenterSpec {
  SegmenterKind kind = SegmenterKind::Oracle;
  int model_id = 0;
  int run_id = -1;
  int checkpoint_id = -1;
  std::optional<double> validation_dice;
  PerturbParams perturb;
  CurveParams curve;
  ExternalParams external;

  void validate() const;
};

// What a segmenter may know about the case it is applied to. Oracle kinds
// read the (possibly shift-transformed) ground truth.
struct CaseContext {
  std::uint64_t seed = 0;
  std::uint64_t case_id = 0;
  const LabelMask* truth = nullptr;
  double shift_magnitude = 0.0;
};

class Segmenter {
 public:
  virtual ~Segmenter() = default;
  // Deterministic given (spec, patch contents, patch origin, case context).
  virtual PatchPrediction segment(const PatchView& patch) = 0;
  // Releases external resources; reports deferred backend failures.
  virtual void finish() {}
};

// One instance per (model, case). External kinds spawn their backend and
// complete the handshake here.
std::unique_ptr<Segmenter> make_segmenter(const SegmenterSpec& spec, const CaseContext& ctx,
                                          int patch_size, int n_frames);

PatchPrediction segment_patch(const SegmenterSpec& spec, const PatchView& patch, const CaseContext& ctx);

// Runs the segmenter over every grid origin, in grid order.
std::vector<PatchPrediction> segment_grid(Segmenter& seg, const ImageSeries& series, const PatchGrid& grid);

// One-hot probabilities for a window of labels (row-major, size x size).
PatchPrediction one_hot(std::span<const std::uint8_t> labels, int size);

// Flips each label with probability `rate` to one of the two other classes
// (chosen uniformly). Flip positions are drawn by geometric skipping.
std::vector<std::uint8_t> corrupt_labels(std::span<const std::uint8_t> labels, double rate, Rng& rng);

// Throws DataError when a prototype is empty, non-finite, of the wrong
// length or has zero variance.
void validate_prototypes(const CurveParams& params, int n_frames);

PatchPrediction curve_matching(const PatchView& patch, const CurveParams& params);

// Perturbed ground truth, one instance per (model, case). For each patch a
// stream keyed by (seed, case, model, origin) draws
//   - a boundary radius r ~ U(-(J + a), J + a): myocardium dilated (r > 0) or
//     eroded (r < 0) by |r| px, eroded pixels taking the nearer of
//     background / bloodpool;
//   - a translation of the labels by round(U(-1, 1) * kShiftTranslatePx * a)
//     per axis;
//   - per-pixel label flips at rate min(1, noise + kShiftNoise * a);
// where J = boundary_jitter_px and a = shift_magnitude * shift_sensitivity.
class PerturbedOracle : public Segmenter {
 public:
  static constexpr double kShiftTranslatePx = 3.0;
  static constexpr double kShiftNoise = 0.02;

  PerturbedOracle(const LabelMask& truth, const PerturbParams& params, std::uint64_t seed,
                  std::uint64_t case_id, int model_id, double shift_magnitude);
  PatchPrediction segment(const PatchView& patch) override;

  // Labels of the whole image morphed with boundary radius r (test hook).
  LabelMask morphed(double r) const;

 private:
  std::uint8_t morph_label(int x, int y, double r) const;

  const LabelMask& truth_;
  PerturbParams params_;
  std::uint64_t seed_;
  std::uint64_t case_id_;
  int model_id_;
  double severity_;
  std::vector<double> d2_myo_, d2_nonmyo_, d2_bp_, d2_bg_;
};

}  // namespace daugs
