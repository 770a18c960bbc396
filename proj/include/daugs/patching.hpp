#pragma once

// Space-time patch extraction, recombination of per-patch class
// probabilities into full-ROI maps, and the pixel-wise uncertainty map.

#include <cstddef>
#include <filesystem>
#include <vector>

#include "daugs/core.hpp"

namespace daugs {

// Origins at multiples of `stride` per axis, plus an edge-aligned origin
// when (dim - patch) is not a stride multiple.
PatchGrid make_grid(int h, int w, int patch, int stride);

// Read-only window over a space-time volume (x fastest, then y, then t).
struct PatchView {
  const float* base = nullptr;  // element (0, 0, 0) of the window
  int size = 0;
  int n_frames = 0;
  std::ptrdiff_t row_stride = 0;
  std::ptrdiff_t frame_stride = 0;
  Origin origin;

  float at(int x, int y, int t) const { return base[t * frame_stride + y * row_stride + x]; }
};

PatchView view_patch(const ImageSeries& series, Origin origin, int size);

// Owning copy of a window.
struct SpaceTimePatch {
  Origin origin;
  int size = 0;
  int n_frames = 0;
  std::vector<float> data;

  PatchView view() const;
};

std::vector<SpaceTimePatch> extract_patches(const ImageSeries& series, const PatchGrid& grid);

// Static class probabilities for one patch; class fastest, then x, then y.
struct PatchPrediction {
  std::size_t patch_index = 0;
  int size = 0;
  std::vector<float> probs;

  float at(int x, int y, int cls) const {
    return probs[(static_cast<std::size_t>(y) * size + x) * kNumClasses + cls];
  }
  double max_sum_error() const;
};

// Per-pixel, per-class mean over the coverage set. Sums run in ascending
// patch index in double precision.
ClassProbabilityMap combine_mean(const std::vector<PatchPrediction>& preds, const PatchGrid& grid);

// Myocardium iff at least half of the covering patches give it probability
// > 0.5; other pixels take the mean-probability argmax of background vs
// bloodpool (ties to background).
LabelMask combine_majority(const std::vector<PatchPrediction>& preds, const PatchGrid& grid);

// Myocardium where the mean myocardium probability >= 0.5, else bloodpool
// where the mean bloodpool probability >= 0.5, else background.
LabelMask binarize_smap(const ClassProbabilityMap& mean_probs);

// Population standard deviation of the myocardium-channel probabilities
// over each pixel's coverage set, with u_pp / u_tot filled from `n_myo`.
UncertaintyMap compute_umap(const std::vector<PatchPrediction>& preds, const PatchGrid& grid,
                            std::int64_t n_myo);

// Same, taking n_myo from binarize_smap(combine_mean(preds, grid)).
UncertaintyMap compute_umap(const std::vector<PatchPrediction>& preds, const PatchGrid& grid);

struct UMetrics {
  double u_pp = kInfiniteUncertainty;
  double u_tot = 0.0;
};

// u_tot = sum of u^2 (row-major, double); u_pp = u_tot / n_myo, or the
// infinite sentinel when n_myo == 0.
UMetrics u_metrics(const UncertaintyMap& umap);

// 16-bit binary PGM with u in [0, 0.5] mapped linearly onto [0, 65535].
void write_umap_pgm(const std::filesystem::path& path, const UncertaintyMap& umap);

}  // namespace daugs
