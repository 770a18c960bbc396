#pragma once

// Conversion of a raw dynamic series into the canonical analysis matrix:
// 2x upsampling, ROI crop, temporal resampling and [0, 1] normalization.

#include <optional>

#include "daugs/core.hpp"

namespace daugs {

// Bicubic (Catmull-Rom, a = -0.5) 2x upsampling with clamped borders.
// Output pixel X samples source coordinate (X + 0.5) / 2 - 0.5 (pixel
// centres aligned). Spacing is halved.
ImageSeries upsample2x(const ImageSeries& series);

// Catmull-Rom weight for a sample at signed offset d (|d| < 2).
double catmull_rom_weight(double d);

struct CropOptions {
  int size = 128;
  bool upsample_first = true;
  // Box filter applied to the temporal-variance map before locating the ROI.
  int variance_box = 5;
};

// Auto ROI centre: argmax of the box-smoothed temporal-variance map, refined
// to the variance-weighted centroid of pixels within 32 px of the argmax
// whose smoothed variance is at least half of the maximum. Coordinates are
// in the frame of `series`. Throws DataError("no ROI signal") for a flat map.
Point locate_roi_center(const ImageSeries& series, int box = 5);

// Upsamples (unless disabled) and crops a size x size window centred on
// `center` (post-upsampling coordinates) or on the auto-located ROI. The
// window is clamped into the image; an image smaller than the window is an
// error.
ImageSeries crop_to_roi(const ImageSeries& series, std::optional<Point> center = std::nullopt,
                        const CropOptions& opts = {});

// Shape-preserving piecewise-cubic Hermite (Fritsch-Carlson) resampling of
// every pixel curve onto n_out uniformly spaced times spanning the first and
// last frame times. Requires n_frames >= 4.
ImageSeries resample_time(const ImageSeries& series, int n_out = 30);

// Single-curve form of resample_time, exposed for oracles.
std::vector<double> pchip_resample(const std::vector<double>& t, const std::vector<double>& y,
                                   const std::vector<double>& t_out);

// Global affine map min -> 0, max -> 1; a constant series maps to zeros.
ImageSeries normalize01(const ImageSeries& series);

struct PreprocessOptions {
  CropOptions crop;
  std::optional<Point> center;
  int n_frames = 30;
};

// Full pipeline: crop_to_roi (with upsampling) -> resample_time -> normalize01.
ImageSeries preprocess(const ImageSeries& series, const PreprocessOptions& opts = {});

}  // namespace daugs
