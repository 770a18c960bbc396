#pragma once

// Shared domain types for dynamic (2D+time) series analysis.

#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace daugs {

// Class codes carried by LabelMask and the class axis of probability maps.
inline constexpr std::uint8_t kBackground = 0;
inline constexpr std::uint8_t kMyocardium = 1;
inline constexpr std::uint8_t kBloodpool = 2;
inline constexpr int kNumClasses = 3;

// Base of every error thrown by the library. DataError marks bad input data
// (files, shapes, values); the CLI maps it to exit code 2.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DataError : public Error {
 public:
  using Error::Error;
};

struct Spacing {
  double dx = 1.0;  // mm per pixel along x
  double dy = 1.0;  // mm per pixel along y
};

struct Point {
  double x = 0.0;
  double y = 0.0;
};

// Scalar intensity over (x, y, t). Storage is x fastest, then y, then t.
struct ImageSeries {
  int width = 0;
  int height = 0;
  int n_frames = 0;
  Spacing spacing;
  std::vector<double> frame_times;  // seconds, strictly increasing
  std::vector<float> data;

  static ImageSeries zeros(int width, int height, int n_frames, double dt_s = 1.0,
                           Spacing spacing = {});

  std::size_t index(int x, int y, int t) const {
    return (static_cast<std::size_t>(t) * height + y) * width + x;
  }
  float at(int x, int y, int t) const { return data[index(x, y, t)]; }
  float& at(int x, int y, int t) { return data[index(x, y, t)]; }

  std::size_t frame_size() const { return static_cast<std::size_t>(width) * height; }
  std::span<const float> frame(int t) const {
    return {data.data() + t * frame_size(), frame_size()};
  }
  std::span<float> frame(int t) { return {data.data() + t * frame_size(), frame_size()}; }

  // Mean frame spacing; exact for uniformly sampled series.
  double mean_dt() const;

  // Throws DataError when dimensions, timing or storage size are inconsistent.
  void validate() const;
};

struct LabelMask {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> labels;  // row-major, x fastest

  static LabelMask filled(int width, int height, std::uint8_t label = kBackground);

  std::size_t index(int x, int y) const { return static_cast<std::size_t>(y) * width + x; }
  std::uint8_t at(int x, int y) const { return labels[index(x, y)]; }
  std::uint8_t& at(int x, int y) { return labels[index(x, y)]; }
  bool in_bounds(int x, int y) const { return x >= 0 && y >= 0 && x < width && y < height; }

  std::size_t count(std::uint8_t cls) const;
  Point centroid(std::uint8_t cls) const;  // throws DataError when the class is absent

  void validate() const;
  bool operator==(const LabelMask&) const = default;
};

// Per-pixel class probabilities; class index fastest, then x, then y.
struct ClassProbabilityMap {
  int width = 0;
  int height = 0;
  std::vector<float> probs;

  static ClassProbabilityMap zeros(int width, int height);

  std::size_t index(int x, int y, int cls) const {
    return (static_cast<std::size_t>(y) * width + x) * kNumClasses + cls;
  }
  float at(int x, int y, int cls) const { return probs[index(x, y, cls)]; }
  float& at(int x, int y, int cls) { return probs[index(x, y, cls)]; }

  // Largest deviation of a per-pixel class sum from 1, and whether every
  // entry lies in [0, 1].
  double max_sum_error() const;
  bool in_unit_range() const;
};

struct Origin {
  int x0 = 0;
  int y0 = 0;
  bool operator==(const Origin&) const = default;
};

// Sliding-window geometry. Origins are row-major (y outer, x inner).
struct PatchGrid {
  int image_h = 0;
  int image_w = 0;
  int patch = 0;
  int stride = 0;
  std::vector<Origin> origins;

  bool contains(std::size_t i, int x, int y) const {
    const Origin& o = origins[i];
    return x >= o.x0 && x < o.x0 + patch && y >= o.y0 && y < o.y0 + patch;
  }
  // Coverage set of a pixel: indices of every patch containing it, ascending.
  std::vector<std::size_t> coverage(int x, int y) const;
};

// u_pp value used when the companion segmentation has no myocardium. Sorts
// above every finite value.
inline constexpr double kInfiniteUncertainty = std::numeric_limits<double>::infinity();

struct UncertaintyMap {
  int width = 0;
  int height = 0;
  std::vector<float> u;  // row-major, x fastest
  std::int64_t n_myo = 0;
  double u_pp = kInfiniteUncertainty;
  double u_tot = 0.0;

  float at(int x, int y) const { return u[static_cast<std::size_t>(y) * width + x]; }
};

struct SegmentationSolution {
  int model_id = 0;
  ClassProbabilityMap mean_probs;
  LabelMask mask;
  UncertaintyMap umap;
};

// A labelled dynamic series ready for segmentation.
struct Case {
  std::uint64_t id = 0;
  std::string name;
  ImageSeries series;
  LabelMask truth;
  Point rv_centroid;
  double shift_magnitude = 0.0;
};

}  // namespace daugs
