#pragma once

// Small 2-D grid utilities shared by the metric, segmenter and phantom code.

#include <cstdint>
#include <vector>

namespace daugs {

// Exact squared Euclidean distance from every pixel to the nearest pixel
// where `feature` is non-zero, with physical pixel spacing (dx, dy).
// Separable lower-envelope algorithm (Felzenszwalb & Huttenlocher). Pixels
// get +inf when the image holds no feature pixel.
std::vector<double> squared_distance_transform(const std::vector<std::uint8_t>& feature, int width,
                                               int height, double dx = 1.0, double dy = 1.0);

struct Components {
  std::vector<int> labels;  // 0 = not part of the set; components are 1..count
  int count = 0;
  std::vector<int> sizes;  // sizes[k] for component k (index 0 unused)
};

// Connected components of the non-zero pixels of `in`, connectivity 4 or 8.
// Components are numbered in row-major order of their first pixel.
Components connected_components(const std::vector<std::uint8_t>& in, int width, int height,
                                int connectivity);

// Pixels not reachable from the image border through pixels where
// `wall` is zero (4-connected flood). The wall pixels themselves are
// reported as enclosed.
std::vector<std::uint8_t> enclosed_region(const std::vector<std::uint8_t>& wall, int width,
                                          int height);

}  // namespace daugs
