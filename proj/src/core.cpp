#include "daugs/core.hpp"

#include <algorithm>
#include <cmath>

namespace daugs {

ImageSeries ImageSeries::zeros(int width, int height, int n_frames, double dt_s, Spacing spacing) {
  ImageSeries s;
  s.width = width;
  s.height = height;
  s.n_frames = n_frames;
  s.spacing = spacing;
  s.frame_times.resize(n_frames);
  for (int t = 0; t < n_frames; ++t) s.frame_times[t] = t * dt_s;
  s.data.assign(static_cast<std::size_t>(width) * height * n_frames, 0.0f);
  return s;
}

double ImageSeries::mean_dt() const {
  if (n_frames < 2) return 1.0;
  return (frame_times.back() - frame_times.front()) / (n_frames - 1);
}

void ImageSeries::validate() const {
  if (width < 1 || height < 1 || n_frames < 1)
    throw DataError("image series dimensions must be >= 1");
  if (static_cast<int>(frame_times.size()) != n_frames)
    throw DataError("frame_times length does not match n_frames");
  for (int t = 1; t < n_frames; ++t)
    if (!(frame_times[t] > frame_times[t - 1]))
      throw DataError("frame_times must be strictly increasing");
  if (data.size() != static_cast<std::size_t>(width) * height * n_frames)
    throw DataError("image series storage size mismatch");
}

LabelMask LabelMask::filled(int width, int height, std::uint8_t label) {
  LabelMask m;
  m.width = width;
  m.height = height;
  m.labels.assign(static_cast<std::size_t>(width) * height, label);
  return m;
}

std::size_t LabelMask::count(std::uint8_t cls) const {
  return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), cls));
}

Point LabelMask::centroid(std::uint8_t cls) const {
  double sx = 0.0, sy = 0.0;
  std::size_t n = 0;
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x)
      if (at(x, y) == cls) {
        sx += x;
        sy += y;
        ++n;
      }
  if (n == 0) throw DataError("centroid of an absent class");
  return {sx / n, sy / n};
}

void LabelMask::validate() const {
  if (width < 1 || height < 1) throw DataError("label mask dimensions must be >= 1");
  if (labels.size() != static_cast<std::size_t>(width) * height)
    throw DataError("label mask storage size mismatch");
  for (auto v : labels)
    if (v > kBloodpool) throw DataError("label mask carries an unknown class code");
}

ClassProbabilityMap ClassProbabilityMap::zeros(int width, int height) {
  ClassProbabilityMap m;
  m.width = width;
  m.height = height;
  m.probs.assign(static_cast<std::size_t>(width) * height * kNumClasses, 0.0f);
  return m;
}

double ClassProbabilityMap::max_sum_error() const {
  double worst = 0.0;
  for (std::size_t i = 0; i + kNumClasses <= probs.size(); i += kNumClasses) {
    double s = 0.0;
    for (int c = 0; c < kNumClasses; ++c) s += probs[i + c];
    worst = std::max(worst, std::abs(s - 1.0));
  }
  return worst;
}

bool ClassProbabilityMap::in_unit_range() const {
  return std::all_of(probs.begin(), probs.end(), [](float p) { return p >= 0.0f && p <= 1.0f; });
}

std::vector<std::size_t> PatchGrid::coverage(int x, int y) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < origins.size(); ++i)
    if (contains(i, x, y)) out.push_back(i);
  return out;
}

}  // namespace daugs
