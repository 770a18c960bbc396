#pragma once

#include <cmath>
#include <filesystem>
#include <string>

#include "daugs/core.hpp"
#include "daugs/rng.hpp"

namespace daugs::test {

// Annulus of myocardium around a bloodpool disc, centred at (cx, cy).
inline LabelMask annulus(int w, int h, double cx, double cy, double r_in, double r_out) {
  LabelMask m = LabelMask::filled(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const double r = std::hypot(x - cx, y - cy);
      if (r < r_in) m.at(x, y) = kBloodpool;
      else if (r < r_out) m.at(x, y) = kMyocardium;
    }
  return m;
}

inline void paint_disc(LabelMask& m, double cx, double cy, double r, std::uint8_t label) {
  for (int y = 0; y < m.height; ++y)
    for (int x = 0; x < m.width; ++x)
      if (std::hypot(x - cx, y - cy) < r) m.at(x, y) = label;
}

inline LabelMask random_mask(Rng& rng, int w, int h, double p_fg = 0.4) {
  LabelMask m = LabelMask::filled(w, h);
  for (auto& v : m.labels) v = rng.bernoulli(p_fg) ? static_cast<std::uint8_t>(rng.uniform_int(1, 2)) : kBackground;
  return m;
}

// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("daugs_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace daugs::test
