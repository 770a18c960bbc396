#include "daugs/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "daugs/imgproc.hpp"

namespace daugs {
namespace {

void check_same_dims(const LabelMask& a, const LabelMask& b) {
  if (a.width != b.width || a.height != b.height) throw DataError("mask dimensions differ");
}

}  // namespace

double dice(const LabelMask& a, const LabelMask& b, std::uint8_t cls) {
  check_same_dims(a, b);
  std::size_t na = 0, nb = 0, both = 0;
  for (std::size_t i = 0; i < a.labels.size(); ++i) {
    const bool ia = a.labels[i] == cls, ib = b.labels[i] == cls;
    na += ia;
    nb += ib;
    both += ia && ib;
  }
  if (na + nb == 0) return 1.0;
  return 2.0 * static_cast<double>(both) / static_cast<double>(na + nb);
}

std::vector<std::uint8_t> class_boundary(const LabelMask& m, std::uint8_t cls) {
  std::vector<std::uint8_t> out(m.labels.size(), 0);
  for (int y = 0; y < m.height; ++y)
    for (int x = 0; x < m.width; ++x) {
      if (m.at(x, y) != cls) continue;
      const bool edge = x == 0 || y == 0 || x == m.width - 1 || y == m.height - 1 ||
                        m.at(x - 1, y) != cls || m.at(x + 1, y) != cls || m.at(x, y - 1) != cls ||
                        m.at(x, y + 1) != cls;
      out[m.index(x, y)] = edge;
    }
  return out;
}

double percentile(std::vector<double> values, double q) {
  if (values.empty()) throw DataError("percentile of an empty set");
  std::sort(values.begin(), values.end());
  const double pos = q / 100.0 * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

double hd95(const LabelMask& a, const LabelMask& b, std::uint8_t cls, Spacing spacing) {
  check_same_dims(a, b);
  if (a.count(cls) == 0 || b.count(cls) == 0) throw DataError("hd95 undefined: class absent");
  const auto ba = class_boundary(a, cls);
  const auto bb = class_boundary(b, cls);
  const auto da = squared_distance_transform(ba, a.width, a.height, spacing.dx, spacing.dy);
  const auto db = squared_distance_transform(bb, b.width, b.height, spacing.dx, spacing.dy);
  std::vector<double> pooled;
  for (std::size_t i = 0; i < ba.size(); ++i) {
    if (ba[i]) pooled.push_back(std::sqrt(db[i]));
    if (bb[i]) pooled.push_back(std::sqrt(da[i]));
  }
  return percentile(std::move(pooled), 95.0);
}

std::size_t SegmentLabels::count(std::uint8_t id) const {
  return static_cast<std::size_t>(std::count(ids.begin(), ids.end(), id));
}

std::vector<std::uint8_t> lv_cavity(const LabelMask& m) {
  const std::size_t n = m.labels.size();
  std::vector<std::uint8_t> myo(n), inner_bp(n);
  for (std::size_t i = 0; i < n; ++i) myo[i] = m.labels[i] == kMyocardium;
  const auto enclosed = enclosed_region(myo, m.width, m.height);
  for (std::size_t i = 0; i < n; ++i) inner_bp[i] = enclosed[i] && m.labels[i] == kBloodpool;
  Components cc = connected_components(inner_bp, m.width, m.height, 4);
  if (cc.count == 0) {
    for (std::size_t i = 0; i < n; ++i) inner_bp[i] = m.labels[i] == kBloodpool;
    cc = connected_components(inner_bp, m.width, m.height, 4);
  }
  std::vector<std::uint8_t> out(n, 0);
  if (cc.count == 0) return out;
  const int best = static_cast<int>(std::max_element(cc.sizes.begin() + 1, cc.sizes.end()) - cc.sizes.begin());
  for (std::size_t i = 0; i < n; ++i) out[i] = cc.labels[i] == best;
  return out;
}

Point lv_center(const LabelMask& m) {
  const auto cavity = lv_cavity(m);
  double sx = 0.0, sy = 0.0;
  std::size_t k = 0;
  for (int y = 0; y < m.height; ++y)
    for (int x = 0; x < m.width; ++x)
      if (cavity[m.index(x, y)]) {
        sx += x;
        sy += y;
        ++k;
      }
  if (k > 0) return {sx / k, sy / k};
  return m.centroid(kMyocardium);
}

Point estimate_rv_centroid(const LabelMask& m, Point fallback) {
  const std::size_t n = m.labels.size();
  std::vector<std::uint8_t> myo(n), outer_bp(n);
  for (std::size_t i = 0; i < n; ++i) myo[i] = m.labels[i] == kMyocardium;
  const auto enclosed = enclosed_region(myo, m.width, m.height);
  for (std::size_t i = 0; i < n; ++i) outer_bp[i] = !enclosed[i] && m.labels[i] == kBloodpool;
  const Components cc = connected_components(outer_bp, m.width, m.height, 4);
  if (cc.count == 0) return fallback;
  const int best = static_cast<int>(std::max_element(cc.sizes.begin() + 1, cc.sizes.end()) - cc.sizes.begin());
  double sx = 0.0, sy = 0.0;
  for (int y = 0; y < m.height; ++y)
    for (int x = 0; x < m.width; ++x)
      if (cc.labels[m.index(x, y)] == best) {
        sx += x;
        sy += y;
      }
  return {sx / cc.sizes[best], sy / cc.sizes[best]};
}

SegmentLabels aha6_split_direction(const LabelMask& mask, Point rv_direction) {
  if (mask.count(kMyocardium) == 0) throw DataError("aha6_split: empty myocardium");
  const Point c = lv_center(mask);
  constexpr double kDeg = 180.0 / std::numbers::pi;
  const double rv_angle = std::atan2(-rv_direction.y, rv_direction.x) * kDeg;
  const double start = rv_angle - 120.0;

  SegmentLabels out{mask.width, mask.height, std::vector<std::uint8_t>(mask.labels.size(), 0)};
  for (int y = 0; y < mask.height; ++y)
    for (int x = 0; x < mask.width; ++x) {
      if (mask.at(x, y) != kMyocardium) continue;
      const double a = std::atan2(-(y - c.y), x - c.x) * kDeg;
      double rel = std::fmod(a - start, 360.0);
      if (rel < 0.0) rel += 360.0;
      const int sector = std::min(5, static_cast<int>(rel / 60.0));
      out.ids[mask.index(x, y)] = static_cast<std::uint8_t>(sector + 1);
    }
  return out;
}

SegmentLabels aha6_split(const LabelMask& mask, Point rv_centroid) {
  if (mask.count(kMyocardium) == 0) throw DataError("aha6_split: empty myocardium");
  const Point c = lv_center(mask);
  return aha6_split_direction(mask, {rv_centroid.x - c.x, rv_centroid.y - c.y});
}

FailureReport detect_failure(const LabelMask& mask, const SegmentLabels& segments, const FailureOptions& opts) {
  FailureReport r;
  const std::size_t n = mask.labels.size();

  std::vector<std::uint8_t> myo(n), inner_bp(n);
  for (std::size_t i = 0; i < n; ++i) myo[i] = mask.labels[i] == kMyocardium;
  const auto enclosed = enclosed_region(myo, mask.width, mask.height);
  for (std::size_t i = 0; i < n; ++i) inner_bp[i] = enclosed[i] && mask.labels[i] == kBloodpool;
  r.bloodpool_inclusion = connected_components(inner_bp, mask.width, mask.height, 4).count > 1;

  for (int s = 1; s <= 6; ++s) {
    std::vector<std::uint8_t> seg(n);
    bool any = false;
    for (std::size_t i = 0; i < n; ++i) any |= (seg[i] = segments.ids[i] == s) != 0;
    if (!any) continue;
    const Components cc = connected_components(seg, mask.width, mask.height, opts.connectivity);
    int big = 0;
    for (int k = 1; k <= cc.count; ++k) big += cc.sizes[k] >= opts.speckle_floor;
    if (big > 1) r.noncontiguous_segments.push_back(s);
  }
  r.failed = r.bloodpool_inclusion || !r.noncontiguous_segments.empty();
  return r;
}

}  // namespace daugs
