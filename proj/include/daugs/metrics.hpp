#pragma once

// Segmentation accuracy metrics, AHA 6-segment division and failure
// detection.

#include <cstdint>
#include <vector>

#include "daugs/core.hpp"

namespace daugs {

// 2|A n B| / (|A| + |B|) for one class; 1 when both masks lack the class.
double dice(const LabelMask& a, const LabelMask& b, std::uint8_t cls);

// Boundary pixels of a class: class pixels with a 4-neighbour of another
// class or lying on the image border.
std::vector<std::uint8_t> class_boundary(const LabelMask& m, std::uint8_t cls);

// Undirected 95th-percentile Hausdorff distance in mm. Both directed
// boundary-to-boundary nearest-distance sets are pooled and the 95th
// percentile taken with linear interpolation between order statistics
// (rank 0.95 * (n - 1)). Throws DataError when either mask lacks the class.
double hd95(const LabelMask& a, const LabelMask& b, std::uint8_t cls, Spacing spacing = {});

// Linear-interpolated percentile (q in [0, 100]) of unsorted values.
double percentile(std::vector<double> values, double q);

// Segment id (1..6) per myocardial pixel, 0 elsewhere.
struct SegmentLabels {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> ids;

  std::uint8_t at(int x, int y) const { return ids[static_cast<std::size_t>(y) * width + x]; }
  std::size_t count(std::uint8_t id) const;
};

// LV cavity: the largest bloodpool component (4-connected) enclosed by the
// myocardium, else the largest bloodpool component anywhere. Empty when the
// mask has no bloodpool.
std::vector<std::uint8_t> lv_cavity(const LabelMask& m);

// LV centre: cavity centroid, else myocardium centroid.
Point lv_center(const LabelMask& m);

// RV centroid estimated from a mask: centroid of the largest bloodpool
// component outside the myocardial ring. Falls back to `fallback`.
Point estimate_rv_centroid(const LabelMask& m, Point fallback);

// Angles are measured about the LV centre with y pointing up in the
// displayed image (angle = atan2(-(y - cy), x - cx)). The RV direction
// marks the boundary between segments 2 and 3, so segment 1 starts 120 deg
// clockwise of it and ids increase counterclockwise in 60 deg sectors.
SegmentLabels aha6_split(const LabelMask& mask, Point rv_centroid);
SegmentLabels aha6_split_direction(const LabelMask& mask, Point rv_direction);

struct FailureOptions {
  int connectivity = 8;
  int speckle_floor = 3;  // components smaller than this are ignored
};

struct FailureReport {
  bool bloodpool_inclusion = false;
  std::vector<int> noncontiguous_segments;
  bool failed = false;
};

// Bloodpool inclusion: any bloodpool component enclosed by the myocardium
// other than the LV cavity. Noncontiguous segment: more than one connected
// component (ignoring speckle) among that segment's myocardial pixels.
FailureReport detect_failure(const LabelMask& mask, const SegmentLabels& segments,
                             const FailureOptions& opts = {});

}  // namespace daugs
