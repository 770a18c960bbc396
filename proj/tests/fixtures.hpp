#pragma once

#include <vector>

#include "daugs/harness.hpp"
#include "support.hpp"

namespace daugs::test {

// Two solutions on a ring case: model 0 is the full ring with moderate
// uncertainty spread over many pixels; model 1 is a thinner ring with a gap
// in segment 1, fewer pixels and a lower total but a higher per-pixel
// uncertainty. U_tot prefers model 1, U_pp prefers model 0.
struct MetricFixture {
  Case c;
  std::vector<SegmentationSolution> solutions;
};

inline MetricFixture metric_fixture() {
  MetricFixture f;
  f.c.id = 0;
  f.c.name = "ring";
  f.c.series = ImageSeries::zeros(64, 64, 4);
  f.c.truth = annulus(64, 64, 32, 32, 8, 14);
  f.c.rv_centroid = {8.0, 32.0};

  LabelMask thin = annulus(64, 64, 32, 32, 10, 13);
  for (int y = 0; y < 32; ++y)
    for (int x = 31; x <= 33; ++x)
      if (thin.at(x, y) == kMyocardium) thin.at(x, y) = kBackground;

  auto make = [](int id, const LabelMask& mask, float u) {
    SegmentationSolution s;
    s.model_id = id;
    s.mask = mask;
    s.mean_probs = ClassProbabilityMap::zeros(mask.width, mask.height);
    for (std::size_t i = 0; i < mask.labels.size(); ++i) s.mean_probs.probs[i * kNumClasses + mask.labels[i]] = 1.0f;
    s.umap.width = mask.width;
    s.umap.height = mask.height;
    s.umap.u.assign(mask.labels.size(), 0.0f);
    for (std::size_t i = 0; i < mask.labels.size(); ++i)
      if (mask.labels[i] == kMyocardium) s.umap.u[i] = u;
    s.umap.n_myo = static_cast<std::int64_t>(mask.count(kMyocardium));
    const UMetrics m = u_metrics(s.umap);
    s.umap.u_pp = m.u_pp;
    s.umap.u_tot = m.u_tot;
    return s;
  };
  f.solutions = {make(0, f.c.truth, 0.10f), make(1, thin, 0.12f)};
  return f;
}

}  // namespace daugs::test
