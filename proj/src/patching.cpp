#include "daugs/patching.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <string>

namespace daugs {
namespace {

std::vector<int> axis_origins(int dim, int patch, int stride) {
  std::vector<int> out;
  for (int o = 0; o + patch <= dim; o += stride) out.push_back(o);
  if (out.back() != dim - patch) out.push_back(dim - patch);
  return out;
}

void check_predictions(const std::vector<PatchPrediction>& preds, const PatchGrid& grid) {
  if (preds.size() != grid.origins.size())
    throw DataError("expected " + std::to_string(grid.origins.size()) + " patch predictions, got " +
                    std::to_string(preds.size()));
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if (preds[i].patch_index != i) throw DataError("patch predictions out of grid order");
    if (preds[i].size != grid.patch ||
        preds[i].probs.size() != static_cast<std::size_t>(grid.patch) * grid.patch * kNumClasses)
      throw DataError("patch prediction shape does not match the grid");
  }
}

// Per-pixel sums of one class channel (or all channels) over the coverage
// set, accumulated in ascending patch index.
struct Accumulator {
  int w, h;
  std::vector<double> sum;  // [pixel * 3 + cls]
  std::vector<int> count;   // [pixel]
};

Accumulator accumulate(const std::vector<PatchPrediction>& preds, const PatchGrid& grid) {
  Accumulator acc{grid.image_w, grid.image_h, {}, {}};
  const std::size_t n = static_cast<std::size_t>(acc.w) * acc.h;
  acc.sum.assign(n * kNumClasses, 0.0);
  acc.count.assign(n, 0);
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const Origin o = grid.origins[i];
    for (int y = 0; y < grid.patch; ++y)
      for (int x = 0; x < grid.patch; ++x) {
        const std::size_t p = static_cast<std::size_t>(o.y0 + y) * acc.w + (o.x0 + x);
        for (int c = 0; c < kNumClasses; ++c) acc.sum[p * kNumClasses + c] += preds[i].at(x, y, c);
        ++acc.count[p];
      }
  }
  return acc;
}

}  // namespace

PatchGrid make_grid(int h, int w, int patch, int stride) {
  if (patch < 1 || patch > std::min(h, w)) throw DataError("patch size exceeds image dimension");
  if (stride < 1 || stride > patch) throw DataError("stride must be in [1, patch]");
  PatchGrid g;
  g.image_h = h;
  g.image_w = w;
  g.patch = patch;
  g.stride = stride;
  const auto ys = axis_origins(h, patch, stride);
  const auto xs = axis_origins(w, patch, stride);
  for (int y : ys)
    for (int x : xs) g.origins.push_back({x, y});
  return g;
}

PatchView view_patch(const ImageSeries& series, Origin origin, int size) {
  PatchView v;
  v.base = series.data.data() + series.index(origin.x0, origin.y0, 0);
  v.size = size;
  v.n_frames = series.n_frames;
  v.row_stride = series.width;
  v.frame_stride = static_cast<std::ptrdiff_t>(series.frame_size());
  v.origin = origin;
  return v;
}

PatchView SpaceTimePatch::view() const {
  PatchView v;
  v.base = data.data();
  v.size = size;
  v.n_frames = n_frames;
  v.row_stride = size;
  v.frame_stride = static_cast<std::ptrdiff_t>(size) * size;
  v.origin = origin;
  return v;
}

std::vector<SpaceTimePatch> extract_patches(const ImageSeries& series, const PatchGrid& grid) {
  if (series.width != grid.image_w || series.height != grid.image_h)
    throw DataError("patch grid does not match series dimensions");
  std::vector<SpaceTimePatch> out;
  out.reserve(grid.origins.size());
  for (const Origin& o : grid.origins) {
    SpaceTimePatch p;
    p.origin = o;
    p.size = grid.patch;
    p.n_frames = series.n_frames;
    p.data.resize(static_cast<std::size_t>(grid.patch) * grid.patch * series.n_frames);
    std::size_t k = 0;
    for (int t = 0; t < series.n_frames; ++t)
      for (int y = 0; y < grid.patch; ++y)
        for (int x = 0; x < grid.patch; ++x) p.data[k++] = series.at(o.x0 + x, o.y0 + y, t);
    out.push_back(std::move(p));
  }
  return out;
}

double PatchPrediction::max_sum_error() const {
  double worst = 0.0;
  for (std::size_t i = 0; i + kNumClasses <= probs.size(); i += kNumClasses)
    worst = std::max(worst, std::abs(double{probs[i]} + probs[i + 1] + probs[i + 2] - 1.0));
  return worst;
}

ClassProbabilityMap combine_mean(const std::vector<PatchPrediction>& preds, const PatchGrid& grid) {
  check_predictions(preds, grid);
  const Accumulator acc = accumulate(preds, grid);
  ClassProbabilityMap out = ClassProbabilityMap::zeros(grid.image_w, grid.image_h);
  for (std::size_t p = 0; p < acc.count.size(); ++p)
    for (int c = 0; c < kNumClasses; ++c)
      out.probs[p * kNumClasses + c] = static_cast<float>(acc.sum[p * kNumClasses + c] / acc.count[p]);
  return out;
}

LabelMask combine_majority(const std::vector<PatchPrediction>& preds, const PatchGrid& grid) {
  check_predictions(preds, grid);
  const Accumulator acc = accumulate(preds, grid);
  std::vector<int> votes(acc.count.size(), 0);
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const Origin o = grid.origins[i];
    for (int y = 0; y < grid.patch; ++y)
      for (int x = 0; x < grid.patch; ++x)
        if (preds[i].at(x, y, kMyocardium) > 0.5f)
          ++votes[static_cast<std::size_t>(o.y0 + y) * grid.image_w + (o.x0 + x)];
  }
  LabelMask out = LabelMask::filled(grid.image_w, grid.image_h);
  for (std::size_t p = 0; p < votes.size(); ++p) {
    if (2 * votes[p] >= acc.count[p]) {
      out.labels[p] = kMyocardium;
    } else {
      const double bg = acc.sum[p * kNumClasses + kBackground];
      const double bp = acc.sum[p * kNumClasses + kBloodpool];
      out.labels[p] = bp > bg ? kBloodpool : kBackground;
    }
  }
  return out;
}

LabelMask binarize_smap(const ClassProbabilityMap& mean_probs) {
  LabelMask out = LabelMask::filled(mean_probs.width, mean_probs.height);
  for (std::size_t p = 0; p < out.labels.size(); ++p) {
    if (mean_probs.probs[p * kNumClasses + kMyocardium] >= 0.5f)
      out.labels[p] = kMyocardium;
    else if (mean_probs.probs[p * kNumClasses + kBloodpool] >= 0.5f)
      out.labels[p] = kBloodpool;
  }
  return out;
}

UncertaintyMap compute_umap(const std::vector<PatchPrediction>& preds, const PatchGrid& grid,
                            std::int64_t n_myo) {
  check_predictions(preds, grid);
  const Accumulator acc = accumulate(preds, grid);
  const std::size_t n = acc.count.size();
  std::vector<double> mean(n);
  for (std::size_t p = 0; p < n; ++p) mean[p] = acc.sum[p * kNumClasses + kMyocardium] / acc.count[p];

  std::vector<double> ss(n, 0.0);
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const Origin o = grid.origins[i];
    for (int y = 0; y < grid.patch; ++y)
      for (int x = 0; x < grid.patch; ++x) {
        const std::size_t p = static_cast<std::size_t>(o.y0 + y) * grid.image_w + (o.x0 + x);
        const double d = preds[i].at(x, y, kMyocardium) - mean[p];
        ss[p] += d * d;
      }
  }
  UncertaintyMap u;
  u.width = grid.image_w;
  u.height = grid.image_h;
  u.u.resize(n);
  for (std::size_t p = 0; p < n; ++p)
    u.u[p] = static_cast<float>(std::min(0.5, std::sqrt(ss[p] / acc.count[p])));  // rounding guard
  u.n_myo = n_myo;
  const UMetrics m = u_metrics(u);
  u.u_pp = m.u_pp;
  u.u_tot = m.u_tot;
  return u;
}

UncertaintyMap compute_umap(const std::vector<PatchPrediction>& preds, const PatchGrid& grid) {
  const LabelMask smap = binarize_smap(combine_mean(preds, grid));
  return compute_umap(preds, grid, static_cast<std::int64_t>(smap.count(kMyocardium)));
}

UMetrics u_metrics(const UncertaintyMap& umap) {
  UMetrics m;
  for (float v : umap.u) m.u_tot += double{v} * double{v};
  m.u_pp = umap.n_myo > 0 ? m.u_tot / static_cast<double>(umap.n_myo) : kInfiniteUncertainty;
  return m;
}

void write_umap_pgm(const std::filesystem::path& path, const UncertaintyMap& umap) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot open for writing: " + path.string());
  f << "P5\n" << umap.width << ' ' << umap.height << "\n65535\n";
  for (float v : umap.u) {
    const double scaled = std::clamp(double{v} / 0.5, 0.0, 1.0) * 65535.0;
    const auto q = static_cast<std::uint16_t>(std::lround(scaled));
    const char bytes[2] = {static_cast<char>(q >> 8), static_cast<char>(q & 0xFF)};
    f.write(bytes, 2);
  }
}

}  // namespace daugs
