#include "daugs/segmenters.hpp"

#include <algorithm>
#include <cmath>

#include "daugs/imgproc.hpp"

namespace daugs {

std::string to_string(SegmenterKind kind) {
  switch (kind) {
    case SegmenterKind::Oracle: return "oracle";
    case SegmenterKind::PerturbedOracle: return "perturbed_oracle";
    case SegmenterKind::CurveMatching: return "curve_matching";
    case SegmenterKind::External: return "external";
  }
  return "unknown";
}

SegmenterKind parse_segmenter_kind(const std::string& s) {
  if (s == "oracle") return SegmenterKind::Oracle;
  if (s == "perturbed_oracle") return SegmenterKind::PerturbedOracle;
  if (s == "curve_matching") return SegmenterKind::CurveMatching;
  if (s == "external") return SegmenterKind::External;
  throw DataError("unknown segmenter kind: " + s);
}

void SegmenterSpec::validate() const {
  const auto finite_nonneg = [](double v) { return std::isfinite(v) && v >= 0.0; };
  if (!finite_nonneg(perturb.boundary_jitter_px) || !finite_nonneg(perturb.shift_sensitivity) ||
      !finite_nonneg(perturb.label_noise_rate) || perturb.label_noise_rate > 1.0)
    throw DataError("perturbation parameters must be finite and non-negative (noise <= 1)");
  if (kind == SegmenterKind::CurveMatching && !(curve.temperature > 0.0))
    throw DataError("curve matching temperature must be positive");
  if (kind == SegmenterKind::External && external.command.empty())
    throw DataError("external segmenter needs a backend command");
}

PatchPrediction one_hot(std::span<const std::uint8_t> labels, int size) {
  PatchPrediction p;
  p.size = size;
  p.probs.assign(labels.size() * kNumClasses, 0.0f);
  for (std::size_t i = 0; i < labels.size(); ++i) p.probs[i * kNumClasses + labels[i]] = 1.0f;
  return p;
}

std::vector<std::uint8_t> corrupt_labels(std::span<const std::uint8_t> labels, double rate, Rng& rng) {
  std::vector<std::uint8_t> out(labels.begin(), labels.end());
  if (rate <= 0.0) return out;
  auto flip = [&](std::size_t i) {
    const int step = 1 + rng.uniform_int(0, 1);
    out[i] = static_cast<std::uint8_t>((out[i] + step) % kNumClasses);
  };
  if (rate >= 1.0) {
    for (std::size_t i = 0; i < out.size(); ++i) flip(i);
    return out;
  }
  const double log_keep = std::log1p(-rate);
  std::size_t i = 0;
  while (true) {
    const double u = 1.0 - rng.uniform();  // (0, 1]
    const double gap = std::floor(std::log(u) / log_keep);
    if (gap >= static_cast<double>(out.size() - i)) break;
    i += static_cast<std::size_t>(gap);
    flip(i);
    ++i;
    if (i >= out.size()) break;
  }
  return out;
}

void validate_prototypes(const CurveParams& params, int n_frames) {
  for (const auto& p : params.prototypes) {
    if (p.empty() || static_cast<int>(p.size()) != n_frames)
      throw DataError("prototype length does not match the patch frame count");
    double mean = 0.0;
    for (double v : p) {
      if (!std::isfinite(v)) throw DataError("prototype contains non-finite values");
      mean += v;
    }
    mean /= static_cast<double>(p.size());
    double ss = 0.0;
    for (double v : p) ss += (v - mean) * (v - mean);
    if (!(ss > 0.0)) throw DataError("zero-variance prototype");
  }
}

PatchPrediction curve_matching(const PatchView& patch, const CurveParams& params) {
  const int n = patch.size, T = patch.n_frames;
  validate_prototypes(params, T);

  double scale = 0.0;
  for (const auto& p : params.prototypes) {
    double mean = 0.0;
    for (double v : p) mean += v;
    mean /= T;
    double ss = 0.0;
    for (double v : p) ss += (v - mean) * (v - mean);
    scale += std::sqrt(ss / T);
  }
  scale /= kNumClasses;

  std::vector<double> m(T, 0.0);
  for (int t = 0; t < T; ++t) {
    double s = 0.0;
    for (int y = 0; y < n; ++y)
      for (int x = 0; x < n; ++x) s += patch.at(x, y, t);
    m[t] = s / (static_cast<double>(n) * n);
  }
  double mbar = 0.0;
  for (double v : m) mbar += v;
  mbar /= T;
  std::vector<double> w(T, 1.0);
  double wsum = 0.0;
  for (int t = 0; t < T; ++t) {
    w[t] = std::max(0.0, 1.0 + params.context_weight * (m[t] - mbar) / scale);
    wsum += w[t];
  }

  PatchPrediction out;
  out.size = n;
  out.probs.resize(static_cast<std::size_t>(n) * n * kNumClasses);
  for (int y = 0; y < n; ++y)
    for (int x = 0; x < n; ++x) {
      double logits[kNumClasses];
      for (int k = 0; k < kNumClasses; ++k) {
        const auto& proto = params.prototypes[k];
        double acc = 0.0;
        for (int t = 0; t < T; ++t) {
          const double d = patch.at(x, y, t) - proto[t];
          acc += w[t] * d * d;
        }
        logits[k] = -std::sqrt(acc / wsum) / scale / params.temperature;
      }
      const double top = std::max({logits[0], logits[1], logits[2]});
      double e[kNumClasses], z = 0.0;
      for (int k = 0; k < kNumClasses; ++k) z += (e[k] = std::exp(logits[k] - top));
      float* dst = out.probs.data() + (static_cast<std::size_t>(y) * n + x) * kNumClasses;
      for (int k = 0; k < kNumClasses; ++k) dst[k] = static_cast<float>(e[k] / z);
    }
  return out;
}

// --- perturbed oracle -------------------------------------------------------

PerturbedOracle::PerturbedOracle(const LabelMask& truth, const PerturbParams& params, std::uint64_t seed,
                                 std::uint64_t case_id, int model_id, double shift_magnitude)
    : truth_(truth),
      params_(params),
      seed_(seed),
      case_id_(case_id),
      model_id_(model_id),
      severity_(shift_magnitude * params.shift_sensitivity) {
  const std::size_t n = truth.labels.size();
  std::vector<std::uint8_t> myo(n), nonmyo(n), bp(n), bg(n);
  for (std::size_t i = 0; i < n; ++i) {
    myo[i] = truth.labels[i] == kMyocardium;
    nonmyo[i] = !myo[i];
    bp[i] = truth.labels[i] == kBloodpool;
    bg[i] = truth.labels[i] == kBackground;
  }
  if (params.boundary_jitter_px > 0.0 || severity_ > 0.0) {
    d2_myo_ = squared_distance_transform(myo, truth.width, truth.height);
    d2_nonmyo_ = squared_distance_transform(nonmyo, truth.width, truth.height);
    d2_bp_ = squared_distance_transform(bp, truth.width, truth.height);
    d2_bg_ = squared_distance_transform(bg, truth.width, truth.height);
  }
}

std::uint8_t PerturbedOracle::morph_label(int x, int y, double r) const {
  const std::size_t i = truth_.index(x, y);
  const std::uint8_t orig = truth_.labels[i];
  if (r > 0.0 && orig != kMyocardium && d2_myo_[i] <= r * r) return kMyocardium;
  if (r < 0.0 && orig == kMyocardium && d2_nonmyo_[i] <= r * r)
    return d2_bp_[i] < d2_bg_[i] ? kBloodpool : kBackground;
  return orig;
}

LabelMask PerturbedOracle::morphed(double r) const {
  LabelMask out = truth_;
  if (d2_myo_.empty()) return out;
  for (int y = 0; y < truth_.height; ++y)
    for (int x = 0; x < truth_.width; ++x) out.at(x, y) = morph_label(x, y, r);
  return out;
}

PatchPrediction PerturbedOracle::segment(const PatchView& patch) {
  const Origin o = patch.origin;
  const std::uint64_t origin_key = (static_cast<std::uint64_t>(o.y0) << 32) | static_cast<std::uint32_t>(o.x0);
  Rng rng = Rng::stream(seed_, StreamTag::PerturbPatch,
                        {case_id_, static_cast<std::uint64_t>(model_id_), origin_key});

  const double spread = params_.boundary_jitter_px + severity_;
  const double r = rng.uniform(-spread, spread);
  const int dx = static_cast<int>(std::lround(rng.uniform(-1.0, 1.0) * kShiftTranslatePx * severity_));
  const int dy = static_cast<int>(std::lround(rng.uniform(-1.0, 1.0) * kShiftTranslatePx * severity_));
  const bool morph = !d2_myo_.empty() && r != 0.0;

  const int n = patch.size;
  std::vector<std::uint8_t> labels(static_cast<std::size_t>(n) * n);
  for (int y = 0; y < n; ++y)
    for (int x = 0; x < n; ++x) {
      const int sx = std::clamp(o.x0 + x - dx, 0, truth_.width - 1);
      const int sy = std::clamp(o.y0 + y - dy, 0, truth_.height - 1);
      labels[static_cast<std::size_t>(y) * n + x] = morph ? morph_label(sx, sy, r) : truth_.at(sx, sy);
    }
  const double rate = std::min(1.0, params_.label_noise_rate + kShiftNoise * severity_);
  if (rate > 0.0) labels = corrupt_labels(labels, rate, rng);
  return one_hot(labels, n);
}

// --- other kinds ------------------------------------------------------------

namespace {

class OracleSegmenter : public Segmenter {
 public:
  explicit OracleSegmenter(const LabelMask& truth) : truth_(truth) {}
  PatchPrediction segment(const PatchView& patch) override {
    const int n = patch.size;
    std::vector<std::uint8_t> labels(static_cast<std::size_t>(n) * n);
    for (int y = 0; y < n; ++y)
      for (int x = 0; x < n; ++x)
        labels[static_cast<std::size_t>(y) * n + x] = truth_.at(patch.origin.x0 + x, patch.origin.y0 + y);
    return one_hot(labels, n);
  }

 private:
  const LabelMask& truth_;
};

class CurveSegmenter : public Segmenter {
 public:
  explicit CurveSegmenter(const CurveParams& params) : params_(params) {}
  PatchPrediction segment(const PatchView& patch) override { return curve_matching(patch, params_); }

 private:
  CurveParams params_;
};

class ExternalSegmenter : public Segmenter {
 public:
  ExternalSegmenter(const SegmenterSpec& spec, int patch_size, int n_frames)
      : size_(patch_size), proc_(spec.external.command, spec.model_id, spec.external.timeout_s) {
    proc_.handshake(patch_size, n_frames);
  }
  PatchPrediction segment(const PatchView& patch) override {
    PatchPrediction p;
    p.size = size_;
    p.probs = proc_.request(patch);
    return p;
  }
  void finish() override { proc_.shutdown(); }

 private:
  int size_;
  BackendProcess proc_;
};

const LabelMask& require_truth(const CaseContext& ctx) {
  if (!ctx.truth) throw DataError("oracle segmenters need the case ground truth");
  return *ctx.truth;
}

}  // namespace

std::unique_ptr<Segmenter> make_segmenter(const SegmenterSpec& spec, const CaseContext& ctx,
                                          int patch_size, int n_frames) {
  spec.validate();
  switch (spec.kind) {
    case SegmenterKind::Oracle:
      return std::make_unique<OracleSegmenter>(require_truth(ctx));
    case SegmenterKind::PerturbedOracle:
      return std::make_unique<PerturbedOracle>(require_truth(ctx), spec.perturb, ctx.seed, ctx.case_id,
                                               spec.model_id, ctx.shift_magnitude);
    case SegmenterKind::CurveMatching:
      validate_prototypes(spec.curve, n_frames);
      return std::make_unique<CurveSegmenter>(spec.curve);
    case SegmenterKind::External:
      return std::make_unique<ExternalSegmenter>(spec, patch_size, n_frames);
  }
  throw DataError("unknown segmenter kind");
}

PatchPrediction segment_patch(const SegmenterSpec& spec, const PatchView& patch, const CaseContext& ctx) {
  auto seg = make_segmenter(spec, ctx, patch.size, patch.n_frames);
  PatchPrediction p = seg->segment(patch);
  seg->finish();
  return p;
}

std::vector<PatchPrediction> segment_grid(Segmenter& seg, const ImageSeries& series, const PatchGrid& grid) {
  if (series.width != grid.image_w || series.height != grid.image_h)
    throw DataError("patch grid does not match series dimensions");
  std::vector<PatchPrediction> out;
  out.reserve(grid.origins.size());
  for (std::size_t i = 0; i < grid.origins.size(); ++i) {
    PatchPrediction p = seg.segment(view_patch(series, grid.origins[i], grid.patch));
    p.patch_index = i;
    out.push_back(std::move(p));
  }
  return out;
}

}  // namespace daugs
