#include "daugs/preprocess.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace daugs {
namespace {

// Taps and weights of the 2x Catmull-Rom resampler along one axis.
struct Taps {
  std::array<int, 4> idx;
  std::array<double, 4> w;
};

std::vector<Taps> upsample_taps(int n_in) {
  std::vector<Taps> taps(2 * n_in);
  for (int X = 0; X < 2 * n_in; ++X) {
    const double sx = (X + 0.5) / 2.0 - 0.5;
    const int i0 = static_cast<int>(std::floor(sx));
    const double f = sx - i0;
    for (int k = 0; k < 4; ++k) {
      const int i = i0 - 1 + k;
      taps[X].idx[k] = std::clamp(i, 0, n_in - 1);
      taps[X].w[k] = catmull_rom_weight(f - (k - 1));
    }
  }
  return taps;
}

std::vector<double> box_filter(const std::vector<double>& in, int w, int h, int box) {
  const int r = box / 2;
  std::vector<double> tmp(in.size()), out(in.size());
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double s = 0.0;
      int n = 0;
      for (int k = std::max(0, x - r); k <= std::min(w - 1, x + r); ++k, ++n) s += in[y * w + k];
      tmp[y * w + x] = s / n;
    }
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double s = 0.0;
      int n = 0;
      for (int k = std::max(0, y - r); k <= std::min(h - 1, y + r); ++k, ++n) s += tmp[k * w + x];
      out[y * w + x] = s / n;
    }
  return out;
}

}  // namespace

double catmull_rom_weight(double d) {
  const double a = std::abs(d);
  if (a <= 1.0) return 1.5 * a * a * a - 2.5 * a * a + 1.0;
  if (a < 2.0) return -0.5 * a * a * a + 2.5 * a * a - 4.0 * a + 2.0;
  return 0.0;
}

ImageSeries upsample2x(const ImageSeries& series) {
  series.validate();
  const int W = series.width, H = series.height;
  ImageSeries out = series;
  out.width = 2 * W;
  out.height = 2 * H;
  out.spacing = {series.spacing.dx / 2.0, series.spacing.dy / 2.0};
  out.data.assign(static_cast<std::size_t>(out.width) * out.height * series.n_frames, 0.0f);

  const auto tx = upsample_taps(W);
  const auto ty = upsample_taps(H);
  std::vector<double> rows(static_cast<std::size_t>(out.width) * H);
  for (int t = 0; t < series.n_frames; ++t) {
    for (int y = 0; y < H; ++y)
      for (int X = 0; X < out.width; ++X) {
        double s = 0.0;
        for (int k = 0; k < 4; ++k) s += tx[X].w[k] * series.at(tx[X].idx[k], y, t);
        rows[static_cast<std::size_t>(y) * out.width + X] = s;
      }
    for (int Y = 0; Y < out.height; ++Y)
      for (int X = 0; X < out.width; ++X) {
        double s = 0.0;
        for (int k = 0; k < 4; ++k) s += ty[Y].w[k] * rows[static_cast<std::size_t>(ty[Y].idx[k]) * out.width + X];
        out.at(X, Y, t) = static_cast<float>(s);
      }
  }
  return out;
}

Point locate_roi_center(const ImageSeries& series, int box) {
  const int W = series.width, H = series.height, T = series.n_frames;
  std::vector<double> var(static_cast<std::size_t>(W) * H, 0.0);
  for (int y = 0; y < H; ++y)
    for (int x = 0; x < W; ++x) {
      double mean = 0.0;
      for (int t = 0; t < T; ++t) mean += series.at(x, y, t);
      mean /= T;
      double ss = 0.0;
      for (int t = 0; t < T; ++t) {
        const double d = series.at(x, y, t) - mean;
        ss += d * d;
      }
      var[static_cast<std::size_t>(y) * W + x] = ss / T;
    }
  const auto smooth = box_filter(var, W, H, std::max(1, box));
  const auto [lo, hi] = std::minmax_element(smooth.begin(), smooth.end());
  if (*hi - *lo <= 1e-12 * std::max(1.0, *hi)) throw DataError("no ROI signal");

  const std::size_t arg = static_cast<std::size_t>(hi - smooth.begin());
  const int ax = static_cast<int>(arg % W), ay = static_cast<int>(arg / W);
  const double vmax = *hi;
  constexpr int kRadius = 32;
  double sw = 0.0, sx = 0.0, sy = 0.0;
  for (int y = std::max(0, ay - kRadius); y <= std::min(H - 1, ay + kRadius); ++y)
    for (int x = std::max(0, ax - kRadius); x <= std::min(W - 1, ax + kRadius); ++x) {
      if ((x - ax) * (x - ax) + (y - ay) * (y - ay) > kRadius * kRadius) continue;
      const double v = smooth[static_cast<std::size_t>(y) * W + x];
      if (v < 0.5 * vmax) continue;
      sw += v;
      sx += v * x;
      sy += v * y;
    }
  return {sx / sw, sy / sw};
}

ImageSeries crop_to_roi(const ImageSeries& series, std::optional<Point> center, const CropOptions& opts) {
  const ImageSeries src = opts.upsample_first ? upsample2x(series) : series;
  const int n = opts.size;
  if (src.width < n || src.height < n)
    throw DataError("crop window exceeds image bounds");
  const Point c = center ? *center : locate_roi_center(src, opts.variance_box);
  const int x0 = std::clamp(static_cast<int>(std::lround(c.x - n / 2.0)), 0, src.width - n);
  const int y0 = std::clamp(static_cast<int>(std::lround(c.y - n / 2.0)), 0, src.height - n);

  ImageSeries out = ImageSeries::zeros(n, n, src.n_frames, 1.0, src.spacing);
  out.frame_times = src.frame_times;
  for (int t = 0; t < src.n_frames; ++t)
    for (int y = 0; y < n; ++y)
      for (int x = 0; x < n; ++x) out.at(x, y, t) = src.at(x0 + x, y0 + y, t);
  return out;
}

std::vector<double> pchip_resample(const std::vector<double>& t, const std::vector<double>& y,
                                   const std::vector<double>& t_out) {
  const std::size_t n = t.size();
  std::vector<double> h(n - 1), delta(n - 1), d(n, 0.0);
  for (std::size_t k = 0; k + 1 < n; ++k) {
    h[k] = t[k + 1] - t[k];
    delta[k] = (y[k + 1] - y[k]) / h[k];
  }
  for (std::size_t k = 1; k + 1 < n; ++k) {
    if (delta[k - 1] * delta[k] <= 0.0) continue;
    const double w1 = 2.0 * h[k] + h[k - 1];
    const double w2 = h[k] + 2.0 * h[k - 1];
    d[k] = (w1 + w2) / (w1 / delta[k - 1] + w2 / delta[k]);
  }
  // One-sided, shape-preserving three-point end slopes.
  auto end_slope = [](double h0, double h1, double d0, double d1) {
    double s = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if (s * d0 <= 0.0) s = 0.0;
    else if (d0 * d1 <= 0.0 && std::abs(s) > std::abs(3.0 * d0)) s = 3.0 * d0;
    return s;
  };
  if (n == 2) {
    d[0] = d[1] = delta[0];
  } else {
    d[0] = end_slope(h[0], h[1], delta[0], delta[1]);
    d[n - 1] = end_slope(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
  }

  std::vector<double> out(t_out.size());
  std::size_t k = 0;
  for (std::size_t i = 0; i < t_out.size(); ++i) {
    const double q = t_out[i];
    while (k + 2 < n && q > t[k + 1]) ++k;
    const double tol = 1e-9 * std::max(1.0, std::abs(t[n - 1] - t[0]));
    if (std::abs(q - t[k]) <= tol) {
      out[i] = y[k];
      continue;
    }
    if (std::abs(q - t[k + 1]) <= tol) {
      out[i] = y[k + 1];
      continue;
    }
    const double s = (q - t[k]) / h[k];
    const double s2 = s * s, s3 = s2 * s;
    out[i] = (2 * s3 - 3 * s2 + 1) * y[k] + (s3 - 2 * s2 + s) * h[k] * d[k] +
             (-2 * s3 + 3 * s2) * y[k + 1] + (s3 - s2) * h[k] * d[k + 1];
  }
  return out;
}

ImageSeries resample_time(const ImageSeries& series, int n_out) {
  series.validate();
  if (series.n_frames < 4) throw DataError("temporal resampling needs at least 4 frames");
  if (n_out < 2) throw DataError("temporal resampling needs n_out >= 2");
  const double t0 = series.frame_times.front(), t1 = series.frame_times.back();
  std::vector<double> t_out(n_out);
  for (int k = 0; k < n_out; ++k) t_out[k] = t0 + (t1 - t0) * k / (n_out - 1);
  t_out.back() = t1;

  ImageSeries out = ImageSeries::zeros(series.width, series.height, n_out, 1.0, series.spacing);
  out.frame_times = t_out;
  std::vector<double> curve(series.n_frames);
  for (int y = 0; y < series.height; ++y)
    for (int x = 0; x < series.width; ++x) {
      for (int t = 0; t < series.n_frames; ++t) curve[t] = series.at(x, y, t);
      const auto r = pchip_resample(series.frame_times, curve, t_out);
      for (int t = 0; t < n_out; ++t) out.at(x, y, t) = static_cast<float>(r[t]);
    }
  return out;
}

ImageSeries normalize01(const ImageSeries& series) {
  ImageSeries out = series;
  if (series.data.empty()) return out;
  const auto [lo, hi] = std::minmax_element(series.data.begin(), series.data.end());
  const double mn = *lo, mx = *hi;
  if (!(mx > mn)) {
    std::fill(out.data.begin(), out.data.end(), 0.0f);
    return out;
  }
  for (auto& v : out.data) v = static_cast<float>((v - mn) / (mx - mn));
  return out;
}

ImageSeries preprocess(const ImageSeries& series, const PreprocessOptions& opts) {
  ImageSeries s = crop_to_roi(series, opts.center, opts.crop);
  s = resample_time(s, opts.n_frames);
  return normalize01(s);
}

}  // namespace daugs
