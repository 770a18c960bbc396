#include "daugs/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "daugs/parallel.hpp"
#include "daugs/report.hpp"
#include "daugs/tensor_io.hpp"

namespace daugs {
namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

double image_angle_deg(double dx, double dy) { return std::atan2(-dy, dx) / kDeg; }

bool in_sector(double angle_deg, const DefectSector& s) {
  double rel = std::fmod(angle_deg - s.start_deg, 360.0);
  if (rel < 0.0) rel += 360.0;
  return rel < s.width_deg;
}

void check_curve(const GammaVariate& g, const char* name) {
  if (!(g.amplitude >= 0.0) || !(g.baseline >= 0.0) || !(g.alpha > 0.0) || !(g.beta > 0.0) ||
      !std::isfinite(g.onset_s))
    throw DataError(std::string("invalid enhancement curve: ") + name);
}

std::vector<float> gaussian_blur(const std::vector<float>& img, int w, int h, double sigma) {
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> k(2 * radius + 1);
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) sum += k[i + radius] = std::exp(-0.5 * i * i / (sigma * sigma));
  for (double& v : k) v /= sum;
  std::vector<double> tmp(img.size());
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int i = -radius; i <= radius; ++i) acc += k[i + radius] * img[y * w + std::clamp(x + i, 0, w - 1)];
      tmp[y * w + x] = acc;
    }
  std::vector<float> out(img.size());
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int i = -radius; i <= radius; ++i) acc += k[i + radius] * tmp[std::clamp(y + i, 0, h - 1) * w + x];
      out[y * w + x] = static_cast<float>(acc);
    }
  return out;
}

struct Affine {
  double a, b, c, d;  // forward linear part [[a, b], [c, d]]
  double cx, cy, tx, ty;

  Point forward(Point p) const {
    const double x = p.x - cx, y = p.y - cy;
    return {cx + tx + a * x + b * y, cy + ty + c * x + d * y};
  }
  Point inverse(Point q) const {
    const double x = q.x - cx - tx, y = q.y - cy - ty;
    const double det = a * d - b * c;
    return {cx + (d * x - b * y) / det, cy + (-c * x + a * y) / det};
  }
};

Affine make_affine(const ShiftTransform& t, int width, int height) {
  // Counterclockwise rotation on screen (y down) composed with an x-shear
  // and isotropic scale.
  const double th = t.rotation_deg * kDeg, sh = std::tan(t.shear_deg * kDeg);
  const double co = std::cos(th), si = std::sin(th);
  Affine m;
  m.a = t.scale * co;
  m.b = t.scale * (co * sh + si);
  m.c = t.scale * -si;
  m.d = t.scale * (-si * sh + co);
  m.cx = (width - 1) / 2.0;
  m.cy = (height - 1) / 2.0;
  m.tx = t.tx_px;
  m.ty = t.ty_px;
  return m;
}

}  // namespace

double GammaVariate::operator()(double t) const {
  const double s = t - onset_s;
  if (s <= 0.0) return baseline;
  const double peak = alpha * beta;
  return baseline + amplitude * std::pow(s / peak, alpha) * std::exp(alpha - s / beta);
}

void PhantomSpec::validate() const {
  if (width < 8 || height < 8 || n_frames < 1 || !(dt_s > 0.0)) throw DataError("phantom: bad image geometry");
  if (!(cavity_radius > 0.0) || !(rv_radius > 0.0)) throw DataError("phantom: radii must be positive");
  if (!(wall_thickness >= 3.0)) throw DataError("phantom: wall thickness must be at least 3 px");
  if (!(noise_sigma >= 0.0)) throw DataError("phantom: negative noise sigma");
  check_curve(background, "background");
  check_curve(rv, "rv");
  check_curve(lv, "lv");
  check_curve(myo, "myocardium");
  for (const auto& d : defects)
    if (!(d.scale >= 0.0 && d.scale <= 1.0) || !(d.width_deg > 0.0)) throw DataError("phantom: bad defect sector");
  const double outer = cavity_radius + wall_thickness;
  auto inside = [&](Point c, double r) {
    return c.x - r >= 1.0 && c.y - r >= 1.0 && c.x + r <= width - 2.0 && c.y + r <= height - 2.0;
  };
  if (!inside(lv_center, outer) || !inside(rv_center, rv_radius))
    throw DataError("phantom geometry exceeds image bounds");
  if (std::hypot(rv_center.x - lv_center.x, rv_center.y - lv_center.y) < outer + rv_radius + 1.0)
    throw DataError("phantom: RV overlaps the myocardium");
}

std::vector<double> class_curve(const PhantomSpec& spec, std::uint8_t cls) {
  const GammaVariate& g = cls == kMyocardium ? spec.myo : cls == kBloodpool ? spec.lv : spec.background;
  std::vector<double> out(static_cast<std::size_t>(spec.n_frames));
  for (int t = 0; t < spec.n_frames; ++t) out[t] = g(t * spec.dt_s);
  return out;
}

Phantom gen_phantom(const PhantomSpec& spec) {
  spec.validate();
  const int w = spec.width, h = spec.height, T = spec.n_frames;
  Phantom p;
  p.series = ImageSeries::zeros(w, h, T, spec.dt_s);
  p.truth = LabelMask::filled(w, h);

  auto sample = [&](const GammaVariate& g, double scale) {
    GammaVariate s = g;
    s.amplitude *= scale;
    std::vector<float> c(T);
    for (int t = 0; t < T; ++t) c[t] = static_cast<float>(s(t * spec.dt_s));
    return c;
  };
  const auto c_bg = sample(spec.background, 1.0), c_rv = sample(spec.rv, 1.0), c_lv = sample(spec.lv, 1.0),
             c_myo = sample(spec.myo, 1.0);
  std::vector<std::vector<float>> c_defect;
  for (const auto& d : spec.defects) c_defect.push_back(sample(spec.myo, d.scale));

  const double outer = spec.cavity_radius + spec.wall_thickness;
  double rsx = 0.0, rsy = 0.0;
  std::size_t rn = 0;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const double dx = x - spec.lv_center.x, dy = y - spec.lv_center.y;
      const double r = std::hypot(dx, dy);
      const std::vector<float>* curve = &c_bg;
      std::uint8_t label = kBackground;
      if (r < spec.cavity_radius) {
        label = kBloodpool;
        curve = &c_lv;
      } else if (r < outer) {
        label = kMyocardium;
        curve = &c_myo;
        const double a = image_angle_deg(dx, dy);
        for (std::size_t k = 0; k < spec.defects.size(); ++k)
          if (in_sector(a, spec.defects[k])) curve = &c_defect[k];
      } else if (std::hypot(x - spec.rv_center.x, y - spec.rv_center.y) < spec.rv_radius) {
        label = kBloodpool;
        curve = &c_rv;
        rsx += x;
        rsy += y;
        ++rn;
      }
      p.truth.at(x, y) = label;
      for (int t = 0; t < T; ++t) p.series.at(x, y, t) = (*curve)[t];
    }
  if (rn == 0) throw DataError("phantom: RV blob is empty");
  p.rv_centroid = {rsx / rn, rsy / rn};

  if (spec.noise_sigma > 0.0) {
    Rng rng = Rng::stream(spec.seed, StreamTag::PhantomNoise);
    for (float& v : p.series.data) v = static_cast<float>(v + rng.normal(0.0, spec.noise_sigma));
  }
  return p;
}

void ShiftTransform::validate() const {
  auto in = [](double v, double lo, double hi) { return v >= lo && v <= hi; };
  if (!in(rotation_deg, -60, 60) || !in(shear_deg, -10, 10) || !in(tx_px, -2, 2) || !in(ty_px, -2, 2) ||
      !in(scale, 0.8, 1.2) || !in(gamma, 0.5, 1.5) || !in(flatfield_sigma, 0, 5) ||
      !in(coil_amplitude, -0.3, 0.3) || !in(noise_sigma, 0, 0.02) || !(coil_width_px > 0.0))
    throw DataError("shift transform parameter out of range");
}

double ShiftTransform::magnitude() const {
  const double geo[] = {rotation_deg / 60.0, shear_deg / 10.0, tx_px / 2.0, ty_px / 2.0, (scale - 1.0) / 0.2};
  const double photo[] = {apply_gamma ? (gamma - 1.0) / 0.5 : 0.0, apply_flatfield ? flatfield_sigma / 5.0 : 0.0,
                          coil_amplitude / 0.3, noise_sigma / 0.02};
  double acc = 0.0;
  for (double z : geo) acc += z * z;
  for (double z : photo) acc += 0.5 * z * z;
  return std::sqrt(acc / (std::size(geo) + 0.5 * std::size(photo)));
}

ShiftTransform sample_shift(Rng& rng, int width, int height) {
  ShiftTransform t;
  t.rotation_deg = rng.uniform(-60, 60);
  t.shear_deg = rng.uniform(-10, 10);
  t.tx_px = rng.uniform(-2, 2);
  t.ty_px = rng.uniform(-2, 2);
  t.scale = rng.uniform(0.8, 1.2);
  t.apply_gamma = rng.bernoulli(0.5);
  const double g = rng.uniform(0.5, 1.5);
  if (t.apply_gamma) t.gamma = g;
  t.apply_flatfield = rng.bernoulli(0.5);
  const double s = rng.uniform(0, 5);
  if (t.apply_flatfield) t.flatfield_sigma = s;
  t.coil_amplitude = rng.uniform(-0.3, 0.3);
  t.coil_center = {rng.uniform(0.25, 0.75) * width, rng.uniform(0.25, 0.75) * height};
  t.coil_width_px = rng.uniform(0.25, 0.5) * std::min(width, height);
  t.noise_sigma = rng.uniform(0, 0.02);
  return t;
}

Point shift_point(const ShiftTransform& t, int width, int height, Point p) {
  return make_affine(t, width, height).forward(p);
}

ShiftedCase apply_shift(const ImageSeries& series, const LabelMask& truth, Point rv_centroid,
                        const ShiftTransform& t, Rng& rng) {
  t.validate();
  series.validate();
  if (truth.width != series.width || truth.height != series.height)
    throw DataError("apply_shift: mask and series dimensions differ");
  const int w = series.width, h = series.height, T = series.n_frames;
  const Affine m = make_affine(t, w, h);

  ShiftedCase out;
  out.series = series;
  out.truth = LabelMask::filled(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const Point s = m.inverse({static_cast<double>(x), static_cast<double>(y)});
      const int nx = static_cast<int>(std::floor(s.x + 0.5)), ny = static_cast<int>(std::floor(s.y + 0.5));
      if (truth.in_bounds(nx, ny)) out.truth.at(x, y) = truth.at(nx, ny);

      const double cx = std::clamp(s.x, 0.0, w - 1.0), cy = std::clamp(s.y, 0.0, h - 1.0);
      const int x0 = std::min(static_cast<int>(cx), w - 2 < 0 ? 0 : w - 2);
      const int y0 = std::min(static_cast<int>(cy), h - 2 < 0 ? 0 : h - 2);
      const int x1 = std::min(x0 + 1, w - 1), y1 = std::min(y0 + 1, h - 1);
      const double fx = cx - x0, fy = cy - y0;
      for (int f = 0; f < T; ++f) {
        const double v = (1 - fy) * ((1 - fx) * series.at(x0, y0, f) + fx * series.at(x1, y0, f)) +
                         fy * ((1 - fx) * series.at(x0, y1, f) + fx * series.at(x1, y1, f));
        out.series.at(x, y, f) = static_cast<float>(v);
      }
    }

  ImageSeries& s = out.series;
  if (t.apply_flatfield && t.flatfield_sigma > 0.0) {
    std::vector<float> mean(s.frame_size(), 0.0f);
    for (int f = 0; f < T; ++f)
      for (std::size_t i = 0; i < mean.size(); ++i) mean[i] += s.frame(f)[i] / T;
    const auto shade = gaussian_blur(mean, w, h, t.flatfield_sigma);
    double avg = 0.0;
    for (float v : shade) avg += v;
    avg /= static_cast<double>(shade.size());
    for (int f = 0; f < T; ++f) {
      auto fr = s.frame(f);
      for (std::size_t i = 0; i < fr.size(); ++i)
        if (shade[i] > 1e-6f) fr[i] = static_cast<float>(fr[i] * avg / shade[i]);
    }
  }
  if (t.coil_amplitude != 0.0) {
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        const double d2 = (x - t.coil_center.x) * (x - t.coil_center.x) + (y - t.coil_center.y) * (y - t.coil_center.y);
        const double g = 1.0 + t.coil_amplitude * std::exp(-d2 / (2.0 * t.coil_width_px * t.coil_width_px));
        for (int f = 0; f < T; ++f) s.at(x, y, f) = static_cast<float>(s.at(x, y, f) * g);
      }
  }
  if (t.apply_gamma && t.gamma != 1.0) {
    const float mx = *std::max_element(s.data.begin(), s.data.end());
    if (mx > 0.0f)
      for (float& v : s.data) v = static_cast<float>(mx * std::pow(std::max(v, 0.0f) / mx, t.gamma));
  }
  if (t.noise_sigma > 0.0)
    for (float& v : s.data) v = static_cast<float>(v + rng.normal(0.0, t.noise_sigma));

  out.rv_centroid = m.forward(rv_centroid);
  out.shift_magnitude = t.magnitude();
  return out;
}

ImageSeries moco_corrupt(const ImageSeries& systolic, const ImageSeries& diastolic, int f, Rng& rng,
                         std::vector<int>* swapped) {
  if (systolic.width != diastolic.width || systolic.height != diastolic.height ||
      systolic.n_frames != diastolic.n_frames)
    throw DataError("moco_corrupt: series dimensions differ");
  if (f < 0 || f > systolic.n_frames) throw DataError("moco_corrupt: frame count out of range");
  std::vector<int> window;
  for (int t = kMocoFirstFrame; t <= std::min(kMocoLastFrame, systolic.n_frames - 1); ++t) window.push_back(t);
  if (f > static_cast<int>(window.size())) throw DataError("moco_corrupt: more frames than the swap window");
  for (int i = 0; i < f; ++i) std::swap(window[i], window[rng.uniform_int(i, static_cast<int>(window.size()) - 1)]);
  std::vector<int> chosen(window.begin(), window.begin() + f);
  std::sort(chosen.begin(), chosen.end());
  ImageSeries out = systolic;
  for (int t : chosen) std::copy(diastolic.frame(t).begin(), diastolic.frame(t).end(), out.frame(t).begin());
  if (swapped) *swapped = chosen;
  return out;
}

std::array<Phantom, 2> gen_moco_pair(std::uint64_t seed) {
  PhantomSpec sys;
  sys.seed = mix_seed(seed, {static_cast<std::uint64_t>(StreamTag::MoCo), 0});
  sys.cavity_radius = 12.0;
  sys.wall_thickness = 9.0;
  sys.rv_center = {26.0, 64.0};
  PhantomSpec dia = sys;
  dia.seed = mix_seed(seed, {static_cast<std::uint64_t>(StreamTag::MoCo), 1});
  dia.cavity_radius = 17.0;
  dia.wall_thickness = 6.0;
  return {gen_phantom(sys), gen_phantom(dia)};
}

std::string to_string(ShiftRegime r) { return r == ShiftRegime::None ? "none" : "shifted"; }

ShiftRegime parse_regime(const std::string& s) {
  if (s == "none") return ShiftRegime::None;
  if (s == "shifted") return ShiftRegime::Shifted;
  throw DataError("unknown shift regime: " + s);
}

PhantomSpec random_phantom_spec(std::uint64_t seed, std::uint64_t case_id) {
  Rng rng = Rng::stream(seed, StreamTag::Phantom, {case_id});
  PhantomSpec s;
  s.lv_center = {64.0 + rng.uniform(-4, 4), 64.0 + rng.uniform(-4, 4)};
  s.cavity_radius = rng.uniform(12, 16);
  s.wall_thickness = rng.uniform(6, 9);
  s.rv_radius = rng.uniform(10, 14);
  const double angle = rng.uniform(150, 210) * kDeg;
  const double dist = s.cavity_radius + s.wall_thickness + s.rv_radius + rng.uniform(2, 3);
  s.rv_center = {s.lv_center.x + dist * std::cos(angle), s.lv_center.y - dist * std::sin(angle)};
  auto jitter = [&](GammaVariate& g) {
    g.amplitude *= rng.uniform(0.9, 1.1);
    g.onset_s += rng.uniform(-0.5, 0.5);
    g.alpha *= rng.uniform(0.9, 1.1);
    g.beta *= rng.uniform(0.9, 1.1);
  };
  jitter(s.rv);
  jitter(s.lv);
  jitter(s.myo);
  jitter(s.background);
  if (rng.bernoulli(0.3)) s.defects.push_back({rng.uniform(0, 360), 60.0, rng.uniform(0.4, 0.7)});
  s.seed = mix_seed(seed, {static_cast<std::uint64_t>(StreamTag::Cohort), case_id});
  return s;
}

std::vector<CohortCase> gen_cohort(int n, ShiftRegime regime, std::uint64_t seed, std::uint64_t first_id, int jobs) {
  if (n < 1) throw DataError("cohort needs at least one case");
  std::vector<CohortCase> out(static_cast<std::size_t>(n));
  parallel_for(out.size(), jobs, [&](std::size_t i) {
    CohortCase& c = out[i];
    const std::uint64_t id = first_id + i;
    c.spec = random_phantom_spec(seed, id);
    c.regime = regime;
    Phantom p = gen_phantom(c.spec);
    c.data.id = id;
    char name[32];
    std::snprintf(name, sizeof name, "case%05llu", static_cast<unsigned long long>(id));
    c.data.name = name;
    if (regime == ShiftRegime::Shifted) {
      Rng rng = Rng::stream(seed, StreamTag::Shift, {id});
      c.shift = sample_shift(rng, p.series.width, p.series.height);
      ShiftedCase s = apply_shift(p.series, p.truth, p.rv_centroid, c.shift, rng);
      c.data.series = std::move(s.series);
      c.data.truth = std::move(s.truth);
      c.data.rv_centroid = s.rv_centroid;
      c.data.shift_magnitude = s.shift_magnitude;
    } else {
      c.data.series = std::move(p.series);
      c.data.truth = std::move(p.truth);
      c.data.rv_centroid = p.rv_centroid;
    }
  });
  return out;
}

void write_cohort(const std::filesystem::path& dir, const std::vector<CohortCase>& cohort, std::uint64_t seed) {
  std::filesystem::create_directories(dir);
  Csv m;
  m.header = {"id", "name", "series", "truth", "dt_s", "dx_mm", "dy_mm", "rv_x", "rv_y", "regime",
              "shift_magnitude", "rotation_deg", "shear_deg", "tx_px", "ty_px", "scale", "gamma",
              "flatfield_sigma", "coil_amplitude", "noise_sigma", "seed"};
  for (const CohortCase& c : cohort) {
    const Case& d = c.data;
    const std::string series = d.name + "_series.fpt", truth = d.name + "_truth.fpt";
    write_fpt(dir / series, to_tensor(d.series));
    write_fpt(dir / truth, to_tensor(d.truth));
    const ShiftTransform& t = c.shift;
    m.add({fmt(static_cast<std::int64_t>(d.id)), d.name, series, truth, fmt(d.series.mean_dt()),
           fmt(d.series.spacing.dx), fmt(d.series.spacing.dy), fmt(d.rv_centroid.x), fmt(d.rv_centroid.y),
           to_string(c.regime), fmt(d.shift_magnitude), fmt(t.rotation_deg), fmt(t.shear_deg), fmt(t.tx_px),
           fmt(t.ty_px), fmt(t.scale), fmt(t.gamma), fmt(t.flatfield_sigma), fmt(t.coil_amplitude),
           fmt(t.noise_sigma), std::to_string(seed)});
  }
  m.write(dir / "manifest.csv");
}

std::vector<Case> read_manifest(const std::filesystem::path& manifest) {
  const Csv m = read_csv(manifest);
  const auto dir = manifest.parent_path();
  std::vector<Case> out;
  for (std::size_t r = 0; r < m.rows.size(); ++r) {
    Case c;
    c.id = static_cast<std::uint64_t>(parse_int(m.cell(r, "id")));
    c.name = m.cell(r, "name");
    const Spacing sp{parse_double(m.cell(r, "dx_mm")), parse_double(m.cell(r, "dy_mm"))};
    c.series = series_from_tensor(read_fpt(dir / m.cell(r, "series")), parse_double(m.cell(r, "dt_s")), sp);
    c.truth = mask_from_tensor(read_fpt(dir / m.cell(r, "truth")));
    c.rv_centroid = {parse_double(m.cell(r, "rv_x")), parse_double(m.cell(r, "rv_y"))};
    c.shift_magnitude = parse_double(m.cell(r, "shift_magnitude"));
    out.push_back(std::move(c));
  }
  return out;
}

}  // namespace daugs
