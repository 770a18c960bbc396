#include "daugs/perfusion.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Dense>

#include "daugs/report.hpp"

namespace daugs {
namespace {

using Vec4 = Eigen::Vector4d;

struct Bounds {
  Vec4 lo, hi;
  Vec4 project(Vec4 p) const { return p.cwiseMax(lo).cwiseMin(hi); }
};

FermiParams to_params(const Vec4& v) { return {v[0], v[1], v[2], v[3]}; }

double delayed(const std::vector<double>& aif, double dt, double t) {
  const double u = t / dt;
  if (u < 0.0) return 0.0;
  const auto n = static_cast<double>(aif.size() - 1);
  if (u >= n) return aif.back();
  const auto j = static_cast<std::size_t>(u);
  const double f = u - static_cast<double>(j);
  return (1.0 - f) * aif[j] + f * aif[j + 1];
}

double sum_squares(const std::vector<double>& model, const std::vector<double>& y) {
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) s += (model[i] - y[i]) * (model[i] - y[i]);
  return s;
}

struct Run {
  Vec4 p;
  double objective = 0.0;
  double gradient_norm = 0.0;
  int iterations = 0;
  bool converged = false;
  std::vector<double> trace;
};

class FermiProblem {
 public:
  FermiProblem(const std::vector<double>& tissue, const std::vector<double>& aif, double dt)
      : y_(tissue), aif_(aif), dt_(dt) {
    const double dur = dt * static_cast<double>(aif.size() - 1);
    bounds_.lo << 0.0, 0.0, 0.05 * dt, 0.0;
    bounds_.hi << 1e6, dur, dur, 0.25 * dur;
  }

  const Bounds& bounds() const { return bounds_; }

  std::vector<double> model(const Vec4& p) const { return fermi_model(to_params(p), aif_, dt_); }
  double objective(const Vec4& p) const { return sum_squares(model(p), y_); }

  // Amplitude minimising the residual for fixed shape parameters.
  double best_amplitude(Vec4 p) const {
    p[0] = 1.0;
    const auto g = model(p);
    double gy = 0.0, gg = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
      gy += g[i] * y_[i];
      gg += g[i] * g[i];
    }
    return gg > 0.0 ? std::max(0.0, gy / gg) : 0.0;
  }

  Run solve(Vec4 p, const FitOptions& opts) const {
    const std::size_t n = y_.size();
    Run run;
    p = bounds_.project(p);
    auto m = model(p);
    double S = sum_squares(m, y_);
    run.trace.push_back(S);
    double lambda = -1.0;
    Eigen::MatrixXd J(n, 4);
    Eigen::VectorXd r(n);
    for (run.iterations = 0; run.iterations < opts.max_iterations; ++run.iterations) {
      for (std::size_t i = 0; i < n; ++i) r[i] = m[i] - y_[i];
      for (int k = 0; k < 4; ++k) {
        const double h = 1e-6 * std::max(1.0, std::abs(p[k]));
        Vec4 a = p, b = p;
        a[k] += h;
        b[k] -= h;
        const auto ma = model(a), mb = model(b);
        for (std::size_t i = 0; i < n; ++i) J(i, k) = (ma[i] - mb[i]) / (2.0 * h);
      }
      Vec4 g = J.transpose() * r;
      Vec4 pg = g;
      for (int k = 0; k < 4; ++k)
        if ((p[k] <= bounds_.lo[k] && g[k] > 0.0) || (p[k] >= bounds_.hi[k] && g[k] < 0.0)) pg[k] = 0.0;
      run.gradient_norm = pg.lpNorm<Eigen::Infinity>();
      if (run.gradient_norm < opts.tolerance) {
        run.converged = true;
        break;
      }
      const Eigen::Matrix4d A = J.transpose() * J;
      if (lambda < 0.0) lambda = 1e-3 * A.diagonal().maxCoeff();
      bool accepted = false;
      while (!accepted) {
        Eigen::Matrix4d D = A;
        for (int k = 0; k < 4; ++k) D(k, k) += lambda * std::max(A(k, k), 1e-12);
        const Vec4 cand = bounds_.project(p + D.ldlt().solve(-g));
        const double step = (cand - p).lpNorm<Eigen::Infinity>();
        if (step < opts.tolerance * (1.0 + p.lpNorm<Eigen::Infinity>())) {
          run.converged = true;
          break;
        }
        const auto mc = model(cand);
        const double Sc = sum_squares(mc, y_);
        if (Sc < S) {
          p = cand;
          m = mc;
          S = Sc;
          run.trace.push_back(S);
          lambda = std::max(lambda / 3.0, 1e-12);
          accepted = true;
        } else {
          lambda *= 2.0;
          if (lambda > 1e20) break;
        }
      }
      if (run.converged || !accepted) break;
    }
    run.p = p;
    run.objective = S;
    return run;
  }

 private:
  const std::vector<double>& y_;
  const std::vector<double>& aif_;
  double dt_;
  Bounds bounds_;
};

}  // namespace

double FermiParams::impulse(double t) const { return F / (1.0 + std::exp((t - w) / k)); }

std::vector<double> fermi_model(const FermiParams& p, const std::vector<double>& aif, double dt_s) {
  const std::size_t n = aif.size();
  std::vector<double> a(n), R(n), out(n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    a[j] = delayed(aif, dt_s, j * dt_s - p.delay);
    R[j] = p.impulse(j * dt_s);
  }
  for (std::size_t i = 0; i < n; ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j <= i; ++j) acc += a[j] * R[i - j];
    out[i] = dt_s * acc;
  }
  return out;
}

double Lut::operator()(double s) const {
  const std::size_t n = signal.size();
  std::size_t i = 1;
  while (i + 1 < n && s > signal[i]) ++i;
  const double f = (s - signal[i - 1]) / (signal[i] - signal[i - 1]);
  return concentration[i - 1] + f * (concentration[i] - concentration[i - 1]);
}

Lut Lut::read(const std::filesystem::path& path) {
  const Csv csv = read_csv(path);
  if (csv.header.size() != 2) throw DataError("LUT must have two columns");
  Lut lut;
  for (const auto& row : csv.rows) {
    lut.signal.push_back(parse_double(row[0]));
    lut.concentration.push_back(parse_double(row[1]));
  }
  if (lut.signal.size() < 2) throw DataError("LUT needs at least two rows");
  for (std::size_t i = 1; i < lut.signal.size(); ++i)
    if (!(lut.signal[i] > lut.signal[i - 1]) || !(lut.concentration[i] >= lut.concentration[i - 1]))
      throw DataError("LUT must be monotone with strictly increasing signal");
  return lut;
}

PerfusionCurves extract_curves(const ImageSeries& series, const LabelMask& mask, const SegmentLabels& segments,
                               int baseline_frames) {
  if (mask.width != series.width || mask.height != series.height || segments.ids.size() != mask.labels.size())
    throw DataError("extract_curves: dimension mismatch");
  if (baseline_frames < 1 || baseline_frames > series.n_frames) throw DataError("extract_curves: bad baseline");
  const auto cavity = lv_cavity(mask);
  if (std::none_of(cavity.begin(), cavity.end(), [](std::uint8_t v) { return v != 0; }))
    throw DataError("extract_curves: mask has no LV cavity");
  if (mask.count(kMyocardium) == 0) throw DataError("extract_curves: mask has no myocardium");

  const int T = series.n_frames;
  PerfusionCurves c;
  c.dt_s = series.mean_dt();
  c.baseline_frames = baseline_frames;
  auto mean_curve = [&](auto&& member) {
    std::vector<double> curve(T, 0.0);
    std::size_t count = 0;
    for (std::size_t i = 0; i < series.frame_size(); ++i) {
      if (!member(i)) continue;
      ++count;
      for (int t = 0; t < T; ++t) curve[t] += series.frame(t)[i];
    }
    if (count == 0) return std::vector<double>{};
    for (double& v : curve) v /= static_cast<double>(count);
    double base = 0.0;
    for (int t = 0; t < baseline_frames; ++t) base += curve[t];
    base /= baseline_frames;
    for (double& v : curve) v -= base;
    return curve;
  };
  c.aif = mean_curve([&](std::size_t i) { return cavity[i] != 0; });
  for (int s = 0; s < 6; ++s) {
    c.tissue[s] = mean_curve([&](std::size_t i) { return segments.ids[i] == s + 1; });
    c.present[s] = !c.tissue[s].empty();
  }
  return c;
}

SegmentMbf fermi_fit(const std::vector<double>& tissue, const std::vector<double>& aif, double dt_s,
                     const FitOptions& opts) {
  if (tissue.size() != aif.size() || aif.size() < 8) throw DataError("fermi_fit: curves need equal length >= 8");
  if (!(dt_s > 0.0)) throw DataError("fermi_fit: dt must be positive");
  if (std::all_of(aif.begin(), aif.end(), [](double v) { return v == 0.0; }))
    throw DataError("fermi_fit: all-zero AIF");
  for (std::size_t i = 0; i < aif.size(); ++i)
    if (!std::isfinite(aif[i]) || !std::isfinite(tissue[i])) throw DataError("fermi_fit: non-finite samples");

  const FermiProblem problem(tissue, aif, dt_s);
  const double dur = dt_s * static_cast<double>(aif.size() - 1);
  const double starts[4][3] = {
      {0.10 * dur, 0.05 * dur, 0.0},
      {0.25 * dur, 0.10 * dur, 0.0},
      {0.40 * dur, 0.15 * dur, dt_s},
      {0.15 * dur, 0.30 * dur, 2.0 * dt_s},
  };
  std::optional<Run> best;
  for (const auto& s : starts) {
    Vec4 p(0.0, s[0], s[1], s[2]);
    p = problem.bounds().project(p);
    p[0] = problem.best_amplitude(p);
    Run run = problem.solve(p, opts);
    if (!best || run.objective < best->objective) best = std::move(run);
  }

  SegmentMbf out;
  out.params = to_params(best->p);
  out.mbf = std::max(0.0, out.params.r0() * opts.mbf_scale);
  out.residual_rms = std::sqrt(best->objective / static_cast<double>(tissue.size()));
  out.gradient_norm = best->gradient_norm;
  out.iterations = best->iterations;
  out.converged = best->converged;
  out.objective_trace = std::move(best->trace);
  return out;
}

MbfResult quantify_mbf(const ImageSeries& series, const LabelMask& mask, Point rv_centroid, const FitOptions& opts,
                       const Lut* lut) {
  const ImageSeries* src = &series;
  ImageSeries converted;
  if (lut) {
    converted = series;
    for (float& v : converted.data) v = static_cast<float>((*lut)(v));
    src = &converted;
  }
  const SegmentLabels seg = aha6_split(mask, rv_centroid);
  const PerfusionCurves c = extract_curves(*src, mask, seg);
  MbfResult r;
  for (int s = 0; s < 6; ++s) {
    if (!c.present[s]) continue;
    r.segments[s] = fermi_fit(c.tissue[s], c.aif, c.dt_s, opts);
    r.converged = r.converged && r.segments[s]->converged;
  }
  return r;
}

MbfTable mbf_table(const Case& c, const std::vector<std::pair<std::string, LabelMask>>& methods,
                   const FitOptions& opts, const Lut* lut) {
  MbfTable table;
  table.case_name = c.name;
  auto row_for = [&](const std::string& name, const LabelMask& mask) {
    MbfMethodRow row;
    row.method = name;
    const Point rv = c.rv_centroid;
    if (mask.count(kMyocardium) == 0) {
      row.flagged.fill(true);
      return row;
    }
    const FailureReport fr = detect_failure(mask, aha6_split(mask, rv));
    if (fr.bloodpool_inclusion) row.flagged.fill(true);
    for (int s : fr.noncontiguous_segments) row.flagged[s - 1] = true;
    try {
      const MbfResult r = quantify_mbf(c.series, mask, rv, opts, lut);
      for (int s = 0; s < 6; ++s)
        if (r.segments[s]) row.mbf[s] = r.segments[s]->mbf;
    } catch (const DataError&) {
      row.flagged.fill(true);
    }
    return row;
  };
  table.rows.push_back(row_for("manual", c.truth));
  for (const auto& [name, mask] : methods) table.rows.push_back(row_for(name, mask));
  return table;
}

std::vector<MbfAgreement> mbf_agreement(const std::vector<MbfTable>& tables) {
  std::vector<MbfAgreement> out;
  if (tables.empty()) return out;
  for (std::size_t m = 1; m < tables.front().rows.size(); ++m) {
    MbfAgreement a;
    a.method = tables.front().rows[m].method;
    for (const MbfTable& t : tables) {
      const MbfMethodRow& ref = t.rows[0];
      const MbfMethodRow& row = t.rows.at(m);
      for (int s = 0; s < 6; ++s) {
        if (ref.mbf[s] && row.mbf[s] && !ref.flagged[s] && !row.flagged[s]) {
          a.reference.push_back(*ref.mbf[s]);
          a.values.push_back(*row.mbf[s]);
        } else {
          ++a.n_excluded;
        }
      }
    }
    a.n_pairs = static_cast<int>(a.reference.size());
    if (a.n_pairs >= 3) {
      try {
        a.stats = agreement_stats(a.reference, a.values);
      } catch (const DataError&) {
      }
    }
    out.push_back(std::move(a));
  }
  return out;
}

void write_mbf_report(const std::filesystem::path& dir, const std::vector<MbfTable>& tables) {
  Csv csv;
  csv.header = {"case", "segment", "method", "mbf", "flagged"};
  for (const MbfTable& t : tables)
    for (const MbfMethodRow& row : t.rows)
      for (int s = 0; s < 6; ++s)
        csv.add({t.case_name, fmt(s + 1), row.method, row.mbf[s] ? fmt(*row.mbf[s]) : "", fmt(row.flagged[s])});
  csv.write(dir / "mbf.csv");

  Csv agree;
  agree.header = {"method", "n_pairs", "n_excluded", "pearson_r2", "slope", "intercept",
                  "bias", "loa_low", "loa_high", "spearman_rho"};
  for (const MbfAgreement& a : mbf_agreement(tables)) {
    std::vector<std::string> row = {a.method, fmt(a.n_pairs), fmt(a.n_excluded)};
    if (a.stats) {
      const Agreement& s = *a.stats;
      for (double v : {s.pearson_r2, s.slope, s.intercept, s.bias, s.loa_low, s.loa_high, s.spearman_rho})
        row.push_back(fmt(v));
    } else {
      row.resize(agree.header.size());
    }
    agree.add(std::move(row));
    write_text(dir / ("mbf_scatter_" + a.method + ".svg"),
               svg_scatter("MBF: " + a.method + " vs manual", "manual", a.method,
                           {{a.method, a.reference, a.values, {}}}, true));
    if (a.stats)
      write_text(dir / ("mbf_bland_altman_" + a.method + ".svg"),
                 svg_bland_altman("MBF Bland-Altman: " + a.method, a.reference, a.values, a.stats->bias,
                                  a.stats->loa_low, a.stats->loa_high));
  }
  agree.write(dir / "mbf_agreement.csv");
}

}  // namespace daugs
