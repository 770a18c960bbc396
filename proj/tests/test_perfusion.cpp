#include <doctest.h>

#include <cmath>

#include "daugs/perfusion.hpp"
#include "daugs/report.hpp"
#include "daugs/synth.hpp"
#include "support.hpp"

using namespace daugs;

namespace {

std::vector<double> gamma_aif(int n, double dt) {
  const GammaVariate g{4.0, 4.0, 2.5, 1.6, 0.0};
  std::vector<double> a(n);
  for (int i = 0; i < n; ++i) a[i] = g(i * dt);
  return a;
}

// Direct forward convolution with an integer-frame delay.
std::vector<double> forward(const std::vector<double>& aif, double dt, double F, double w, double k, int delay) {
  std::vector<double> out(aif.size(), 0.0);
  for (std::size_t i = 0; i < aif.size(); ++i)
    for (std::size_t j = 0; j <= i; ++j) {
      const double a = static_cast<int>(j) - delay >= 0 ? aif[j - delay] : 0.0;
      out[i] += dt * a * F / (1 + std::exp(((i - j) * dt - w) / k));
    }
  return out;
}

}  // namespace

TEST_SUITE("perfusion") {
  TEST_CASE("forward model matches a direct convolution") {
    const auto aif = gamma_aif(40, 1.0);
    const FermiParams p{0.03, 5.0, 1.2, 2.0};
    const auto m = fermi_model(p, aif, 1.0);
    const auto ref = forward(aif, 1.0, 0.03, 5.0, 1.2, 2);
    for (std::size_t i = 0; i < m.size(); ++i) CHECK(m[i] == doctest::Approx(ref[i]).epsilon(1e-12));
    CHECK(p.r0() == doctest::Approx(0.03 / (1 + std::exp(-5.0 / 1.2))));
  }

  TEST_CASE("noiseless recovery") {
    for (double dt : {1.0, 0.5}) {
      const auto aif = gamma_aif(60, dt);
      const double F = 0.025, w = 5.0, k = 1.0;
      const auto tissue = forward(aif, dt, F, w, k, 1);
      const SegmentMbf r = fermi_fit(tissue, aif, dt);
      const double truth = F / (1 + std::exp(-w / k));
      CHECK(std::abs(r.mbf - truth) / truth < 0.01);
      CHECK(r.residual_rms < 1e-4);
      FitOptions o;
      o.mbf_scale = 60.0;
      CHECK(fermi_fit(tissue, aif, dt, o).mbf == doctest::Approx(60.0 * r.mbf).epsilon(1e-6));
    }
  }

  TEST_CASE("objective trace is non-increasing") {
    const auto aif = gamma_aif(50, 1.0);
    const SegmentMbf r = fermi_fit(forward(aif, 1.0, 0.02, 8.0, 2.0, 0), aif, 1.0);
    REQUIRE_FALSE(r.objective_trace.empty());
    for (std::size_t i = 1; i < r.objective_trace.size(); ++i)
      CHECK(r.objective_trace[i] <= r.objective_trace[i - 1]);
  }

  TEST_CASE("degenerate inputs") {
    const auto aif = gamma_aif(30, 1.0);
    CHECK_THROWS_AS(fermi_fit(std::vector<double>(30, 0.1), std::vector<double>(30, 0.0), 1.0), DataError);
    CHECK_THROWS_AS(fermi_fit(std::vector<double>(29, 0.1), aif, 1.0), DataError);
    const SegmentMbf zero = fermi_fit(std::vector<double>(30, 0.0), aif, 1.0);
    CHECK(zero.mbf == doctest::Approx(0.0).scale(1.0));
    const SegmentMbf flat = fermi_fit(std::vector<double>(30, 0.5), aif, 1.0);
    CHECK(std::isfinite(flat.mbf));
  }

  TEST_CASE("curve extraction") {
    const LabelMask m = test::annulus(40, 40, 20, 20, 5, 9);
    ImageSeries s = ImageSeries::zeros(40, 40, 6);
    for (int t = 0; t < 6; ++t)
      for (int y = 0; y < 40; ++y)
        for (int x = 0; x < 40; ++x)
          s.at(x, y, t) = m.at(x, y) == kBloodpool ? 2.0f * t + 1 : m.at(x, y) == kMyocardium ? 0.5f * t + 3 : 9;
    const SegmentLabels seg = aha6_split(m, {2, 20});
    const PerfusionCurves c = extract_curves(s, m, seg, 2);
    for (int t = 0; t < 6; ++t) {
      CHECK(c.aif[t] == doctest::Approx(2.0 * t - 1.0));
      for (int k = 0; k < 6; ++k) CHECK(c.tissue[k][t] == doctest::Approx(0.5 * t - 0.25));
    }
    for (bool p : c.present) CHECK(p);
    CHECK_THROWS_AS(extract_curves(s, LabelMask::filled(40, 40, kMyocardium), seg), DataError);
  }

  TEST_CASE("lut interpolation") {
    const auto dir = test::scratch_dir("lut");
    write_text(dir / "lut.csv", "signal,concentration\n0,0\n1,2\n3,3\n");
    const Lut lut = Lut::read(dir / "lut.csv");
    CHECK(lut(0.5) == 1.0);
    CHECK(lut(2.0) == 2.5);
    CHECK(lut(4.0) == 3.5);
    CHECK(lut(-1.0) == -2.0);
    write_text(dir / "bad.csv", "signal,concentration\n0,0\n0,1\n");
    CHECK_THROWS_AS(Lut::read(dir / "bad.csv"), DataError);
  }

  TEST_CASE("phantom quantification and failure flags") {
    PhantomSpec spec;
    spec.noise_sigma = 0.0;
    const Phantom p = gen_phantom(spec);
    Case c{0, "p", p.series, p.truth, p.rv_centroid, 0.0};
    const MbfResult r = quantify_mbf(p.series, p.truth, p.rv_centroid);
    for (const auto& s : r.segments) {
      REQUIRE(s.has_value());
      CHECK(s->mbf > 0.0);
    }

    LabelMask gapped = p.truth;
    for (int y = 0; y < 64; ++y)
      for (int x = 63; x <= 65; ++x)
        if (gapped.at(x, y) == kMyocardium) gapped.at(x, y) = kBackground;
    LabelMask island = p.truth;
    const double r_mid = spec.cavity_radius + spec.wall_thickness / 2;
    test::paint_disc(island, 64 + r_mid, 64, 1.6, kBloodpool);

    const MbfTable t = mbf_table(c, {{"gapped", gapped}, {"island", island}});
    REQUIRE(t.rows.size() == 3);
    CHECK(t.rows[0].method == "manual");
    for (bool f : t.rows[0].flagged) CHECK_FALSE(f);
    int flagged = 0;
    for (bool f : t.rows[1].flagged) flagged += f;
    CHECK(flagged == 1);
    for (bool f : t.rows[2].flagged) CHECK(f);

    const auto agreement = mbf_agreement({t});
    REQUIRE(agreement.size() == 2);
    CHECK(agreement[0].n_pairs == 5);
    CHECK(agreement[0].n_excluded == 1);
    CHECK(agreement[1].n_pairs == 0);
  }
}
