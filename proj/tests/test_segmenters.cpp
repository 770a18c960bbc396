#include <doctest.h>

#include <cmath>
#include <fstream>
#include <iterator>

#include "daugs/cli.hpp"
#include "daugs/harness.hpp"
#include "daugs/metrics.hpp"
#include "daugs/patching.hpp"
#include "daugs/segmenters.hpp"
#include "daugs/synth.hpp"
#include "daugs/wire.hpp"
#include "support.hpp"

using namespace daugs;

namespace {

const std::string kFake = DAUGS_FAKE_BACKEND;

LabelMask argmax_labels(const PatchPrediction& p) {
  LabelMask m = LabelMask::filled(p.size, p.size);
  for (int y = 0; y < p.size; ++y)
    for (int x = 0; x < p.size; ++x) {
      int best = 0;
      for (int k = 1; k < kNumClasses; ++k)
        if (p.at(x, y, k) > p.at(x, y, best)) best = k;
      m.at(x, y) = static_cast<std::uint8_t>(best);
    }
  return m;
}

SegmenterSpec external(const std::string& args, double timeout_s = 10.0) {
  SegmenterSpec s;
  s.kind = SegmenterKind::External;
  s.model_id = 7;
  s.external.command = kFake + " " + args;
  s.external.timeout_s = timeout_s;
  return s;
}

ImageSeries ramp_series(int w, int h, int t) {
  ImageSeries s = ImageSeries::zeros(w, h, t);
  for (std::size_t i = 0; i < s.data.size(); ++i) s.data[i] = 0.25f * static_cast<float>(i);
  return s;
}

BackendError::Kind run_failing(const SegmenterSpec& spec) {
  const ImageSeries s = ramp_series(8, 8, 2);
  try {
    auto seg = make_segmenter(spec, {}, 4, 2);
    for (const auto& o : make_grid(8, 8, 4, 4).origins) seg->segment(view_patch(s, o, 4));
    seg->finish();
  } catch (const BackendError& e) {
    CHECK(e.model_id() == 7);
    return e.kind();
  }
  FAIL("backend did not fail");
  return BackendError::Kind::Protocol;
}

}  // namespace

TEST_SUITE("segmenters") {
  TEST_CASE("kind names") {
    for (auto k : {SegmenterKind::Oracle, SegmenterKind::PerturbedOracle, SegmenterKind::CurveMatching,
                   SegmenterKind::External})
      CHECK(parse_segmenter_kind(to_string(k)) == k);
    CHECK_THROWS_AS(parse_segmenter_kind("unet"), DataError);
  }

  TEST_CASE("oracle gives the one-hot truth window") {
    const Phantom p = gen_phantom(PhantomSpec{});
    const CaseContext ctx{1, 0, &p.truth, 0.0};
    SegmenterSpec spec;
    const Origin o{32, 16};
    const PatchPrediction pred = segment_patch(spec, view_patch(p.series, o, 64), ctx);
    CHECK(pred.max_sum_error() == 0.0);
    for (int y = 0; y < 64; ++y)
      for (int x = 0; x < 64; ++x) CHECK(pred.at(x, y, p.truth.at(o.x0 + x, o.y0 + y)) == 1.0f);
    CHECK_THROWS_AS(segment_patch(spec, view_patch(p.series, o, 64), CaseContext{}), DataError);
  }

  TEST_CASE("unperturbed oracle is the identity") {
    const Phantom p = gen_phantom(PhantomSpec{});
    PerturbedOracle po(p.truth, {}, 1, 0, 3, 0.7);
    const Origin o{10, 20};
    const LabelMask m = argmax_labels(po.segment(view_patch(p.series, o, 64)));
    for (int y = 0; y < 64; ++y)
      for (int x = 0; x < 64; ++x) CHECK(m.at(x, y) == p.truth.at(o.x0 + x, o.y0 + y));
  }

  TEST_CASE("perturbation is deterministic per model and origin") {
    const Phantom p = gen_phantom(PhantomSpec{});
    const PerturbParams params{1.0, 0.05, 1.0};
    PerturbedOracle a(p.truth, params, 1, 4, 3, 0.5), b(p.truth, params, 1, 4, 3, 0.5), c(p.truth, params, 1, 4, 5, 0.5);
    const PatchView v = view_patch(p.series, {32, 32}, 64);
    CHECK(a.segment(v).probs == b.segment(v).probs);
    CHECK(a.segment(v).probs != c.segment(v).probs);
  }

  TEST_CASE("label noise lowers dice monotonically") {
    const Phantom p = gen_phantom(PhantomSpec{});
    const PatchView v = view_patch(p.series, {32, 32}, 64);
    LabelMask truth = LabelMask::filled(64, 64);
    for (int y = 0; y < 64; ++y)
      for (int x = 0; x < 64; ++x) truth.at(x, y) = p.truth.at(32 + x, 32 + y);
    double prev = 1.01;
    for (double rate : {0.0, 0.05, 0.2, 0.5}) {
      PerturbedOracle po(p.truth, {0.0, rate, 0.0}, 1, 0, 0, 0.0);
      const double d = dice(argmax_labels(po.segment(v)), truth, kMyocardium);
      CHECK(d < prev);
      prev = d;
    }
  }

  TEST_CASE("boundary morphing") {
    const LabelMask truth = test::annulus(40, 40, 20, 20, 6, 10);
    PerturbedOracle po(truth, {1.0, 0.0, 0.0}, 1, 0, 0, 0.0);
    CHECK(po.morphed(0.0) == truth);
    CHECK(po.morphed(2.0).count(kMyocardium) > truth.count(kMyocardium));
    const LabelMask eroded = po.morphed(-2.0);
    CHECK(eroded.count(kMyocardium) < truth.count(kMyocardium));
    CHECK(eroded.at(20, 20 - 6) == kBloodpool);  // inner wall pixel joins the cavity
    CHECK(eroded.at(20, 20 - 9) == kBackground);
  }

  TEST_CASE("label corruption rate") {
    Rng rng(2);
    std::vector<std::uint8_t> labels(100000, kMyocardium);
    CHECK(corrupt_labels(labels, 0.0, rng) == labels);
    const auto all = corrupt_labels(labels, 1.0, rng);
    CHECK(std::count(all.begin(), all.end(), kMyocardium) == 0);
    const auto some = corrupt_labels(labels, 0.1, rng);
    const auto flipped = std::count_if(some.begin(), some.end(), [](auto v) { return v != kMyocardium; });
    CHECK(flipped == doctest::Approx(10000).epsilon(0.05));
    const auto to_bp = std::count(some.begin(), some.end(), kBloodpool);
    CHECK(static_cast<double>(to_bp) / flipped == doctest::Approx(0.5).epsilon(0.05));
  }

  TEST_CASE("curve matching") {
    CurveParams params;
    params.prototypes = {std::vector<double>{0, 0.1, 0.2, 0.1}, {0, 0.5, 0.3, 0.2}, {0, 1.0, 0.4, 0.3}};
    ImageSeries s = ImageSeries::zeros(3, 3, 4);
    for (int y = 0; y < 3; ++y)
      for (int x = 0; x < 3; ++x)
        for (int t = 0; t < 4; ++t) s.at(x, y, t) = static_cast<float>(params.prototypes[x][t]);
    const PatchPrediction p = curve_matching(view_patch(s, {0, 0}, 3), params);
    CHECK(p.max_sum_error() < 1e-6);
    for (int y = 0; y < 3; ++y)
      for (int x = 0; x < 3; ++x) CHECK(argmax_labels(p).at(x, y) == x);
    // Middle class sits between the others, so the outer classes are equally likely there.
    CurveParams sym = params;
    sym.prototypes = {std::vector<double>{0, 0, 0, 1}, {0, 0, 0.5, 1}, {0, 0, 1, 1}};
    for (int t = 0; t < 4; ++t) s.at(1, 1, t) = static_cast<float>(sym.prototypes[1][t]);
    const PatchPrediction q = curve_matching(view_patch(s, {0, 0}, 3), sym);
    CHECK(q.at(1, 1, 0) == doctest::Approx(q.at(1, 1, 2)).epsilon(1e-6));

    CurveParams bad = params;
    bad.prototypes[2] = {1, 1, 1, 1};
    CHECK_THROWS_AS(curve_matching(view_patch(s, {0, 0}, 3), bad), DataError);
    CHECK_THROWS_AS(validate_prototypes(params, 5), DataError);
  }

  TEST_CASE("curve matching against a direct computation") {
    const CurveParams params = phantom_prototypes(PhantomSpec{});
    const Phantom p = gen_phantom(PhantomSpec{});
    const PatchView v = view_patch(p.series, {40, 40}, 8);
    const PatchPrediction pred = curve_matching(v, params);
    const int T = v.n_frames;
    double s = 0;
    for (const auto& proto : params.prototypes) {
      double m = 0, ss = 0;
      for (double x : proto) m += x / T;
      for (double x : proto) ss += (x - m) * (x - m);
      s += std::sqrt(ss / T) / 3;
    }
    std::vector<double> mt(T);
    double mbar = 0;
    for (int t = 0; t < T; ++t) {
      for (int y = 0; y < 8; ++y)
        for (int x = 0; x < 8; ++x) mt[t] += v.at(x, y, t) / 64.0;
      mbar += mt[t] / T;
    }
    for (int y = 0; y < 8; y += 3)
      for (int x = 0; x < 8; x += 3) {
        double e[3], z = 0;
        for (int k = 0; k < 3; ++k) {
          double num = 0, den = 0;
          for (int t = 0; t < T; ++t) {
            const double w = std::max(0.0, 1 + params.context_weight * (mt[t] - mbar) / s);
            num += w * std::pow(v.at(x, y, t) - params.prototypes[k][t], 2);
            den += w;
          }
          z += e[k] = std::exp(-std::sqrt(num / den) / s / params.temperature);
        }
        for (int k = 0; k < 3; ++k) CHECK(pred.at(x, y, k) == doctest::Approx(e[k] / z).epsilon(1e-5));
      }
  }

  TEST_CASE("external backend serves uniform probabilities") {
    const ImageSeries s = ramp_series(8, 8, 2);
    auto seg = make_segmenter(external("uniform"), {}, 4, 2);
    const PatchPrediction p = seg->segment(view_patch(s, {4, 0}, 4));
    REQUIRE(p.probs.size() == 48);
    for (float v : p.probs) CHECK(v == 1.0f / 3.0f);
    seg->finish();
  }

  TEST_CASE("external backend failures are classified") {
    CHECK(run_failing(external("crash")) == BackendError::Kind::Terminated);
    CHECK(run_failing(external("bad-version")) == BackendError::Kind::Version);
    CHECK(run_failing(external("bad-magic")) == BackendError::Kind::Handshake);
    CHECK(run_failing(external("wrong-shape")) == BackendError::Kind::Shape);
    CHECK(run_failing(external("hang", 0.3)) == BackendError::Kind::Timeout);
    CHECK(run_failing(external("exit1")) == BackendError::Kind::Exit);
    SegmenterSpec missing = external("");
    missing.external.command = "/nonexistent/backend";
    CHECK(run_failing(missing) == BackendError::Kind::Terminated);
  }

  TEST_CASE("external curve backend matches the in-process segmenter") {
    const auto dir = test::scratch_dir("curve_backend");
    const CurveParams params = phantom_prototypes(PhantomSpec{});
    cli::write_prototypes(dir / "p.csv", params.prototypes);
    const CohortCase cc = gen_cohort(1, ShiftRegime::None, 5, 0)[0];

    SegmenterSpec in_proc;
    in_proc.kind = SegmenterKind::CurveMatching;
    in_proc.curve = params;
    in_proc.curve.prototypes = cli::read_prototypes(dir / "p.csv");
    SegmenterSpec ext = external("curve " + (dir / "p.csv").string());
    ext.model_id = 0;
    const GridConfig grid{64, 32, 16};
    const SegmentationSolution a = solve(in_proc, cc.data, grid, 1);
    const SegmentationSolution b = solve(ext, cc.data, grid, 1);
    CHECK(a.mask == b.mask);
    CHECK(a.mean_probs.probs == b.mean_probs.probs);
    CHECK(a.umap.u_pp == b.umap.u_pp);
  }
}

TEST_SUITE("wire") {
  TEST_CASE("handshake bytes") {
    const wire::Bytes h = wire::encode_handshake(64, 30, 3);
    CHECK(h == wire::Bytes{'D', 'W', 'P', '1', 64, 0, 0, 0, 30, 0, 0, 0, 3, 0, 0, 0});
    CHECK(wire::encode_handshake_reply(1) == wire::Bytes{'D', 'W', 'P', '1', 1, 0, 0, 0});
    CHECK(wire::encode_shutdown() == wire::Bytes{0xff, 0xff, 0xff, 0xff, 0, 0, 0, 0});
  }

  TEST_CASE("request and response bytes") {
    ImageSeries s = ImageSeries::zeros(3, 2, 2);
    // Window (1, 0) of size 1 over two frames.
    s.at(1, 0, 0) = 1.0f;
    s.at(1, 0, 1) = -2.0f;
    const wire::Bytes r = wire::encode_request(5, view_patch(s, {1, 0}, 1));
    CHECK(r == wire::Bytes{5, 0, 0, 0, 8, 0, 0, 0, 0, 0, 0x80, 0x3f, 0, 0, 0, 0xc0});
    const std::vector<float> probs = {0.5f, 0.25f, 0.25f};
    CHECK(wire::encode_response(9, probs) ==
          wire::Bytes{9, 0, 0, 0, 12, 0, 0, 0, 0, 0, 0, 0x3f, 0, 0, 0x80, 0x3e, 0, 0, 0x80, 0x3e});
    CHECK(wire::get_u32(r.data() + 4) == 8);
    CHECK(wire::get_f32(r.data() + 12) == -2.0f);
  }

  TEST_CASE("request order is x, then y, then t") {
    const ImageSeries s = ramp_series(4, 4, 2);
    const wire::Bytes r = wire::encode_request(0, view_patch(s, {2, 2}, 2));
    std::vector<float> got;
    for (std::size_t i = 8; i < r.size(); i += 4) got.push_back(wire::get_f32(r.data() + i));
    std::vector<float> expect;
    for (int t = 0; t < 2; ++t)
      for (int y = 2; y < 4; ++y)
        for (int x = 2; x < 4; ++x) expect.push_back(s.at(x, y, t));
    CHECK(got == expect);
  }

  TEST_CASE("recorded transcript matches the golden file") {
    const auto dir = test::scratch_dir("transcript");
    const ImageSeries s = ramp_series(8, 8, 2);
    const PatchGrid g = make_grid(8, 8, 4, 4);
    {
      SegmenterSpec spec = external("uniform " + (dir / "t.bin").string());
      auto seg = make_segmenter(spec, {}, 4, 2);
      segment_grid(*seg, s, g);
      seg->finish();
    }
    std::ifstream f(dir / "t.bin", std::ios::binary);
    const wire::Bytes got((std::istreambuf_iterator<char>(f)), {});

    wire::Bytes expect = wire::encode_handshake(4, 2, 3);
    for (std::size_t i = 0; i < g.origins.size(); ++i) {
      const auto r = wire::encode_request(static_cast<std::uint32_t>(i), view_patch(s, g.origins[i], 4));
      expect.insert(expect.end(), r.begin(), r.end());
    }
    const auto bye = wire::encode_shutdown();
    expect.insert(expect.end(), bye.begin(), bye.end());
    CHECK(got == expect);

    std::ifstream golden(std::string(DAUGS_GOLDEN_DIR) + "/wire_uniform_8x8x2.bin", std::ios::binary);
    REQUIRE(golden.good());
    const wire::Bytes gold((std::istreambuf_iterator<char>(golden)), {});
    CHECK(got == gold);
  }
}
