#include <doctest.h>

#include <cmath>
#include <vector>

#include "daugs/rng.hpp"
#include "daugs/stats.hpp"

using namespace daugs;

// Reference values computed with scipy.stats (wilcoxon, ttest_rel,
// fisher_exact, spearmanr, pearsonr, rankdata).
TEST_SUITE("stats") {
  TEST_CASE("mean and sample sd") {
    const std::vector<double> v = {2, 4, 4, 4, 5, 5, 7, 9};
    const MeanSd m = mean_sd(v);
    CHECK(m.mean == 5.0);
    CHECK(m.sd == doctest::Approx(std::sqrt(32.0 / 7.0)).epsilon(1e-14));
    CHECK(m.n == 8);
    CHECK(mean_sd(std::vector<double>{3.0}).sd == 0.0);
  }

  TEST_CASE("average ranks") {
    const std::vector<double> v = {3, 1, 4, 1, 5, 9, 2, 6, 5, 3, 5};
    const std::vector<double> expect = {4.5, 1.5, 6, 1.5, 8, 11, 3, 10, 8, 4.5, 8};
    CHECK(average_ranks(v) == expect);
  }

  TEST_CASE("correlations with ties") {
    const std::vector<double> u = {1, 2, 2, 3, 5, 5, 5, 8}, v = {2, 1, 4, 3, 7, 6, 6, 9};
    CHECK(spearman_rho(u, v) == doctest::Approx(0.9015094183400432).epsilon(1e-12));
    CHECK(pearson_r(u, v) == doctest::Approx(0.9350998429619097).epsilon(1e-12));
  }

  TEST_CASE("wilcoxon exact and paired t") {
    const std::vector<double> a = {12, 15, 9, 20, 7, 14, 18, 11, 16, 10};
    const std::vector<double> b = {10, 18, 4, 12, 8, 3, 11, 15, 1, 16};
    CHECK(wilcoxon_signed_rank_p(a, b) == doctest::Approx(0.193359375).epsilon(1e-12));
    CHECK(paired_t_p(a, b) == doctest::Approx(0.15612721725005146).epsilon(1e-9));
    const PairedTests t = paired_tests(a, b);
    CHECK(t.wilcoxon_p_value == doctest::Approx(0.193359375).epsilon(1e-12));
  }

  TEST_CASE("wilcoxon normal approximation with zeros and ties") {
    const std::vector<double> x = {3, 5, 2, 8, 6, 4, 7, 5, 9, 3, 6, 4, 8, 2, 5, 7, 6, 3, 9, 4, 5, 6, 7, 8, 3, 4, 5, 6, 2, 7};
    const std::vector<double> y = {2, 5, 4, 6, 6, 1, 5, 3, 6, 1, 8, 2, 5, 2, 4, 3, 6, 5, 4, 1, 5, 3, 2, 6, 4, 3, 2, 4, 2, 3};
    CHECK(wilcoxon_signed_rank_p(x, y) == doctest::Approx(0.0006194766934500641).epsilon(1e-9));
  }

  TEST_CASE("identical samples") {
    const std::vector<double> a = {0.9, 0.8, 0.7};
    CHECK(wilcoxon_signed_rank_p(a, a) == 1.0);
    CHECK(paired_t_p(a, a) == 1.0);
  }

  TEST_CASE("fisher exact") {
    CHECK(fisher_exact(3, 70, 12, 70) == doctest::Approx(0.026014720084068375).epsilon(1e-10));
    CHECK(fisher_exact(5, 10, 5, 10) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(fisher_exact(1, 9, 11, 14) == doctest::Approx(0.0027594561852200836).epsilon(1e-10));
    CHECK(fisher_exact(0, 20, 7, 20) == doctest::Approx(0.008316008316008316).epsilon(1e-10));
    CHECK(fisher_exact(38, 40, 7, 40) == doctest::Approx(5.076342894676736e-13).epsilon(1e-8));
    CHECK(fisher_exact(0, 5, 0, 5) == doctest::Approx(1.0));
  }

  TEST_CASE("agreement against direct formulas") {
    Rng rng(21);
    std::vector<double> x, y;
    for (int i = 0; i < 100; ++i) {
      x.push_back(rng.uniform(0.5, 4.0));
      y.push_back(0.9 * x.back() + 0.2 + rng.normal(0.0, 0.3));
    }
    const Agreement a = agreement_stats(x, y);
    double mx = 0, my = 0;
    for (int i = 0; i < 100; ++i) mx += x[i] / 100, my += y[i] / 100;
    double sxx = 0, syy = 0, sxy = 0, md = 0;
    for (int i = 0; i < 100; ++i) {
      sxx += (x[i] - mx) * (x[i] - mx);
      syy += (y[i] - my) * (y[i] - my);
      sxy += (x[i] - mx) * (y[i] - my);
      md += (y[i] - x[i]) / 100;
    }
    double sdd = 0;
    for (int i = 0; i < 100; ++i) sdd += (y[i] - x[i] - md) * (y[i] - x[i] - md);
    sdd = std::sqrt(sdd / 99);
    CHECK(a.slope == doctest::Approx(sxy / sxx).epsilon(1e-12));
    CHECK(a.intercept == doctest::Approx(my - sxy / sxx * mx).epsilon(1e-12));
    CHECK(a.pearson_r2 == doctest::Approx(sxy * sxy / (sxx * syy)).epsilon(1e-12));
    CHECK(a.bias == doctest::Approx(md).epsilon(1e-12));
    CHECK(a.loa_low == doctest::Approx(md - 1.96 * sdd).epsilon(1e-12));
    CHECK(a.loa_high == doctest::Approx(md + 1.96 * sdd).epsilon(1e-12));
    CHECK(a.n == 100);
  }

  TEST_CASE("agreement preconditions") {
    const std::vector<double> two = {1, 2};
    CHECK_THROWS(agreement_stats(two, two));
    const std::vector<double> flat = {1, 1, 1, 1};
    const std::vector<double> any = {1, 2, 3, 4};
    CHECK_THROWS(agreement_stats(flat, any));
  }
}
