#pragma once

// Agreement and hypothesis-test statistics for the evaluation harness.

#include <cstddef>
#include <span>
#include <vector>

namespace daugs {

struct MeanSd {
  double mean = 0.0;
  double sd = 0.0;  // sample (n - 1) standard deviation; 0 for n < 2
  std::size_t n = 0;
};

MeanSd mean_sd(std::span<const double> v);

// Ranks 1..n with ties sharing their average rank.
std::vector<double> average_ranks(std::span<const double> v);

double pearson_r(std::span<const double> x, std::span<const double> y);
double spearman_rho(std::span<const double> x, std::span<const double> y);

struct Agreement {
  double pearson_r2 = 0.0;
  double slope = 0.0;
  double intercept = 0.0;
  double bias = 0.0;      // mean(y - x)
  double loa_low = 0.0;   // bias - 1.96 sd(y - x)
  double loa_high = 0.0;  // bias + 1.96 sd(y - x)
  double spearman_rho = 0.0;
  std::size_t n = 0;
};

// OLS of y on x plus Bland-Altman limits. Needs >= 3 finite pairs and
// non-zero variance in x.
Agreement agreement_stats(std::span<const double> x, std::span<const double> y);

// Two-sided paired t-test. Identical samples give p = 1.
double paired_t_p(std::span<const double> a, std::span<const double> b);

// Two-sided Wilcoxon signed-rank test on a - b. Zero differences are
// dropped; with <= 25 non-zero differences and no tied magnitudes the exact
// null distribution is used, otherwise the normal approximation with tie
// correction and continuity correction. No non-zero differences -> p = 1.
double wilcoxon_signed_rank_p(std::span<const double> a, std::span<const double> b);

struct PairedTests {
  double t_p_value = 1.0;
  double wilcoxon_p_value = 1.0;
};

PairedTests paired_tests(std::span<const double> a, std::span<const double> b);

// Two-sided Fisher exact test for the 2x2 table
//   [k1, n1 - k1]
//   [k2, n2 - k2]
// summing hypergeometric probabilities no larger than the observed one
// (relative tolerance 1e-7).
double fisher_exact(int k1, int n1, int k2, int n2);

}  // namespace daugs
