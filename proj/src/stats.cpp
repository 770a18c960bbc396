#include "daugs/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>

#include "daugs/core.hpp"

namespace daugs {
namespace {

void check_pairs(std::span<const double> a, std::span<const double> b, std::size_t min_n) {
  if (a.size() != b.size()) throw DataError("paired samples differ in length");
  if (a.size() < min_n) throw DataError("too few paired samples");
  for (std::size_t i = 0; i < a.size(); ++i)
    if (!std::isfinite(a[i]) || !std::isfinite(b[i])) throw DataError("non-finite sample");
}

double log_choose(int n, int k) {
  return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

}  // namespace

MeanSd mean_sd(std::span<const double> v) {
  MeanSd r;
  r.n = v.size();
  if (v.empty()) return r;
  r.mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  if (v.size() > 1) {
    double ss = 0.0;
    for (double x : v) ss += (x - r.mean) * (x - r.mean);
    r.sd = std::sqrt(ss / static_cast<double>(v.size() - 1));
  }
  return r;
}

std::vector<double> average_ranks(std::span<const double> v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return v[i] < v[j]; });
  std::vector<double> ranks(v.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    const double r = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
    i = j + 1;
  }
  return ranks;
}

double pearson_r(std::span<const double> x, std::span<const double> y) {
  const double mx = mean_sd(x).mean, my = mean_sd(y).mean;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

double spearman_rho(std::span<const double> x, std::span<const double> y) {
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  return pearson_r(rx, ry);
}

Agreement agreement_stats(std::span<const double> x, std::span<const double> y) {
  check_pairs(x, y, 3);
  Agreement a;
  a.n = x.size();
  const double mx = mean_sd(x).mean, my = mean_sd(y).mean;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  if (sxx == 0.0) throw DataError("agreement_stats: zero variance in x");
  a.slope = sxy / sxx;
  a.intercept = my - a.slope * mx;
  const double r = pearson_r(x, y);
  a.pearson_r2 = r * r;
  std::vector<double> diff(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) diff[i] = y[i] - x[i];
  const MeanSd d = mean_sd(diff);
  a.bias = d.mean;
  a.loa_low = d.mean - 1.96 * d.sd;
  a.loa_high = d.mean + 1.96 * d.sd;
  a.spearman_rho = spearman_rho(x, y);
  return a;
}

double paired_t_p(std::span<const double> a, std::span<const double> b) {
  check_pairs(a, b, 2);
  std::vector<double> d(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
  const MeanSd s = mean_sd(d);
  if (s.sd == 0.0) return s.mean == 0.0 ? 1.0 : 0.0;
  const double t = s.mean / (s.sd / std::sqrt(static_cast<double>(s.n)));
  boost::math::students_t dist(static_cast<double>(s.n - 1));
  return std::min(1.0, 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t))));
}

double wilcoxon_signed_rank_p(std::span<const double> a, std::span<const double> b) {
  check_pairs(a, b, 1);
  std::vector<double> d;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i] != b[i]) d.push_back(a[i] - b[i]);
  const std::size_t n = d.size();
  if (n == 0) return 1.0;

  std::vector<double> mag(n);
  for (std::size_t i = 0; i < n; ++i) mag[i] = std::abs(d[i]);
  const auto ranks = average_ranks(mag);
  double w_plus = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    if (d[i] > 0) w_plus += ranks[i];

  std::vector<double> sorted = mag;
  std::sort(sorted.begin(), sorted.end());
  double tie_term = 0.0;
  bool ties = false;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && sorted[j + 1] == sorted[i]) ++j;
    const double t = static_cast<double>(j - i + 1);
    if (t > 1) ties = true;
    tie_term += t * t * t - t;
    i = j + 1;
  }

  const double total = static_cast<double>(n) * (n + 1) / 2.0;
  if (n <= 25 && !ties) {
    // counts[s] = number of sign assignments with positive-rank sum s.
    const auto max_sum = static_cast<std::size_t>(total);
    std::vector<double> counts(max_sum + 1, 0.0);
    counts[0] = 1.0;
    for (std::size_t r = 1; r <= n; ++r)
      for (std::size_t s = max_sum; s >= r; --s) counts[s] += counts[s - r];
    const double w = std::min(w_plus, total - w_plus);
    double tail = 0.0;
    for (std::size_t s = 0; s <= static_cast<std::size_t>(w); ++s) tail += counts[s];
    return std::min(1.0, 2.0 * tail / std::ldexp(1.0, static_cast<int>(n)));
  }
  const double mean = total / 2.0;
  const double var = static_cast<double>(n) * (n + 1) * (2 * n + 1) / 24.0 - tie_term / 48.0;
  if (var <= 0.0) return 1.0;
  const double diff = w_plus - mean;
  const double cc = diff > 0 ? 0.5 : (diff < 0 ? -0.5 : 0.0);
  const double z = (diff - cc) / std::sqrt(var);
  boost::math::normal norm;
  return std::min(1.0, 2.0 * boost::math::cdf(boost::math::complement(norm, std::abs(z))));
}

PairedTests paired_tests(std::span<const double> a, std::span<const double> b) {
  return {paired_t_p(a, b), wilcoxon_signed_rank_p(a, b)};
}

double fisher_exact(int k1, int n1, int k2, int n2) {
  if (k1 < 0 || k2 < 0 || n1 < k1 || n2 < k2 || n1 + n2 == 0)
    throw DataError("fisher_exact: invalid table");
  const int N = n1 + n2, K = k1 + k2;
  const int lo = std::max(0, K - n2), hi = std::min(K, n1);
  const double log_denom = log_choose(N, n1);
  auto prob = [&](int x) { return std::exp(log_choose(K, x) + log_choose(N - K, n1 - x) - log_denom); };
  const double p_obs = prob(k1);
  double p = 0.0;
  for (int x = lo; x <= hi; ++x) {
    const double px = prob(x);
    if (px <= p_obs * (1.0 + 1e-7)) p += px;
  }
  return std::min(1.0, p);
}

}  // namespace daugs
