#pragma once

/**
 * Statistical tails and distances used by the detectors and the harness.
 *
 * All tail routines work in log space where the mass is small, so p-values
 * stay meaningful down to the underflow limit of double. No approximations
 * beyond standard series / continued-fraction evaluation: detectors are only
 * as trustworthy as these tails.
 */

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

namespace wm::stats {

// log Pr[Bin(n, p) = k]
inline double log_binomial_pmf(std::uint64_t k, std::uint64_t n, double p) {
  if (k > n) return -std::numeric_limits<double>::infinity();
  if (p <= 0.0) return k == 0 ? 0.0 : -std::numeric_limits<double>::infinity();
  if (p >= 1.0) return k == n ? 0.0 : -std::numeric_limits<double>::infinity();
  double dk = double(k), dn = double(n);
  return std::lgamma(dn + 1.0) - std::lgamma(dk + 1.0) -
         std::lgamma(dn - dk + 1.0) + dk * std::log(p) +
         (dn - dk) * std::log1p(-p);
}

// Pr[Bin(n, p) >= k], exact summation.
// Upper-tail sums run in log-scaled linear space starting at the largest
// term; when k sits below the mode the complement of the lower tail is
// used instead, so no branch ever sums terms that dwarf the result.
inline double binomial_upper_tail(std::uint64_t k, std::uint64_t n, double p) {
  if (p < 0.0 || p > 1.0) {
    throw std::invalid_argument("binomial_upper_tail: p outside [0, 1]");
  }
  if (k == 0) return 1.0;
  if (k > n) return 0.0;
  if (p <= 0.0) return 0.0;
  if (p >= 1.0) return 1.0;

  auto tail_from = [&](std::uint64_t lo, std::uint64_t hi, bool upward) {
    // Sum of pmf over [lo, hi], scaled by the first term; requires terms
    // non-increasing in the iteration direction.
    std::uint64_t start = upward ? lo : hi;
    double log_first = log_binomial_pmf(start, n, p);
    if (log_first == -std::numeric_limits<double>::infinity()) return 0.0;
    double sum = 1.0, term = 1.0;
    if (upward) {
      for (std::uint64_t i = lo; i < hi; ++i) {
        term *= (double(n - i) / double(i + 1)) * (p / (1.0 - p));
        sum += term;
        if (term < sum * 1e-18) break;
      }
    } else {
      for (std::uint64_t i = hi; i > lo; --i) {
        term *= (double(i) / double(n - i + 1)) * ((1.0 - p) / p);
        sum += term;
        if (term < sum * 1e-18) break;
      }
    }
    return std::exp(log_first + std::log(sum));
  };

  double mode = (double(n) + 1.0) * p;
  if (double(k) >= mode) {
    return tail_from(k, n, /*upward=*/true);
  }
  double lower = tail_from(0, k - 1, /*upward=*/false);
  double upper = 1.0 - lower;
  return upper < 0.0 ? 0.0 : upper;
}

// ============================================================================
// Regularized incomplete gamma
// ============================================================================

namespace detail {

// Lower series: P(a, x) for x < a + 1.
inline double gamma_p_series(double a, double x) {
  double ap = a;
  double sum = 1.0 / a;
  double del = sum;
  for (int i = 0; i < 10000; ++i) {
    ap += 1.0;
    del *= x / ap;
    sum += del;
    if (std::fabs(del) < std::fabs(sum) * 1e-16) break;
  }
  double lg = -x + a * std::log(x) - std::lgamma(a);
  return sum * std::exp(lg);
}

// Upper continued fraction (modified Lentz): Q(a, x) for x >= a + 1.
inline double gamma_q_cf(double a, double x) {
  const double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < 10000; ++i) {
    double an = -double(i) * (double(i) - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < 1e-16) break;
  }
  double lg = -x + a * std::log(x) - std::lgamma(a);
  return std::exp(lg) * h;
}

}  // namespace detail

// Regularized upper incomplete gamma Q(a, x) = Gamma(a, x) / Gamma(a).
// Q(a, 0) = 1; the upper tail of a Gamma(a, 1) variable.
inline double gamma_q(double a, double x) {
  if (!(a > 0.0)) throw std::invalid_argument("gamma_q: a must be > 0");
  if (x < 0.0) throw std::invalid_argument("gamma_q: x must be >= 0");
  if (x == 0.0) return 1.0;
  if (x < a + 1.0) {
    double p = detail::gamma_p_series(a, x);
    double q = 1.0 - p;
    return q < 0.0 ? 0.0 : q;
  }
  return detail::gamma_q_cf(a, x);
}

inline double gamma_p(double a, double x) { return 1.0 - gamma_q(a, x); }

// Upper tail of chi-square with dof degrees of freedom.
inline double chi_square_tail(double stat, double dof) {
  if (stat <= 0.0) return 1.0;
  return gamma_q(dof / 2.0, stat / 2.0);
}

// ============================================================================
// Empirical distances
// ============================================================================

// Kolmogorov-Smirnov distance between a sample and the uniform [0, 1] CDF.
// Input need not be sorted; values are clamped to [0, 1].
inline double ks_uniform_distance(std::vector<double> sample) {
  if (sample.empty()) {
    throw std::invalid_argument("ks_uniform_distance: empty sample");
  }
  std::sort(sample.begin(), sample.end());
  double n = double(sample.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    double x = std::min(1.0, std::max(0.0, sample[i]));
    d = std::max(d, std::fabs(x - double(i) / n));
    d = std::max(d, std::fabs(x - double(i + 1) / n));
  }
  return d;
}

// Pearson chi-square statistic for observed counts against expected counts.
// pre: same length; every expected count > 0
inline double chi_square_stat(const std::vector<double>& observed,
                              const std::vector<double>& expected) {
  if (observed.size() != expected.size()) {
    throw std::invalid_argument("chi_square_stat: length mismatch");
  }
  double s = 0.0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    if (!(expected[i] > 0.0)) {
      throw std::invalid_argument("chi_square_stat: expected count <= 0");
    }
    double d = observed[i] - expected[i];
    s += d * d / expected[i];
  }
  return s;
}

inline double mean(const std::vector<double>& v) {
  if (v.empty()) throw std::invalid_argument("mean: empty sample");
  double s = 0.0;
  for (double x : v) s += x;
  return s / double(v.size());
}

// Median via partial sort; even-length samples average the middle pair.
inline double median(std::vector<double> v) {
  if (v.empty()) throw std::invalid_argument("median: empty sample");
  std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + mid, v.end());
  double hi = v[mid];
  if (v.size() % 2 == 1) return hi;
  std::nth_element(v.begin(), v.begin() + mid - 1, v.begin() + mid);
  return 0.5 * (v[mid - 1] + hi);
}

}  // namespace wm::stats
