#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

namespace cr {

enum class Alternative { kTwoSided, kGreater, kLess };

namespace detail {

inline void check_sample(const std::vector<double>& v, const char* which) {
  if (v.empty()) throw std::invalid_argument(std::string("mann_whitney_u: sample ") + which + " is empty");
  for (const double x : v)
    if (std::isnan(x))
      throw std::invalid_argument(std::string("mann_whitney_u: sample ") + which + " contains NaN");
}

/// Null distribution of the Mann-Whitney U statistic for samples of sizes n
/// and m with no ties: counts[u] arrangements give U = u, summing to
/// C(n + m, n). Recurrence on whether the largest value belongs to the first
/// sample.
inline std::vector<double> exact_u_counts(std::size_t n, std::size_t m) {
  const std::size_t umax = n * m;
  std::vector<std::vector<std::vector<double>>> f(
      n + 1, std::vector<std::vector<double>>(m + 1, std::vector<double>(umax + 1, 0.0)));
  for (std::size_t j = 0; j <= m; ++j) f[0][j][0] = 1.0;
  for (std::size_t i = 1; i <= n; ++i) {
    f[i][0][0] = 1.0;
    for (std::size_t j = 1; j <= m; ++j) {
      for (std::size_t u = 0; u <= i * j; ++u) {
        double v = f[i][j - 1][u];
        if (u >= j) v += f[i - 1][j][u - j];
        f[i][j][u] = v;
      }
    }
  }
  return f[n][m];
}

inline double gamma_p_series(double a, double x) {
  double ap = a;
  double sum = 1.0 / a;
  double del = sum;
  for (int n = 0; n < 500; ++n) {
    ap += 1.0;
    del *= x / ap;
    sum += del;
    if (std::abs(del) < std::abs(sum) * 1e-15) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

inline double gamma_q_continued_fraction(double a, double x) {
  constexpr double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i <= 500; ++i) {
    const double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < 1e-15) break;
  }
  return h * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

}  // namespace detail

/// Upper regularized incomplete gamma Q(a, x).
inline double regularized_gamma_upper(double a, double x) {
  if (!(a > 0.0)) throw std::invalid_argument("regularized_gamma_upper: a must be positive");
  if (!(x >= 0.0)) throw std::invalid_argument("regularized_gamma_upper: x must be nonnegative");
  if (x == 0.0) return 1.0;
  return x < a + 1.0 ? 1.0 - detail::gamma_p_series(a, x) : detail::gamma_q_continued_fraction(a, x);
}

/// Survival function of the chi-square distribution with dof degrees of
/// freedom: P(X >= x).
inline double chi_square_sf(double x, double dof) {
  if (!(dof > 0.0)) throw std::invalid_argument("chi_square_sf: dof must be positive");
  if (!(x >= 0.0)) throw std::invalid_argument("chi_square_sf: x must be nonnegative");
  return regularized_gamma_upper(dof / 2.0, x / 2.0);
}

/// Standard normal survival function P(Z >= z).
inline double normal_sf(double z) { return 0.5 * std::erfc(z / std::sqrt(2.0)); }

/// Pearson goodness-of-fit p-value of observed counts against expected cell
/// probabilities, with k - 1 degrees of freedom.
inline double chi_square_gof_pvalue(const std::vector<std::uint64_t>& observed,
                                    const std::vector<double>& expected_probabilities) {
  if (observed.size() != expected_probabilities.size())
    throw std::invalid_argument("chi_square_gof_pvalue: size mismatch");
  if (observed.size() < 2) throw std::invalid_argument("chi_square_gof_pvalue: need at least 2 cells");
  double total = 0.0;
  for (const auto o : observed) total += static_cast<double>(o);
  if (!(total > 0.0)) throw std::invalid_argument("chi_square_gof_pvalue: no observations");
  double psum = 0.0;
  for (const double p : expected_probabilities) {
    if (!(p > 0.0)) throw std::invalid_argument("chi_square_gof_pvalue: probabilities must be positive");
    psum += p;
  }
  if (std::abs(psum - 1.0) > 1e-9)
    throw std::invalid_argument("chi_square_gof_pvalue: probabilities must sum to 1");
  double stat = 0.0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    const double expected = total * expected_probabilities[i];
    const double diff = static_cast<double>(observed[i]) - expected;
    stat += diff * diff / expected;
  }
  return chi_square_sf(stat, static_cast<double>(observed.size() - 1));
}

/// Order statistic at fraction p with linear interpolation between ranks.
inline double quantile(std::vector<double> v, double p) {
  if (v.empty()) throw std::invalid_argument("quantile: empty sample");
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("quantile: p must be in [0, 1]");
  std::sort(v.begin(), v.end());
  const double h = p * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(h);
  const double frac = h - static_cast<double>(lo);
  if (frac == 0.0) return v[lo];
  return v[lo] + frac * (v[lo + 1] - v[lo]);
}

inline double median(std::vector<double> v) { return quantile(std::move(v), 0.5); }

struct Quartiles {
  double q1 = 0.0;
  double median = 0.0;
  double q3 = 0.0;
};

inline Quartiles quartiles(const std::vector<double>& v) {
  return Quartiles{quantile(v, 0.25), quantile(v, 0.5), quantile(v, 0.75)};
}

struct MannWhitneyResult {
  double u_statistic = 0.0;  // U of the first sample: pairs where a exceeds b
  double p_value = 1.0;
  bool exact = false;
};

/// Mann-Whitney U rank-sum test. Small tie-free samples (both sides at most
/// 12) get the exact null distribution; otherwise the normal approximation
/// with tie correction and continuity correction. Infinite values are legal
/// and rank past every finite value, which is how censored runs compare.
inline MannWhitneyResult mann_whitney_u(const std::vector<double>& a, const std::vector<double>& b,
                                        Alternative alternative = Alternative::kTwoSided) {
  detail::check_sample(a, "a");
  detail::check_sample(b, "b");
  const std::size_t n1 = a.size();
  const std::size_t n2 = b.size();
  const std::size_t total = n1 + n2;

  struct Tagged {
    double value;
    bool from_a;
  };
  std::vector<Tagged> all;
  all.reserve(total);
  for (const double x : a) all.push_back({x, true});
  for (const double x : b) all.push_back({x, false});
  std::sort(all.begin(), all.end(), [](const Tagged& l, const Tagged& r) { return l.value < r.value; });

  // Average ranks over tie runs; collect tie sizes for the variance
  // correction.
  double rank_sum_a = 0.0;
  bool any_ties = false;
  double tie_term = 0.0;
  std::size_t i = 0;
  while (i < total) {
    std::size_t j = i;
    while (j < total && all[j].value == all[i].value) ++j;
    const auto run = static_cast<double>(j - i);
    if (run > 1.0) {
      any_ties = true;
      tie_term += run * run * run - run;
    }
    const double avg_rank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (std::size_t k = i; k < j; ++k)
      if (all[k].from_a) rank_sum_a += avg_rank;
    i = j;
  }

  const double u1 = rank_sum_a - static_cast<double>(n1) * (static_cast<double>(n1) + 1.0) / 2.0;
  MannWhitneyResult result;
  result.u_statistic = u1;

  constexpr std::size_t kMaxExact = 12;
  if (!any_ties && n1 <= kMaxExact && n2 <= kMaxExact) {
    const auto counts = detail::exact_u_counts(n1, n2);
    double arrangements = 0.0;
    for (const double c : counts) arrangements += c;
    const auto u_int = static_cast<std::size_t>(std::llround(u1));
    double below_eq = 0.0;
    for (std::size_t u = 0; u <= u_int; ++u) below_eq += counts[u];
    double above_eq = 0.0;
    for (std::size_t u = u_int; u < counts.size(); ++u) above_eq += counts[u];
    const double p_le = below_eq / arrangements;
    const double p_ge = above_eq / arrangements;
    switch (alternative) {
      case Alternative::kTwoSided: result.p_value = std::min(1.0, 2.0 * std::min(p_le, p_ge)); break;
      case Alternative::kGreater: result.p_value = p_ge; break;
      case Alternative::kLess: result.p_value = p_le; break;
    }
    result.exact = true;
    return result;
  }

  const double n1d = static_cast<double>(n1);
  const double n2d = static_cast<double>(n2);
  const double nd = static_cast<double>(total);
  const double mean = n1d * n2d / 2.0;
  const double variance =
      n1d * n2d / 12.0 * ((nd + 1.0) - tie_term / (nd * (nd - 1.0)));
  if (!(variance > 0.0)) {
    // Every value tied: no evidence in either direction.
    result.p_value = 1.0;
    return result;
  }
  const double sd = std::sqrt(variance);
  const auto tail = [&](double numerator) { return normal_sf(numerator / sd); };
  switch (alternative) {
    case Alternative::kTwoSided: {
      const double shifted = std::max(0.0, std::abs(u1 - mean) - 0.5);
      result.p_value = std::min(1.0, 2.0 * tail(shifted));
      break;
    }
    case Alternative::kGreater: result.p_value = tail(u1 - mean - 0.5); break;
    case Alternative::kLess: result.p_value = tail(mean - u1 - 0.5); break;
  }
  return result;
}

}  // namespace cr
