#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <limits>
#include <vector>

#include "curious_replay/stats.hpp"

namespace {

bool approx_rel(double got, double want, double rel) {
  return std::abs(got - want) <= rel * std::max(std::abs(want), 1e-300);
}

constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace

TEST_CASE("mann-whitney exact small samples") {
  const std::vector<double> a{3.1, 4.5, 2.2, 6.7, 5.5, 7.1};
  const std::vector<double> b{1.0, 2.0, 3.0, 4.0, 5.0};

  const auto two = cr::mann_whitney_u(a, b);
  CHECK(two.exact);
  CHECK(two.u_statistic == 24.0);
  CHECK(approx_rel(two.p_value, 0.12554112554112554, 1e-13));

  const auto greater = cr::mann_whitney_u(a, b, cr::Alternative::kGreater);
  CHECK(greater.exact);
  CHECK(approx_rel(greater.p_value, 0.06277056277056277, 1e-13));

  // Swapping the samples mirrors the statistic and keeps the two-sided p.
  const auto swapped = cr::mann_whitney_u(b, a);
  CHECK(swapped.u_statistic == 6.0);
  CHECK(approx_rel(swapped.p_value, two.p_value, 1e-13));
}

TEST_CASE("mann-whitney fully separated samples") {
  const std::vector<double> a{1.0, 2.0, 3.0, 4.0, 5.0};
  const std::vector<double> b{6.0, 7.0, 8.0, 9.0, 10.0};
  const auto r = cr::mann_whitney_u(a, b);
  CHECK(r.exact);
  CHECK(r.u_statistic == 0.0);
  // 2 / C(10, 5) arrangements.
  CHECK(approx_rel(r.p_value, 0.007936507936507936, 1e-13));
  const auto less = cr::mann_whitney_u(a, b, cr::Alternative::kLess);
  CHECK(approx_rel(less.p_value, 0.003968253968253968, 1e-13));
}

TEST_CASE("mann-whitney ties fall back to the corrected normal approximation") {
  const std::vector<double> a{1.0, 2.0, 2.0, 3.0, 5.0, 5.0, 7.0};
  const std::vector<double> b{2.0, 4.0, 5.0, 6.0, 6.0, 8.0};
  const auto two = cr::mann_whitney_u(a, b);
  CHECK_FALSE(two.exact);
  CHECK(two.u_statistic == 12.0);
  CHECK(approx_rel(two.p_value, 0.21885377557711416, 1e-12));
  const auto less = cr::mann_whitney_u(a, b, cr::Alternative::kLess);
  CHECK(approx_rel(less.p_value, 0.10942688778855708, 1e-12));
}

TEST_CASE("mann-whitney large samples use the normal approximation") {
  std::vector<double> a, b;
  for (int i = 1; i <= 15; ++i) {
    a.push_back(static_cast<double>(i));
    b.push_back(static_cast<double>(i + 2) + 0.5);
  }
  const auto r = cr::mann_whitney_u(a, b);
  CHECK_FALSE(r.exact);
  CHECK(r.u_statistic == 78.0);
  CHECK(approx_rel(r.p_value, 0.15846460599820356, 1e-12));
}

TEST_CASE("mann-whitney ranks censored runs as worst") {
  const std::vector<double> a{1.0, 2.0, 3.0, kInf, kInf};
  const std::vector<double> b{4.0, 5.0, 6.0, 7.0, 8.0};
  const auto r = cr::mann_whitney_u(a, b);
  CHECK(r.u_statistic == 10.0);
  CHECK_FALSE(r.exact);  // the two infinities tie with each other
  CHECK(approx_rel(r.p_value, 0.6751736149271245, 1e-12));
}

TEST_CASE("mann-whitney degenerate and invalid input") {
  const std::vector<double> same_a{2.0, 2.0, 2.0};
  const std::vector<double> same_b{2.0, 2.0};
  const auto r = cr::mann_whitney_u(same_a, same_b);
  CHECK(r.p_value == 1.0);

  const std::vector<double> all_inf_a{kInf, kInf};
  const std::vector<double> all_inf_b{kInf, kInf, kInf};
  CHECK(cr::mann_whitney_u(all_inf_a, all_inf_b).p_value == 1.0);

  CHECK_THROWS_AS(cr::mann_whitney_u({}, same_b), std::invalid_argument);
  CHECK_THROWS_AS(cr::mann_whitney_u(same_a, {}), std::invalid_argument);
  const std::vector<double> with_nan{1.0, std::numeric_limits<double>::quiet_NaN()};
  CHECK_THROWS_AS(cr::mann_whitney_u(with_nan, same_b), std::invalid_argument);
}

TEST_CASE("regularized upper incomplete gamma") {
  CHECK(cr::regularized_gamma_upper(2.5, 0.0) == 1.0);
  CHECK(approx_rel(cr::regularized_gamma_upper(2.5, 3.7), 0.1925504330793957, 1e-10));
  CHECK_THROWS_AS(cr::regularized_gamma_upper(0.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(cr::regularized_gamma_upper(1.0, -1.0), std::invalid_argument);
}

TEST_CASE("chi-square survival function") {
  CHECK(cr::chi_square_sf(0.0, 3.0) == 1.0);
  CHECK(approx_rel(cr::chi_square_sf(11.345, 3.0), 0.009999384083287103, 1e-10));
  CHECK(approx_rel(cr::chi_square_sf(2.0, 3.0), 0.5724067044708798, 1e-10));
  CHECK(approx_rel(cr::chi_square_sf(30.0, 5.0), 1.4748581038443073e-05, 1e-10));
  CHECK_THROWS_AS(cr::chi_square_sf(1.0, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(cr::chi_square_sf(-1.0, 3.0), std::invalid_argument);
}

TEST_CASE("normal survival function") {
  CHECK(cr::normal_sf(0.0) == 0.5);
  CHECK(approx_rel(cr::normal_sf(1.96), 0.024997895148220435, 1e-12));
  CHECK(approx_rel(cr::normal_sf(-0.5), 0.6914624612740131, 1e-12));
}

TEST_CASE("chi-square goodness of fit") {
  const std::vector<double> uniform4(4, 0.25);
  CHECK(cr::chi_square_gof_pvalue({25, 25, 25, 25}, uniform4) == 1.0);
  // Statistic 2 on 3 degrees of freedom.
  CHECK(approx_rel(cr::chi_square_gof_pvalue({30, 20, 25, 25}, uniform4),
                   0.5724067044708798, 1e-10));

  CHECK_THROWS_AS(cr::chi_square_gof_pvalue({1, 2, 3}, uniform4), std::invalid_argument);
  CHECK_THROWS_AS(cr::chi_square_gof_pvalue({1}, {1.0}), std::invalid_argument);
  CHECK_THROWS_AS(cr::chi_square_gof_pvalue({0, 0}, {0.5, 0.5}), std::invalid_argument);
  CHECK_THROWS_AS(cr::chi_square_gof_pvalue({1, 2}, {0.5, 0.0}), std::invalid_argument);
  CHECK_THROWS_AS(cr::chi_square_gof_pvalue({1, 2}, {0.5, 0.4}), std::invalid_argument);
}

TEST_CASE("quantiles interpolate between order statistics") {
  const std::vector<double> four{1.0, 2.0, 3.0, 4.0};
  CHECK(cr::quantile(four, 0.25) == 1.75);
  CHECK(cr::quantile(four, 0.5) == 2.5);
  CHECK(cr::quantile(four, 0.0) == 1.0);
  CHECK(cr::quantile(four, 1.0) == 4.0);

  const std::vector<double> eight{3.0, 1.0, 4.0, 1.0, 5.0, 9.0, 2.0, 6.0};
  CHECK(cr::quantile(eight, 0.75) == 5.25);
  CHECK(cr::median(eight) == 3.5);
  CHECK(cr::median(std::vector<double>{7.0}) == 7.0);

  const cr::Quartiles q = cr::quartiles(four);
  CHECK(q.q1 == 1.75);
  CHECK(q.median == 2.5);
  CHECK(q.q3 == 3.25);

  CHECK_THROWS_AS(cr::quantile({}, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(cr::quantile(four, 1.5), std::invalid_argument);
}
