#include <wm/stats.hpp>

#include "oracles.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <cmath>

using namespace wm;

TEST_CASE("binomial upper tail matches exact rational oracle", "[stats]") {
  oracle::cpp_rational half(1, 2);
  struct Case {
    std::uint64_t k, n;
    oracle::cpp_rational p;
  };
  std::vector<Case> cases = {
      {0, 10, half},          {5, 10, half},
      {10, 10, half},         {11, 10, half},
      {3, 7, {1, 3}},         {40, 64, half},
      {60, 64, {9, 10}},      {1, 64, {1, 100}},
      {32, 64, {499, 1000}},  {17, 23, {7, 16}},
  };
  for (const auto& c : cases) {
    double expect = oracle::to_double(
        oracle::binomial_upper_tail_exact(c.k, c.n, c.p));
    double got = stats::binomial_upper_tail(
        c.k, c.n, oracle::to_double(c.p));
    INFO("k=" << c.k << " n=" << c.n);
    REQUIRE(std::fabs(got - expect) <= 1e-12 * std::max(1.0, expect));
    REQUIRE(got >= 0.0);
    REQUIRE(got <= 1.0);
  }
}

TEST_CASE("binomial tail reference point: 150 of 200 fair draws", "[stats]") {
  double expect = oracle::to_double(oracle::binomial_upper_tail_exact(
      150, 200, oracle::cpp_rational(1, 2)));
  double got = stats::binomial_upper_tail(150, 200, 0.5);
  REQUIRE(std::fabs(got - expect) <= 1e-9 * expect);
  // Frozen from exact rational summation (cross-checked against an
  // independent big-fraction computation).
  REQUIRE(expect == Catch::Approx(4.1965104378e-13).epsilon(1e-9));
}

TEST_CASE("binomial tail at the mode is near one half", "[stats]") {
  double p = stats::binomial_upper_tail(100, 200, 0.5);
  double pmf = std::exp(stats::log_binomial_pmf(100, 200, 0.5));
  REQUIRE(p >= 0.5);
  REQUIRE(p <= 0.5 + pmf);
}

TEST_CASE("binomial tail edge cases", "[stats]") {
  REQUIRE(stats::binomial_upper_tail(0, 10, 0.3) == 1.0);
  REQUIRE(stats::binomial_upper_tail(11, 10, 0.3) == 0.0);
  REQUIRE(stats::binomial_upper_tail(5, 10, 0.0) == 0.0);
  REQUIRE(stats::binomial_upper_tail(5, 10, 1.0) == 1.0);
  REQUIRE_THROWS_AS(stats::binomial_upper_tail(5, 10, 1.5),
                    std::invalid_argument);
}

TEST_CASE("binomial tail is monotone in the threshold", "[stats]") {
  double prev = 1.0;
  for (std::uint64_t k = 0; k <= 64; ++k) {
    double p = stats::binomial_upper_tail(k, 64, 0.37);
    REQUIRE(p <= prev + 1e-15);
    prev = p;
  }
}

TEST_CASE("gamma_q closed forms and edges", "[stats]") {
  // Q(1, x) = exp(-x) exactly.
  for (double x : {0.1, 0.5, 1.0, 2.0, 10.0, 50.0}) {
    REQUIRE(stats::gamma_q(1.0, x) ==
            Catch::Approx(std::exp(-x)).epsilon(1e-12));
  }
  REQUIRE(stats::gamma_q(3.5, 0.0) == 1.0);
  REQUIRE_THROWS_AS(stats::gamma_q(0.0, 1.0), std::invalid_argument);
  REQUIRE_THROWS_AS(stats::gamma_q(2.0, -1.0), std::invalid_argument);
  // Q(2, x) = (1 + x) exp(-x).
  for (double x : {0.3, 1.7, 4.0, 9.0}) {
    REQUIRE(stats::gamma_q(2.0, x) ==
            Catch::Approx((1.0 + x) * std::exp(-x)).epsilon(1e-12));
  }
}

TEST_CASE("gamma_q agrees with Monte Carlo at moderate shapes", "[stats]") {
  struct Case {
    std::uint64_t a;
    double x;
  };
  for (const auto& c : std::vector<Case>{{2, 3.0}, {5, 5.0}, {20, 25.0},
                                         {50, 40.0}, {100, 110.0}}) {
    auto mc = oracle::mc_gamma_upper_tail(c.a, c.x, 100000, 7001 + c.a);
    double got = stats::gamma_q(double(c.a), c.x);
    INFO("a=" << c.a << " x=" << c.x << " mc=" << mc.estimate);
    REQUIRE(std::fabs(got - mc.estimate) <= 3.0 * mc.std_error);
  }
}

TEST_CASE("gamma_q is monotone and bounded", "[stats]") {
  double prev = 1.0;
  for (double x = 0.0; x <= 40.0; x += 0.5) {
    double q = stats::gamma_q(12.0, x);
    REQUIRE(q <= prev + 1e-15);
    REQUIRE(q >= 0.0);
    REQUIRE(q <= 1.0);
    prev = q;
  }
}

TEST_CASE("ks distance of a perfect uniform grid is small", "[stats]") {
  std::vector<double> grid;
  for (int i = 0; i < 1000; ++i) grid.push_back((i + 0.5) / 1000.0);
  REQUIRE(stats::ks_uniform_distance(grid) <= 0.0006);

  std::vector<double> clumped(1000, 0.5);
  REQUIRE(stats::ks_uniform_distance(clumped) >= 0.49);
  REQUIRE_THROWS_AS(stats::ks_uniform_distance({}), std::invalid_argument);
}

TEST_CASE("chi-square statistic and tail", "[stats]") {
  // Observed == expected gives statistic 0 and tail 1.
  REQUIRE(stats::chi_square_stat({5, 5, 5}, {5, 5, 5}) == 0.0);
  REQUIRE(stats::chi_square_tail(0.0, 3.0) == 1.0);
  // dof=2 tail is exp(-x/2).
  REQUIRE(stats::chi_square_tail(6.0, 2.0) ==
          Catch::Approx(std::exp(-3.0)).epsilon(1e-12));
  REQUIRE_THROWS_AS(stats::chi_square_stat({1.0}, {0.0}),
                    std::invalid_argument);
  REQUIRE_THROWS_AS(stats::chi_square_stat({1.0}, {1.0, 2.0}),
                    std::invalid_argument);
}

TEST_CASE("mean and median helpers", "[stats]") {
  REQUIRE(stats::mean({1.0, 2.0, 3.0}) == Catch::Approx(2.0));
  REQUIRE(stats::median({5.0, 1.0, 3.0}) == 3.0);
  REQUIRE(stats::median({4.0, 1.0, 3.0, 2.0}) == Catch::Approx(2.5));
  REQUIRE_THROWS_AS(stats::median({}), std::invalid_argument);
}
