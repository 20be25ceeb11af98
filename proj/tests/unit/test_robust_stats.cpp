#include <doctest.h>

#include <cmath>
#include <limits>

#include "heterofisher/rng.hpp"
#include "heterofisher/robust_stats.hpp"
#include "support/oracles.hpp"

using namespace heterofisher;

namespace {

VectorXd vec(std::initializer_list<double> xs) {
  VectorXd v(Eigen::Index(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

}  // namespace

TEST_CASE("interquartile_mean trims a quarter from each tail") {
  CHECK(interquartile_mean(vec({1, 2, 3, 4, 5, 6, 7, 8})) == doctest::Approx(4.5));
  CHECK(interquartile_mean(vec({5})) == doctest::Approx(5.0));
  CHECK(interquartile_mean(vec({1, 2, 3, 100})) == doctest::Approx(2.5));
  // v < 4: plain mean
  CHECK(interquartile_mean(vec({1, 7})) == doctest::Approx(4.0));
}

TEST_CASE("interquartile_mean rejects empty and non-finite input") {
  CHECK_THROWS_AS(interquartile_mean(VectorXd{}), std::invalid_argument);
  CHECK_THROWS_AS(interquartile_mean(vec({1.0, std::nan("")})), std::invalid_argument);
  CHECK_THROWS_AS(interquartile_mean(vec({std::numeric_limits<double>::infinity()})),
                  std::invalid_argument);
}

TEST_CASE("mad_sigma matches hand-enumerated medians") {
  const auto r = mad_sigma(vec({1, 2, 3, 4, 5}));
  CHECK(r.mad == doctest::Approx(1.0));
  CHECK(r.sigma_hat == doctest::Approx(1.0 / 0.6745));
  CHECK(r.sigma_hat == doctest::Approx(1.48258).epsilon(1e-5));
  CHECK(r.iq_mean == doctest::Approx(3.0));

  const auto constant = mad_sigma(vec({2.5, 2.5, 2.5}));
  CHECK(constant.mad == 0.0);
  CHECK(constant.sigma_hat == 0.0);

  // median 0, deviations {0,0,0,10}, median of sorted deviations 0
  const auto outlier = mad_sigma(vec({0, 0, 0, 10}));
  CHECK(outlier.mad == 0.0);
  CHECK(outlier.sigma_hat == 0.0);

  CHECK_THROWS_AS(mad_sigma(VectorXd{}), std::invalid_argument);
}

TEST_CASE("robust estimators are shift-equivariant and permutation-invariant") {
  SplitMix64 gen(42);
  for (int trial = 0; trial < 50; ++trial) {
    const Eigen::Index n = 1 + Eigen::Index(gen.next() % 40);
    VectorXd x(n);
    for (Eigen::Index i = 0; i < n; ++i) x[i] = gen.next_in(-100.0, 100.0);
    const double c = gen.next_in(-50.0, 50.0);

    const double m0 = interquartile_mean(x);
    const auto r0 = mad_sigma(x);
    CHECK(interquartile_mean((x.array() + c).matrix()) == doctest::Approx(m0 + c).epsilon(1e-12));
    CHECK(mad_sigma((x.array() + c).matrix()).mad == doctest::Approx(r0.mad).epsilon(1e-12));

    VectorXd shuffled = x;
    for (Eigen::Index i = n - 1; i > 0; --i)
      std::swap(shuffled[i], shuffled[Eigen::Index(gen.next() % std::uint64_t(i + 1))]);
    CHECK(interquartile_mean(shuffled) == doctest::Approx(m0));
    CHECK(mad_sigma(shuffled).mad == doctest::Approx(r0.mad));
  }
}

TEST_CASE("silverman_bandwidth closed form and floor") {
  CHECK(silverman_bandwidth(1, 1.0) == doctest::Approx(1.05922).epsilon(1e-5));
  CHECK(silverman_bandwidth(100, 2.0) == doctest::Approx(0.84336).epsilon(1e-5));
  CHECK(silverman_bandwidth(10, 0.0) == kBandwidthFloor);
  CHECK(silverman_bandwidth(10, 0.0, 1e-3) == 1e-3);
  CHECK_THROWS_AS(silverman_bandwidth(0, 1.0), std::invalid_argument);
}

TEST_CASE("silverman_bandwidth is decreasing in v and linear in sigma") {
  double prev = silverman_bandwidth(1, 1.0);
  for (Eigen::Index v = 2; v < 200; v += 7) {
    const double b = silverman_bandwidth(v, 1.0);
    CHECK(b < prev);
    prev = b;
    CHECK(silverman_bandwidth(v, 3.5) == doctest::Approx(3.5 * b));
  }
}

TEST_CASE("gaussian_product closed forms") {
  const auto symmetric = gaussian_product<double>({0, 1}, {0, 1});
  CHECK(symmetric.mu_tilde == doctest::Approx(0.0));
  CHECK(symmetric.sigma_tilde == doctest::Approx(1.0 / std::sqrt(2.0)));
  CHECK(symmetric.scale == doctest::Approx(0.282095).epsilon(1e-6));

  const auto shifted = gaussian_product<double>({0, 1}, {2, 1});
  CHECK(shifted.mu_tilde == doctest::Approx(1.0));
  CHECK(shifted.sigma_tilde == doctest::Approx(0.70711).epsilon(1e-5));
  CHECK(shifted.scale == doctest::Approx(0.103777).epsilon(1e-5));

  const auto scaled = gaussian_product<double>({0, 1}, {0, 2});
  CHECK(scaled.mu_tilde == doctest::Approx(0.0));
  CHECK(scaled.sigma_tilde == doctest::Approx(2.0 / std::sqrt(5.0)));
  CHECK(scaled.scale == doctest::Approx(0.178412).epsilon(1e-5));

  CHECK(scaled.sigma_tilde <= std::min(1.0, 2.0));
}

TEST_CASE("expectations match numerical integration of the density product") {
  // Frozen examples, each verified against the trapezoid oracle below.
  CHECK(self_expectation<double>({0, 1}) == doctest::Approx(0.282095).epsilon(1e-6));
  CHECK(self_expectation<double>({3, 2}) == doctest::Approx(0.141047).epsilon(1e-5));
  CHECK(cross_expectation<double>({0, 1}, {2, 1}) == doctest::Approx(0.103777).epsilon(1e-5));
  CHECK(cross_expectation<double>({0, 1}, {0, 2}) == doctest::Approx(0.178412).epsilon(1e-5));

  SplitMix64 gen(7);
  for (int trial = 0; trial < 60; ++trial) {
    const GaussianParamsd p0{gen.next_in(-10, 10), gen.next_in(0.1, 10)};
    const GaussianParamsd p1{gen.next_in(-10, 10), gen.next_in(0.1, 10)};
    CHECK(std::fabs(cross_expectation(p0, p1) - oracles::product_integral_trapezoid(p0, p1)) <=
          1e-8);
    CHECK(std::fabs(cross_expectation(p0, p0) - oracles::product_integral_trapezoid(p0, p0)) <=
          1e-8);
    CHECK(std::fabs(self_expectation(p0) - cross_expectation(p0, p0)) <= 1e-12);
  }
}

TEST_CASE("cross_expectation is bit-exact symmetric") {
  SplitMix64 gen(11);
  for (int trial = 0; trial < 100; ++trial) {
    const GaussianParamsd p0{gen.next_in(-10, 10), gen.next_in(0.1, 10)};
    const GaussianParamsd p1{gen.next_in(-10, 10), gen.next_in(0.1, 10)};
    CHECK(cross_expectation(p0, p1) == cross_expectation(p1, p0));
    const auto prod = gaussian_product(p0, p1);
    CHECK(prod.sigma_tilde <= std::min(p0.sigma, p1.sigma));
    CHECK(prod.scale > 0.0);
  }
}

TEST_CASE("self_expectation rejects non-positive sigma") {
  CHECK_THROWS_AS(self_expectation<double>({0, 0}), std::invalid_argument);
  CHECK_THROWS_AS(self_expectation<double>({0, -1}), std::invalid_argument);
}
