#include <doctest.h>

#include <cmath>

#include "heterofisher/random_projection.hpp"
#include "heterofisher/rng.hpp"
#include "heterofisher/robust_stats.hpp"

using namespace heterofisher;

TEST_CASE("generate_weights is deterministic and row-stream independent") {
  const auto a = generate_weights(42, 30, 17);
  const auto b = generate_weights(42, 30, 17);
  CHECK(a.entries == b.entries);

  // Row i depends only on (seed, i), not on how many rows exist.
  const auto taller = generate_weights(42, 60, 17);
  CHECK(taller.entries.topRows(30) == a.entries);

  const auto block = generate_weight_rows(42, 10, 20, 17);
  CHECK(block == a.entries.middleRows(10, 10));

  CHECK_THROWS_AS(generate_weights(1, 0, 5), std::invalid_argument);
  CHECK_THROWS_AS(generate_weights(1, 5, 0), std::invalid_argument);
}

TEST_CASE("weight entries look standard normal") {
  const auto w = generate_weights(7, 1000, 1000);
  const double mean = w.entries.mean();
  const double var = (w.entries.array() - mean).square().mean();
  CHECK(std::fabs(mean) < 0.01);
  CHECK(std::fabs(var - 1.0) < 0.01);

  const auto other = generate_weights(8, 1000, 1000);
  const Index differing = ((w.entries.array() != other.entries.array()).cast<Index>()).sum();
  CHECK(double(differing) / double(w.entries.size()) >= 0.999);
}

TEST_CASE("project is a plain matrix-vector product") {
  const auto w = generate_weights(3, 8, 5);
  CHECK(project(w, VectorXd::Zero(5)) == VectorXd::Zero(8));

  ProjectionMatrix tiny{MatrixXd::Constant(1, 1, 2.0), 0};
  VectorXd x3(1);
  x3 << 3.0;
  CHECK(project(tiny, x3)[0] == doctest::Approx(6.0));

  SplitMix64 gen(9);
  VectorXd x(5);
  for (Index i = 0; i < 5; ++i) x[i] = gen.next_in(-2, 2);
  const VectorXd z = project(w, x);
  for (Index i = 0; i < 8; ++i) {
    double acc = 0;
    for (Index j = 0; j < 5; ++j) acc += w.entries(i, j) * x[j];
    CHECK(z[i] == doctest::Approx(acc).epsilon(1e-10));
  }

  CHECK_THROWS_AS(project(w, VectorXd::Zero(4)), std::invalid_argument);
}

TEST_CASE("projection is linear") {
  const auto w = generate_weights(11, 12, 6);
  SplitMix64 gen(13);
  VectorXd x(6), y(6);
  for (Index i = 0; i < 6; ++i) {
    x[i] = gen.next_in(-3, 3);
    y[i] = gen.next_in(-3, 3);
  }
  const double a = 1.7, b = -0.4;
  const VectorXd lhs = project(w, (a * x + b * y).eval());
  const VectorXd rhs = a * project(w, x) + b * project(w, y);
  for (Index i = 0; i < 12; ++i) CHECK(lhs[i] == doctest::Approx(rhs[i]).epsilon(1e-9));
}

namespace {

MatrixXd random_projections(Index m, Index v, double mu, double sigma, std::uint64_t seed) {
  MatrixXd z(m, v);
  NormalStream stream(seed, 1);
  for (Index i = 0; i < m; ++i)
    for (Index j = 0; j < v; ++j) z(i, j) = mu + sigma * stream.next();
  return z;
}

}  // namespace

TEST_CASE("shift plan collides robust means at the drawn deltas") {
  const Index m = 50, v0 = 80, v1 = 60;
  const MatrixXd z0 = random_projections(m, v0, 1.0, 2.0, 100);
  MatrixXd z1 = random_projections(m, v1, -3.0, 0.7, 200);

  const MeanShiftPlan plan = build_shift_plan(z0, z1, 777);
  z1.colwise() += plan.shifts;
  for (Index i = 0; i < m; ++i) {
    const double diff = interquartile_mean(z1.row(i)) - interquartile_mean(z0.row(i));
    CHECK(diff == doctest::Approx(plan.deltas[i]).epsilon(1e-9));
  }
}

TEST_CASE("a zero-delta plan collides the means exactly") {
  const Index m = 20;
  const MatrixXd z0 = random_projections(m, 40, 0.5, 1.0, 300);
  MatrixXd z1 = random_projections(m, 30, 4.0, 2.0, 400);

  MeanShiftPlan plan = build_shift_plan(z0, z1, 1);
  plan.shifts -= plan.deltas;  // remove the N(0,1) target, leaving pure collision
  plan.deltas.setZero();
  z1.colwise() += plan.shifts;
  for (Index i = 0; i < m; ++i)
    CHECK(interquartile_mean(z1.row(i)) ==
          doctest::Approx(interquartile_mean(z0.row(i))).epsilon(1e-9));
}

TEST_CASE("deltas over many nodes pass a KS check against N(0,1)") {
  const Index m = 10000;
  const MatrixXd z0 = MatrixXd::Zero(m, 1);
  const MatrixXd z1 = MatrixXd::Zero(m, 1);
  const MeanShiftPlan plan = build_shift_plan(z0, z1, 424242);

  VectorXd sorted = plan.deltas;
  std::sort(sorted.begin(), sorted.end());
  double ks = 0.0;
  for (Index i = 0; i < m; ++i) {
    const double cdf = 0.5 * std::erfc(-sorted[i] / std::sqrt(2.0));
    ks = std::max(ks, std::fabs(cdf - double(i + 1) / double(m)));
    ks = std::max(ks, std::fabs(cdf - double(i) / double(m)));
  }
  // K-S acceptance at the 1% level: sqrt(m) * D < 1.628
  CHECK(std::sqrt(double(m)) * ks < 1.628);
}

TEST_CASE("apply_shift only touches class 1 and round-trips") {
  const Index m = 15;
  MeanShiftPlan plan;
  plan.deltas = VectorXd::Zero(m);
  plan.shifts = VectorXd::LinSpaced(m, -2.0, 2.0);

  SplitMix64 gen(31);
  VectorXd z(m);
  for (Index i = 0; i < m; ++i) z[i] = gen.next_in(-5, 5);

  CHECK(apply_shift(plan, z, 0) == z);
  const VectorXd shifted = apply_shift(plan, z, 1);
  CHECK((shifted - plan.shifts - z).lpNorm<Eigen::Infinity>() <= 1e-12);

  MeanShiftPlan zero = plan;
  zero.shifts.setZero();
  CHECK(apply_shift(zero, z, 1) == z);

  CHECK_THROWS_AS(apply_shift(plan, VectorXd::Zero(m + 1), 1), std::invalid_argument);
}
