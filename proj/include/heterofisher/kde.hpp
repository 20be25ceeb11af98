#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "heterofisher/robust_stats.hpp"
#include "heterofisher/types.hpp"

namespace heterofisher {

/// Gaussian-kernel density estimate over one node's projected class samples,
/// used as that node's activation function:
///   f(z) = 1/(sqrt(2 pi) beta v) * sum_q exp(-(z - z_q)^2 / (2 beta^2)).
/// Immutable after construction; evaluation is pure.
template <typename Scalar>
struct ActivationFunction {
  VectorX<Scalar> centers;  // projected training samples z_q, stored verbatim
  Scalar bandwidth;         // beta > 0
  Index node_index;
  int class_label;

  /// Pointwise supremum 1/(sqrt(2 pi) beta).
  Scalar upper_bound() const {
    return Scalar(1) / (std::sqrt(Scalar(2) * std::numbers::pi_v<Scalar>) * bandwidth);
  }
};
using ActivationFunctiond = ActivationFunction<double>;

/// Builds the node's activation: centers verbatim, Silverman bandwidth from the
/// MAD-based dispersion of the centers (floored when MAD collapses to zero).
template <typename Derived>
ActivationFunction<typename Derived::Scalar> build_activation(
    const Eigen::DenseBase<Derived>& samples, Index node_index, int class_label,
    typename Derived::Scalar bandwidth_floor = kBandwidthFloor) {
  using Scalar = typename Derived::Scalar;
  VectorX<Scalar> centers = samples.derived().reshaped();
  if (centers.size() == 0) throw std::invalid_argument("build_activation: empty sample list");
  const Scalar sigma_hat = mad_sigma(centers).sigma_hat;
  const Scalar beta = silverman_bandwidth(centers.size(), sigma_hat, bandwidth_floor);
  return {std::move(centers), beta, node_index, class_label};
}

/// The kernel sum, accumulated in center order with a single accumulator.
template <typename Scalar>
Scalar eval_activation(const ActivationFunction<Scalar>& f, Scalar z) {
  const Scalar inv_two_beta_sq = Scalar(1) / (Scalar(2) * f.bandwidth * f.bandwidth);
  Scalar acc = Scalar(0);
  const Scalar* c = f.centers.data();
  const Index v = f.centers.size();
  for (Index q = 0; q < v; ++q) {
    const Scalar d = z - c[q];
    acc += std::exp(-d * d * inv_two_beta_sq);
  }
  return acc / (std::sqrt(Scalar(2) * std::numbers::pi_v<Scalar>) * f.bandwidth * Scalar(v));
}

/// Elementwise eval_activation over a batch of points.
template <typename Scalar, typename Derived>
VectorX<Scalar> batch_eval(const ActivationFunction<Scalar>& f,
                           const Eigen::DenseBase<Derived>& zs) {
  const VectorX<Scalar> z = zs.derived().reshaped();
  VectorX<Scalar> out(z.size());
  for (Index i = 0; i < z.size(); ++i) out[i] = eval_activation(f, z[i]);
  return out;
}

}  // namespace heterofisher
