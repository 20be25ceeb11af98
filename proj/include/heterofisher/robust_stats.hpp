#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "heterofisher/types.hpp"

namespace heterofisher {

/// One class-conditional Gaussian N(mu, sigma^2).
template <typename Scalar>
struct GaussianParams {
  Scalar mu;
  Scalar sigma;  // > 0
};
using GaussianParamsd = GaussianParams<double>;

/// Product of two Gaussian densities: an unnormalized Gaussian with mean
/// mu_tilde, std sigma_tilde and total mass `scale`.
template <typename Scalar>
struct GaussianProduct {
  Scalar mu_tilde;
  Scalar sigma_tilde;
  Scalar scale;
};
using GaussianProductd = GaussianProduct<double>;

/// Robust location/dispersion summary of a sample.
template <typename Scalar>
struct RobustEstimates {
  Scalar iq_mean;    // interquartile (25% symmetric trimmed) mean
  Scalar mad;        // median absolute deviation eta
  Scalar sigma_hat;  // eta / 0.6745
};
using RobustEstimatesd = RobustEstimates<double>;

/// Gaussian-consistency factor: sigma ~= MAD / 0.6745.
inline constexpr double kMadToSigma = 0.6745;

/// Bandwidth floor used when the MAD-based dispersion collapses to zero.
inline constexpr double kBandwidthFloor = 1e-6;

namespace detail {

template <typename Scalar>
Scalar median_of_sorted(const VectorX<Scalar>& v) {
  const Index n = v.size();
  return (n % 2 == 1) ? v[n / 2] : (v[n / 2 - 1] + v[n / 2]) / Scalar(2);
}

template <typename Derived>
VectorX<typename Derived::Scalar> sorted_copy(const Eigen::DenseBase<Derived>& samples) {
  using Scalar = typename Derived::Scalar;
  VectorX<Scalar> v = samples.derived().reshaped();
  if (v.size() == 0) throw std::invalid_argument("empty sample list");
  if (!v.allFinite()) throw std::invalid_argument("non-finite sample value");
  std::sort(v.begin(), v.end());
  return v;
}

}  // namespace detail

/// Symmetric 25% trimmed mean: drop floor(v/4) smallest and largest values,
/// average the rest. Plain mean for v < 4.
template <typename Derived>
typename Derived::Scalar interquartile_mean(const Eigen::DenseBase<Derived>& samples) {
  using Scalar = typename Derived::Scalar;
  const VectorX<Scalar> v = detail::sorted_copy(samples);
  const Index trim = v.size() / 4;
  return v.segment(trim, v.size() - 2 * trim).mean();
}

/// MAD with lower/upper-middle averaging for even counts, plus sigma_hat = mad/0.6745.
template <typename Derived>
RobustEstimates<typename Derived::Scalar> mad_sigma(const Eigen::DenseBase<Derived>& samples) {
  using Scalar = typename Derived::Scalar;
  VectorX<Scalar> v = detail::sorted_copy(samples);
  const Scalar med = detail::median_of_sorted(v);

  const Index trim = v.size() / 4;
  const Scalar iq = v.segment(trim, v.size() - 2 * trim).mean();

  v = (v.array() - med).abs();
  std::sort(v.begin(), v.end());
  const Scalar mad = detail::median_of_sorted(v);
  return {iq, mad, mad / Scalar(kMadToSigma)};
}

/// Silverman's rule beta = (4/(3v))^{1/5} * sigma, floored at `floor` when sigma = 0.
template <typename Scalar>
Scalar silverman_bandwidth(Index v, Scalar sigma, Scalar floor = Scalar(kBandwidthFloor)) {
  if (v < 1) throw std::invalid_argument("silverman_bandwidth: sample count must be >= 1");
  if (!(sigma > Scalar(0))) return floor;
  return std::pow(Scalar(4) / (Scalar(3) * Scalar(v)), Scalar(1) / Scalar(5)) * sigma;
}

/// N(x; mu0, s0^2) * N(x; mu1, s1^2) written as scale * N(x; mu_tilde, sigma_tilde^2).
template <typename Scalar>
GaussianProduct<Scalar> gaussian_product(const GaussianParams<Scalar>& p0,
                                         const GaussianParams<Scalar>& p1) {
  const Scalar var_sum = p0.sigma * p0.sigma + p1.sigma * p1.sigma;
  const Scalar dmu = p1.mu - p0.mu;
  GaussianProduct<Scalar> out;
  out.mu_tilde = (p0.mu * p1.sigma * p1.sigma + p1.mu * p0.sigma * p0.sigma) / var_sum;
  out.sigma_tilde = p0.sigma * p1.sigma / std::sqrt(var_sum);
  out.scale = std::exp(-(dmu * dmu) / (Scalar(2) * var_sum)) /
              std::sqrt(Scalar(2) * std::numbers::pi_v<Scalar> * var_sum);
  return out;
}

/// E_{X~p0}[p1(X)] = integral of the two densities' product; equals the product's
/// scale and is symmetric in its arguments.
template <typename Scalar>
Scalar cross_expectation(const GaussianParams<Scalar>& p0, const GaussianParams<Scalar>& p1) {
  return gaussian_product(p0, p1).scale;
}

/// E_{X~p}[p(X)] = 1 / (2 sqrt(pi) sigma).
template <typename Scalar>
Scalar self_expectation(const GaussianParams<Scalar>& p) {
  if (!(p.sigma > Scalar(0))) throw std::invalid_argument("self_expectation: sigma must be > 0");
  return Scalar(1) / (Scalar(2) * std::sqrt(std::numbers::pi_v<Scalar>) * p.sigma);
}

}  // namespace heterofisher
