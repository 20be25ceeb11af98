#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

#include "heterofisher/robust_stats.hpp"
#include "heterofisher/types.hpp"

namespace heterofisher {

/// Variance floor below which a node carries no usable signal.
inline constexpr double kVarianceFloor = 1e-12;

/// Priors are clamped this far away from 0 and 1 before the log ratio.
inline constexpr double kPriorClamp = 1e-9;

/// Robust per-node, per-class statistics plus the class prior.
template <typename Scalar>
struct ClassStats {
  Scalar mu;
  Scalar sigma;  // >= 0 (MAD-based estimate; may legitimately be 0)
  Scalar prior;  // in (0, 1)
};
using ClassStatsd = ClassStats<double>;

/// Fisher criterion F, thresholds T^k and divergences D^k = F - T^k at one node.
template <typename Scalar>
struct NodeDivergence {
  Scalar fisher;
  Scalar threshold_0;
  Scalar threshold_1;
  Scalar div_0;
  Scalar div_1;
};
using NodeDivergenced = NodeDivergence<double>;

/// Node indices sorted by descending score (ties by ascending index) and the
/// size of the selected head.
struct Ranking {
  std::vector<Index> order;
  Index top_n = 0;

  std::span<const Index> top() const {
    return {order.data(), static_cast<std::size_t>(top_n)};
  }
};

namespace detail {

template <typename Scalar>
Scalar clamped_prior(Scalar prior) {
  if (!(prior > Scalar(0)) || !(prior < Scalar(1)))
    throw std::invalid_argument("class prior must lie strictly inside (0, 1)");
  return std::clamp(prior, Scalar(kPriorClamp), Scalar(1) - Scalar(kPriorClamp));
}

}  // namespace detail

/// F = (mu1 - mu0)^2 / (sigma1^2 + sigma0^2).
template <typename Scalar>
Scalar fisher_criterion(const ClassStats<Scalar>& s0, const ClassStats<Scalar>& s1) {
  const Scalar var_sum = s0.sigma * s0.sigma + s1.sigma * s1.sigma;
  if (!(var_sum > Scalar(kVarianceFloor)))
    throw DegenerateNodeError("fisher_criterion: pooled variance below floor");
  const Scalar dmu = s1.mu - s0.mu;
  return dmu * dmu / var_sum;
}

/// T^k = 2 ln( sqrt(2 sigma_k^2 / (sigma1^2 + sigma0^2)) * P(C_{1-k}) / P(C_k) ).
template <typename Scalar>
Scalar threshold(const ClassStats<Scalar>& s0, const ClassStats<Scalar>& s1, int k) {
  const ClassStats<Scalar>& own = (k == 0) ? s0 : s1;
  const ClassStats<Scalar>& other = (k == 0) ? s1 : s0;
  const Scalar var_sum = s0.sigma * s0.sigma + s1.sigma * s1.sigma;
  if (!(var_sum > Scalar(0)) || !(own.sigma > Scalar(0)))
    throw DegenerateNodeError("threshold: zero class dispersion");
  const Scalar p_own = detail::clamped_prior(own.prior);
  const Scalar p_other = detail::clamped_prior(other.prior);
  return std::log(Scalar(2) * own.sigma * own.sigma / var_sum) +
         Scalar(2) * std::log(p_other / p_own);
}

/// D^k = F - T^k. Higher means more discriminative for class k.
template <typename Scalar>
Scalar divergence(const ClassStats<Scalar>& s0, const ClassStats<Scalar>& s1, int k) {
  return fisher_criterion(s0, s1) - threshold(s0, s1, k);
}

/// All five per-node quantities with the degenerate convention: an unusable
/// side gets T^k = +inf and hence D^k = -inf, so it is never selected.
template <typename Scalar>
NodeDivergence<Scalar> node_divergence(const ClassStats<Scalar>& s0, const ClassStats<Scalar>& s1) {
  constexpr Scalar inf = std::numeric_limits<Scalar>::infinity();
  const Scalar var_sum = s0.sigma * s0.sigma + s1.sigma * s1.sigma;
  NodeDivergence<Scalar> out;
  if (!(var_sum > Scalar(kVarianceFloor))) {
    out.fisher = Scalar(0);
    out.threshold_0 = out.threshold_1 = inf;
    out.div_0 = out.div_1 = -inf;
    return out;
  }
  out.fisher = fisher_criterion(s0, s1);
  out.threshold_0 = (s0.sigma > Scalar(0)) ? threshold(s0, s1, 0) : inf;
  out.threshold_1 = (s1.sigma > Scalar(0)) ? threshold(s0, s1, 1) : inf;
  out.div_0 = out.fisher - out.threshold_0;
  out.div_1 = out.fisher - out.threshold_1;
  return out;
}

/// Sorts node indices by descending value, ties by ascending index. Degenerate
/// nodes are expected to carry -inf. NaN sorts as -inf.
template <typename Derived>
Ranking rank_nodes(const Eigen::DenseBase<Derived>& values, Index top_n) {
  using Scalar = typename Derived::Scalar;
  const VectorX<Scalar> v = values.derived().reshaped();
  if (v.size() < top_n)
    throw std::invalid_argument("rank_nodes: fewer nodes than requested top-N");

  Ranking r;
  r.top_n = top_n;
  r.order.resize(static_cast<std::size_t>(v.size()));
  std::iota(r.order.begin(), r.order.end(), Index{0});
  auto key = [&](Index i) {
    const Scalar x = v[i];
    return std::isnan(x) ? -std::numeric_limits<Scalar>::infinity() : x;
  };
  std::sort(r.order.begin(), r.order.end(), [&](Index a, Index b) {
    const Scalar va = key(a), vb = key(b);
    return va != vb ? va > vb : a < b;
  });
  return r;
}

/// Assumption 2 checked via the closed-form expectations (Eqs. 7/8 route):
/// P(C_k) E[P(x|C_k)] > P(C_{1-k}) E[P(x|C_{1-k})], both under X ~ P(x|C_k).
template <typename Scalar>
bool check_assumption2(const GaussianParams<Scalar>& p0, const GaussianParams<Scalar>& p1,
                       Scalar prior0, Scalar prior1, int k) {
  const Scalar p_own = (k == 0) ? prior0 : prior1;
  const Scalar p_other = (k == 0) ? prior1 : prior0;
  const GaussianParams<Scalar>& own = (k == 0) ? p0 : p1;
  return p_own * self_expectation(own) > p_other * cross_expectation(p0, p1);
}

}  // namespace heterofisher
