#pragma once

#include <cstdint>

#include "heterofisher/types.hpp"

namespace heterofisher {

/// Random hidden-layer weight matrix W (m rows = nodes, n cols = input dim).
/// Entries are standard-normal, reproducible from (seed, m, n): row i is an
/// independent substream keyed by (seed, i), so generation order and worker
/// count never change the result.
struct ProjectionMatrix {
  MatrixXd entries;
  std::uint64_t seed = 0;

  Index rows() const { return entries.rows(); }
  Index cols() const { return entries.cols(); }
};

ProjectionMatrix generate_weights(std::uint64_t seed, Index m, Index n);

/// Rows [row_begin, row_end) of the same matrix, bit-identical to the full one.
MatrixXd generate_weight_rows(std::uint64_t seed, Index row_begin, Index row_end, Index n);

/// z = W x. Column-per-sample batches can multiply by `entries` directly.
VectorXd project(const ProjectionMatrix& weights, const Eigen::Ref<const VectorXd>& x);

/// Per-node additive shifts that place the robust class-mean difference of the
/// training projections at delta_i ~ N(0,1), simulating mu0 ~= mu1. Class-1
/// projections (train and test alike, by true label) receive shift_i at node i.
struct MeanShiftPlan {
  VectorXd deltas;  // target mean differences, one standard-normal draw per node
  VectorXd shifts;  // s_i added to class-1 projections at node i
  std::uint64_t sim_seed = 0;
};

/// Rows of proj0/proj1 are per-node training projections of class 0 / class 1.
MeanShiftPlan build_shift_plan(const Eigen::Ref<const MatrixXd>& proj0,
                               const Eigen::Ref<const MatrixXd>& proj1, std::uint64_t sim_seed);

/// Class 0 passes through; class 1 gets the per-node shift added.
VectorXd apply_shift(const MeanShiftPlan& plan, const Eigen::Ref<const VectorXd>& z,
                     int class_label);

}  // namespace heterofisher
