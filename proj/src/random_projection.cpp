#include "heterofisher/random_projection.hpp"

#include <stdexcept>

#include "heterofisher/rng.hpp"
#include "heterofisher/robust_stats.hpp"

namespace heterofisher {

MatrixXd generate_weight_rows(std::uint64_t seed, Index row_begin, Index row_end, Index n) {
  if (n < 1 || row_end < row_begin) throw std::invalid_argument("generate_weight_rows: bad shape");
  MatrixXd block(row_end - row_begin, n);
#pragma omp parallel for schedule(static)
  for (Index i = row_begin; i < row_end; ++i) {
    NormalStream stream(seed, static_cast<std::uint64_t>(i));
    for (Index j = 0; j < n; ++j) block(i - row_begin, j) = stream.next();
  }
  return block;
}

ProjectionMatrix generate_weights(std::uint64_t seed, Index m, Index n) {
  if (m < 1 || n < 1) throw std::invalid_argument("generate_weights: dimensions must be >= 1");
  return {generate_weight_rows(seed, 0, m, n), seed};
}

VectorXd project(const ProjectionMatrix& weights, const Eigen::Ref<const VectorXd>& x) {
  if (x.size() != weights.cols())
    throw std::invalid_argument("project: input dimension does not match weight columns");
  return weights.entries * x;
}

MeanShiftPlan build_shift_plan(const Eigen::Ref<const MatrixXd>& proj0,
                               const Eigen::Ref<const MatrixXd>& proj1, std::uint64_t sim_seed) {
  if (proj0.rows() != proj1.rows())
    throw std::invalid_argument("build_shift_plan: node counts differ between classes");
  if (proj0.cols() == 0 || proj1.cols() == 0)
    throw std::invalid_argument("build_shift_plan: a class has no training projections");

  const Index m = proj0.rows();
  MeanShiftPlan plan;
  plan.sim_seed = sim_seed;
  plan.deltas.resize(m);
  plan.shifts.resize(m);
#pragma omp parallel for schedule(static)
  for (Index i = 0; i < m; ++i) {
    plan.deltas[i] = NormalStream(sim_seed, static_cast<std::uint64_t>(i)).next();
    const double observed =
        interquartile_mean(proj1.row(i)) - interquartile_mean(proj0.row(i));
    plan.shifts[i] = plan.deltas[i] - observed;
  }
  return plan;
}

VectorXd apply_shift(const MeanShiftPlan& plan, const Eigen::Ref<const VectorXd>& z,
                     int class_label) {
  if (z.size() != plan.shifts.size())
    throw std::invalid_argument("apply_shift: node count mismatch");
  if (class_label == 0) return z;
  return z + plan.shifts;
}

}  // namespace heterofisher
