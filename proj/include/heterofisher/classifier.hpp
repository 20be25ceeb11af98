#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "heterofisher/divergence.hpp"
#include "heterofisher/kde.hpp"
#include "heterofisher/random_projection.hpp"
#include "heterofisher/types.hpp"

namespace heterofisher {

enum class Criterion { kExtended, kFisher };

const char* to_string(Criterion c);
Criterion criterion_from_string(const std::string& s);

struct ModelConfig {
  Index nodes = 10000;  // m, hidden-layer size
  Index top_n = 10;     // N, selected nodes per class network
  std::uint64_t seed = 0;
  Criterion criterion = Criterion::kExtended;
  bool delta_mu_sim = false;
  std::uint64_t sim_seed = 0;  // used only when delta_mu_sim
};

struct Scores {
  double y0 = 0.0;
  double y1 = 0.0;
};

/// argmax over {y0, y1}; exact tie goes to class 0.
inline int predict_from_scores(const Scores& s) { return s.y1 > s.y0 ? 1 : 0; }

/// Everything needed to score inputs: the (regenerable) projection matrix, the
/// per-node per-class activations and robust stats, divergences and the
/// selected node sets. Immutable after training.
struct TrainedModel {
  ModelConfig config;
  double prior0 = 0.5;
  double prior1 = 0.5;
  ProjectionMatrix weights;
  std::vector<ActivationFunctiond> activations0;  // node-indexed, class 0
  std::vector<ActivationFunctiond> activations1;
  std::vector<ClassStatsd> stats0;
  std::vector<ClassStatsd> stats1;
  std::vector<NodeDivergenced> divergences;
  Ranking ranking0;  // Omega^0 (full order), head of size N
  Ranking ranking1;
  std::optional<MeanShiftPlan> shift_plan;

  /// Free-form provenance written into the model file (dataset, pair, ...).
  std::map<std::string, std::string> metadata;

  Index input_dim() const { return weights.cols(); }
};

std::pair<double, double> estimate_priors(std::span<const int> labels);

/// Trains on a column-per-sample matrix: generates W from the seed, projects
/// both classes, optionally applies the mean-collision shift plan, builds the
/// m x 2 activation grid and robust stats, computes divergences and rankings.
TrainedModel train(const Eigen::Ref<const MatrixXd>& train_x, std::span<const int> train_y,
                   const ModelConfig& config);

/// y_k = P(C_k) * sum_{j in Omega^k_N} f_j^k(z_j) with z = W x (shift applied by
/// sim_label when the model was trained with the mean-collision simulation).
Scores score(const TrainedModel& model, const Eigen::Ref<const VectorXd>& x,
             std::optional<int> sim_label = std::nullopt);

int predict(const TrainedModel& model, const Eigen::Ref<const VectorXd>& x,
            std::optional<int> sim_label = std::nullopt);

/// Fraction of correct predictions over a column-per-sample test batch. True
/// labels double as simulation labels when the shift plan is active.
double evaluate_accuracy(const TrainedModel& model, const Eigen::Ref<const MatrixXd>& test_x,
                         std::span<const int> test_y);

/// All m activation responses {a_i^k} of both class networks for one input.
std::pair<VectorXd, VectorXd> activation_responses(const TrainedModel& model,
                                                   const Eigen::Ref<const VectorXd>& x,
                                                   std::optional<int> sim_label = std::nullopt);

}  // namespace heterofisher
