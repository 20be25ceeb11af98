#include "heterofisher/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <stdexcept>

namespace heterofisher {

const char* to_string(Criterion c) {
  return c == Criterion::kExtended ? "extended" : "fisher";
}

Criterion criterion_from_string(const std::string& s) {
  if (s == "extended") return Criterion::kExtended;
  if (s == "fisher") return Criterion::kFisher;
  throw std::invalid_argument("unknown criterion: " + s);
}

std::pair<double, double> estimate_priors(std::span<const int> labels) {
  std::size_t n0 = 0, n1 = 0;
  for (int y : labels) {
    if (y == 0)
      ++n0;
    else if (y == 1)
      ++n1;
    else
      throw std::invalid_argument("estimate_priors: labels must be 0 or 1");
  }
  if (n0 == 0 || n1 == 0)
    throw std::invalid_argument("estimate_priors: both classes must be present");
  const double v = double(n0 + n1);
  return {double(n0) / v, double(n1) / v};
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

/// Fills head slots lacking a finite divergence with the best remaining nodes
/// by Fisher score (then by ascending index if even F is degenerate there),
/// keeping `order` a permutation. Returns the number of fallback slots.
Index fisher_fallback(Ranking& ranking, const VectorXd& div_values, const VectorXd& fisher_values,
                      Index top_n) {
  Index finite = 0;
  while (finite < top_n && std::isfinite(div_values[ranking.order[std::size_t(finite)]])) ++finite;
  if (finite == top_n) return 0;

  const Index m = div_values.size();
  std::vector<char> in_head(std::size_t(m), 0);
  std::vector<Index> head(ranking.order.begin(), ranking.order.begin() + finite);
  for (Index i : head) in_head[std::size_t(i)] = 1;

  for (Index idx : rank_nodes(fisher_values, 0).order) {
    if (Index(head.size()) == top_n) break;
    if (in_head[std::size_t(idx)] || !std::isfinite(fisher_values[idx])) continue;
    head.push_back(idx);
    in_head[std::size_t(idx)] = 1;
  }
  for (Index idx = 0; Index(head.size()) < top_n && idx < m; ++idx) {
    if (in_head[std::size_t(idx)]) continue;
    head.push_back(idx);
    in_head[std::size_t(idx)] = 1;
  }

  std::vector<Index> rebuilt = std::move(head);
  for (Index idx : ranking.order)
    if (!in_head[std::size_t(idx)]) rebuilt.push_back(idx);
  ranking.order = std::move(rebuilt);
  return top_n - finite;
}

}  // namespace

TrainedModel train(const Eigen::Ref<const MatrixXd>& train_x, std::span<const int> train_y,
                   const ModelConfig& config) {
  const Index v = train_x.cols();
  const Index n = train_x.rows();
  if (v == 0 || n == 0) throw std::invalid_argument("train: empty training data");
  if (std::size_t(v) != train_y.size())
    throw std::invalid_argument("train: sample/label count mismatch");
  if (config.top_n < 1 || config.top_n > config.nodes)
    throw std::invalid_argument("train: need 1 <= top_n <= nodes");

  TrainedModel model;
  model.config = config;
  std::tie(model.prior0, model.prior1) = estimate_priors(train_y);

  model.weights = generate_weights(config.seed, config.nodes, n);
  const Index m = config.nodes;

  // Split columns by class, then project each class batch.
  std::vector<Index> idx0, idx1;
  for (Index c = 0; c < v; ++c) (train_y[std::size_t(c)] == 0 ? idx0 : idx1).push_back(c);
  MatrixXd x0(n, Index(idx0.size())), x1(n, Index(idx1.size()));
  for (std::size_t j = 0; j < idx0.size(); ++j) x0.col(Index(j)) = train_x.col(idx0[j]);
  for (std::size_t j = 0; j < idx1.size(); ++j) x1.col(Index(j)) = train_x.col(idx1[j]);

  MatrixXd z0 = model.weights.entries * x0;  // m x v0
  MatrixXd z1 = model.weights.entries * x1;

  if (config.delta_mu_sim) {
    model.shift_plan = build_shift_plan(z0, z1, config.sim_seed);
    z1.colwise() += model.shift_plan->shifts;
  }

  model.activations0.resize(std::size_t(m));
  model.activations1.resize(std::size_t(m));
  model.stats0.resize(std::size_t(m));
  model.stats1.resize(std::size_t(m));
  model.divergences.resize(std::size_t(m));
  VectorXd d0(m), d1(m), fisher(m);

#pragma omp parallel for schedule(static)
  for (Index i = 0; i < m; ++i) {
    const RobustEstimatesd r0 = mad_sigma(z0.row(i));
    const RobustEstimatesd r1 = mad_sigma(z1.row(i));
    model.stats0[std::size_t(i)] = {r0.iq_mean, r0.sigma_hat, model.prior0};
    model.stats1[std::size_t(i)] = {r1.iq_mean, r1.sigma_hat, model.prior1};
    model.activations0[std::size_t(i)] = {z0.row(i).transpose(),
                                          silverman_bandwidth(z0.cols(), r0.sigma_hat), i, 0};
    model.activations1[std::size_t(i)] = {z1.row(i).transpose(),
                                          silverman_bandwidth(z1.cols(), r1.sigma_hat), i, 1};
    const NodeDivergenced nd =
        node_divergence(model.stats0[std::size_t(i)], model.stats1[std::size_t(i)]);
    model.divergences[std::size_t(i)] = nd;
    d0[i] = nd.div_0;
    d1[i] = nd.div_1;
    // A node whose pooled variance sits below the floor is unusable under F too.
    const double var_sum = r0.sigma_hat * r0.sigma_hat + r1.sigma_hat * r1.sigma_hat;
    fisher[i] = (var_sum > kVarianceFloor) ? nd.fisher : -kInf;
  }

  if (config.criterion == Criterion::kFisher) {
    model.ranking0 = rank_nodes(fisher, config.top_n);
    if (!std::isfinite(fisher[model.ranking0.order[std::size_t(config.top_n - 1)]]))
      std::cerr << "warning: selected nodes include degenerate Fisher scores\n";
    model.ranking1 = model.ranking0;
  } else {
    model.ranking0 = rank_nodes(d0, config.top_n);
    model.ranking1 = rank_nodes(d1, config.top_n);
    const Index fell0 = fisher_fallback(model.ranking0, d0, fisher, config.top_n);
    const Index fell1 = fisher_fallback(model.ranking1, d1, fisher, config.top_n);
    if (fell0 > 0 || fell1 > 0)
      std::cerr << "warning: " << fell0 << "/" << fell1
                << " selected nodes per class fell back to Fisher ranking\n";
  }
  return model;
}

namespace {

double selected_sum(const TrainedModel& model, const std::vector<ActivationFunctiond>& acts,
                    const Ranking& ranking, const Eigen::Ref<const VectorXd>& x,
                    std::optional<int> sim_label) {
  double sum = 0.0;
  for (Index j : ranking.top()) {
    double z = model.weights.entries.row(j).dot(x);
    if (model.shift_plan && *sim_label == 1) z += model.shift_plan->shifts[j];
    sum += eval_activation(acts[std::size_t(j)], z);
  }
  return sum;
}

void require_sim_label(const TrainedModel& model, std::optional<int> sim_label) {
  if (model.shift_plan && !sim_label)
    throw std::invalid_argument("score: sim_label required when the mean-shift simulation is on");
  if (sim_label && *sim_label != 0 && *sim_label != 1)
    throw std::invalid_argument("score: sim_label must be 0 or 1");
}

}  // namespace

Scores score(const TrainedModel& model, const Eigen::Ref<const VectorXd>& x,
             std::optional<int> sim_label) {
  if (x.size() != model.input_dim())
    throw std::invalid_argument("score: input dimension mismatch");
  require_sim_label(model, sim_label);
  if (!model.shift_plan) sim_label = 0;  // unused
  Scores s;
  s.y0 = model.prior0 * selected_sum(model, model.activations0, model.ranking0, x, sim_label);
  s.y1 = model.prior1 * selected_sum(model, model.activations1, model.ranking1, x, sim_label);
  return s;
}

int predict(const TrainedModel& model, const Eigen::Ref<const VectorXd>& x,
            std::optional<int> sim_label) {
  return predict_from_scores(score(model, x, sim_label));
}

double evaluate_accuracy(const TrainedModel& model, const Eigen::Ref<const MatrixXd>& test_x,
                         std::span<const int> test_y) {
  const Index n_test = test_x.cols();
  if (n_test == 0) throw std::invalid_argument("evaluate_accuracy: empty test set");
  if (std::size_t(n_test) != test_y.size())
    throw std::invalid_argument("evaluate_accuracy: sample/label count mismatch");

  // Union of both selected sets; project just those rows for the whole batch.
  std::vector<Index> sel(model.ranking0.top().begin(), model.ranking0.top().end());
  sel.insert(sel.end(), model.ranking1.top().begin(), model.ranking1.top().end());
  std::sort(sel.begin(), sel.end());
  sel.erase(std::unique(sel.begin(), sel.end()), sel.end());

  MatrixXd w_sel(Index(sel.size()), model.input_dim());
  for (std::size_t r = 0; r < sel.size(); ++r) w_sel.row(Index(r)) = model.weights.entries.row(sel[r]);
  MatrixXd z_sel = w_sel * test_x;  // |sel| x n_test

  std::vector<Index> pos(std::size_t(model.config.nodes), -1);
  for (std::size_t r = 0; r < sel.size(); ++r) pos[std::size_t(sel[r])] = Index(r);

  Index correct = 0;
#pragma omp parallel for schedule(static) reduction(+ : correct)
  for (Index c = 0; c < n_test; ++c) {
    const int label = test_y[std::size_t(c)];
    double y0 = 0.0, y1 = 0.0;
    for (Index j : model.ranking0.top()) {
      double z = z_sel(pos[std::size_t(j)], c);
      if (model.shift_plan && label == 1) z += model.shift_plan->shifts[j];
      y0 += eval_activation(model.activations0[std::size_t(j)], z);
    }
    for (Index j : model.ranking1.top()) {
      double z = z_sel(pos[std::size_t(j)], c);
      if (model.shift_plan && label == 1) z += model.shift_plan->shifts[j];
      y1 += eval_activation(model.activations1[std::size_t(j)], z);
    }
    correct += predict_from_scores({model.prior0 * y0, model.prior1 * y1}) == label;
  }
  return double(correct) / double(n_test);
}

std::pair<VectorXd, VectorXd> activation_responses(const TrainedModel& model,
                                                   const Eigen::Ref<const VectorXd>& x,
                                                   std::optional<int> sim_label) {
  if (x.size() != model.input_dim())
    throw std::invalid_argument("activation_responses: input dimension mismatch");
  require_sim_label(model, sim_label);
  VectorXd z = model.weights.entries * x;
  if (model.shift_plan) z = apply_shift(*model.shift_plan, z, *sim_label);

  const Index m = model.config.nodes;
  VectorXd a0(m), a1(m);
#pragma omp parallel for schedule(static)
  for (Index i = 0; i < m; ++i) {
    a0[i] = eval_activation(model.activations0[std::size_t(i)], z[i]);
    a1[i] = eval_activation(model.activations1[std::size_t(i)], z[i]);
  }
  return {std::move(a0), std::move(a1)};
}

}  // namespace heterofisher
