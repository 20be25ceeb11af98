#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "heterofisher/classifier.hpp"
#include "heterofisher/dataset.hpp"

namespace heterofisher {

/// Student-t quantile (inverse CDF) with `dof` degrees of freedom.
double student_t_quantile(double p, double dof);

/// Mean and t-based halfwidth: mean +- t_{(1+level)/2, n-1} * s / sqrt(n).
std::pair<double, double> confidence_interval(std::span<const double> values,
                                              double level = 0.95);

/// One train/evaluate cycle's outcome.
struct RunResult {
  int class_a = 0;
  int class_b = 1;
  Criterion mode = Criterion::kExtended;
  std::uint64_t seed = 0;
  double accuracy = 0.0;
  double wall_seconds = 0.0;  // reported on stderr only, never serialized
};

/// Full experiment setup for a dataset: model shape plus the sampling recipe.
struct ExperimentConfig {
  Index nodes = 10000;
  Index top_n = 10;
  Criterion criterion = Criterion::kExtended;
  bool delta_mu_sim = false;
  Normalization normalization = Normalization::kPerPixel;
  Index train_per_class = 0;  // 0 = full split
  Index test_per_class = 0;

  ModelConfig model_config(std::uint64_t run_seed) const;
};

/// Named presets: "desk" (m=2000, N=10, 500/500 per class) and
/// "paper" (m=10^4, N=10, full splits).
void apply_preset(ExperimentConfig& config, const std::string& preset);

/// Default seed lists: desk {1..5}, paper {1..10}.
std::vector<std::uint64_t> default_seeds(const std::string& preset);

/// Both splits of one dataset, already normalized.
struct LoadedDataset {
  std::string name;  // "mnist" | "fashion"
  ImageSet train;
  ImageSet test;
};

/// Reads `<data_dir>/<name>/{train,t10k}-{images-idx3,labels-idx1}-ubyte[.gz]`
/// and z-normalizes with the requested mode.
LoadedDataset load_dataset(const std::filesystem::path& data_dir, const std::string& name,
                           Normalization normalization = Normalization::kPerPixel);

/// Deterministic per-class subsample (seeded permutation, original order kept).
/// A count of 0 keeps the split whole.
PairDataset subsample_pair(const PairDataset& pair, Index train_per_class, Index test_per_class,
                           std::uint64_t seed);

/// One train/evaluate cycle per seed. Weights seed = run seed; the simulation
/// seed is derived from the run seed. Returns the trained model of the last
/// seed when `last_model` is given (for saving / activation dumps).
std::vector<RunResult> run_pair(const LoadedDataset& data, int a, int b,
                                const ExperimentConfig& config,
                                std::span<const std::uint64_t> seeds,
                                TrainedModel* last_model = nullptr);

/// JSON report for one run-pair invocation; byte-identical for identical inputs.
std::string pair_report_json(const LoadedDataset& data, int a, int b,
                             const ExperimentConfig& config,
                             std::span<const std::uint64_t> seeds,
                             std::span<const RunResult> results);

struct PairCell {
  int class_a = 0;
  int class_b = 1;
  Criterion mode = Criterion::kExtended;
  double mean_accuracy = 0.0;
  double ci_halfwidth = 0.0;
  std::vector<RunResult> runs;
  std::string error;  // non-empty when this cell failed

  bool ok() const { return error.empty(); }
};

struct ExperimentReport {
  std::string dataset;
  std::vector<PairCell> cells;  // pair-major, extended before fisher
  double mean_improvement = 0.0;  // percentage points, over pairs with both modes ok

  const PairCell* find(int a, int b, Criterion mode) const;
};

/// All unordered class pairs x both criteria. Per-cell failures are recorded
/// and the rest of the matrix is still produced.
ExperimentReport run_matrix(const LoadedDataset& data, const ExperimentConfig& config,
                            std::span<const std::uint64_t> seeds);

/// CSV rendering of the matrix report (one row per pair and mode, then the
/// aggregate improvement); byte-identical for identical inputs.
std::string matrix_report_csv(const ExperimentReport& report);

/// Sorted activation responses {a_i^k} of one test image over all m nodes,
/// written as CSV rows (network, sorted_index, activation) in ascending order.
void dump_sorted_activations(const TrainedModel& model, const Eigen::Ref<const MatrixXd>& test_x,
                             std::span<const int> test_y, Index image_index,
                             const std::filesystem::path& out_path);

/// Derives the simulation seed for a run seed (fixed salt, documented so runs
/// are reproducible from the seed list alone).
std::uint64_t derive_sim_seed(std::uint64_t run_seed);

}  // namespace heterofisher
