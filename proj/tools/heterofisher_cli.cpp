#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "heterofisher/experiment.hpp"
#include "heterofisher/model_io.hpp"

namespace hf = heterofisher;
namespace fs = std::filesystem;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNumeric = 3;

std::string default_data_dir() {
  const char* env = std::getenv("HETEROFISHER_DATA_DIR");
  return env ? env : "";
}

struct CommonOpts {
  std::string data_dir = default_data_dir();
  std::string dataset = "mnist";
  std::string normalization = "per-pixel";
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
  cmd->add_option("--data-dir", opts.data_dir,
                  "Directory with mnist/ and fashion/ IDX files (default: $HETEROFISHER_DATA_DIR)");
  cmd->add_option("--dataset", opts.dataset, "Dataset name")
      ->check(CLI::IsMember({"mnist", "fashion"}));
  cmd->add_option("--normalize", opts.normalization, "z-normalization axis")
      ->check(CLI::IsMember({"per-pixel", "per-image", "global"}));
}

hf::LoadedDataset load(const CommonOpts& opts) {
  if (opts.data_dir.empty())
    throw CLI::ValidationError("--data-dir is required (or set HETEROFISHER_DATA_DIR)");
  return hf::load_dataset(opts.data_dir, opts.dataset,
                          hf::normalization_from_string(opts.normalization));
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw hf::FormatError("cannot open " + path.string() + " for writing");
  out << content;
  if (!out) throw hf::FormatError("write failed for " + path.string());
}

std::vector<int> parse_pair(const std::string& classes) {
  const auto comma = classes.find(',');
  if (comma == std::string::npos)
    throw CLI::ValidationError("--classes expects two comma-separated labels, e.g. 0,1");
  try {
    return {std::stoi(classes.substr(0, comma)), std::stoi(classes.substr(comma + 1))};
  } catch (const std::exception&) {
    throw CLI::ValidationError("--classes expects two comma-separated labels, e.g. 0,1");
  }
}

int run_pair_cmd(const CommonOpts& opts, const std::string& classes, const std::string& criterion,
                 hf::ExperimentConfig config, std::vector<std::uint64_t> seeds,
                 const std::string& preset, const std::string& out_path,
                 const std::string& model_path) {
  if (!preset.empty()) hf::apply_preset(config, preset);
  config.criterion = hf::criterion_from_string(criterion);
  config.normalization = hf::normalization_from_string(opts.normalization);
  if (seeds.empty()) seeds = hf::default_seeds(preset.empty() ? "desk" : preset);
  if (config.top_n < 1 || config.top_n > config.nodes)
    throw CLI::ValidationError("--top-n must satisfy 1 <= N <= nodes");

  const auto pair = parse_pair(classes);
  const hf::LoadedDataset data = load(opts);

  hf::TrainedModel model;
  const auto results = hf::run_pair(data, pair[0], pair[1], config, seeds,
                                    model_path.empty() ? nullptr : &model);
  write_file(out_path, hf::pair_report_json(data, pair[0], pair[1], config, seeds, results));

  double total_wall = 0.0;
  for (const auto& r : results) total_wall += r.wall_seconds;
  std::cerr << "run-pair " << data.name << " (" << pair[0] << "," << pair[1] << ") "
            << criterion << ": " << results.size() << " runs, " << total_wall << " s total\n";

  if (!model_path.empty()) {
    model.metadata["dataset"] = data.name;
    model.metadata["class_a"] = std::to_string(pair[0]);
    model.metadata["class_b"] = std::to_string(pair[1]);
    model.metadata["normalization"] = opts.normalization;
    model.metadata["train_per_class"] = std::to_string(config.train_per_class);
    model.metadata["test_per_class"] = std::to_string(config.test_per_class);
    model.metadata["run_seed"] = std::to_string(seeds.back());
    hf::save_model(model, model_path);
    std::cerr << "model saved to " << model_path << "\n";
  }
  return 0;
}

int run_matrix_cmd(const CommonOpts& opts, hf::ExperimentConfig config,
                   std::vector<std::uint64_t> seeds, const std::string& preset,
                   const std::string& out_path) {
  if (!preset.empty()) hf::apply_preset(config, preset);
  config.normalization = hf::normalization_from_string(opts.normalization);
  if (seeds.empty()) seeds = hf::default_seeds(preset.empty() ? "desk" : preset);

  const hf::LoadedDataset data = load(opts);
  const hf::ExperimentReport report = hf::run_matrix(data, config, seeds);
  write_file(out_path, hf::matrix_report_csv(report));
  std::cerr << "run-matrix " << data.name << ": mean improvement "
            << report.mean_improvement << " pp over " << report.cells.size() / 2 << " pairs\n";
  return 0;
}

int dump_activations_cmd(const std::string& model_path, const std::string& data_dir,
                         Eigen::Index image_index, const std::string& out_path) {
  const hf::TrainedModel model = hf::load_model(model_path);
  const auto& meta = model.metadata;
  for (const char* key : {"dataset", "class_a", "class_b", "normalization"})
    if (!meta.count(key))
      throw hf::FormatError(std::string("model file lacks metadata key '") + key +
                            "'; was it saved by run-pair --save-model?");
  if (data_dir.empty())
    throw CLI::ValidationError("--data-dir is required (or set HETEROFISHER_DATA_DIR)");

  const hf::LoadedDataset data = hf::load_dataset(
      data_dir, meta.at("dataset"), hf::normalization_from_string(meta.at("normalization")));
  hf::PairDataset pair =
      hf::extract_pair(data.train, data.test, std::stoi(meta.at("class_a")),
                       std::stoi(meta.at("class_b")));
  if (meta.count("test_per_class") && meta.count("run_seed")) {
    pair = hf::subsample_pair(pair, 0, Eigen::Index(std::stoll(meta.at("test_per_class"))),
                              std::stoull(meta.at("run_seed")));
  }
  hf::dump_sorted_activations(model, pair.test_x, pair.test_y, image_index, out_path);
  std::cerr << "dumped sorted activations of test image " << image_index << " to " << out_path
            << "\n";
  return 0;
}

int check_data_cmd(const std::string& data_dir) {
  if (data_dir.empty())
    throw CLI::ValidationError("--data-dir is required (or set HETEROFISHER_DATA_DIR)");
  bool found_any = false;
  for (const std::string name : {"mnist", "fashion"}) {
    const fs::path dir = fs::path(data_dir) / name;
    if (!fs::exists(dir)) {
      std::cout << name << ": not present\n";
      continue;
    }
    found_any = true;
    for (const char* split : {"train", "t10k"}) {
      fs::path images = dir / (std::string(split) + "-images-idx3-ubyte");
      fs::path labels = dir / (std::string(split) + "-labels-idx1-ubyte");
      if (!fs::exists(images)) images += ".gz";
      if (!fs::exists(labels)) labels += ".gz";
      const hf::RawImages raw = hf::parse_idx_images(hf::read_file_maybe_gzip(images));
      const auto lab = hf::parse_idx_labels(hf::read_file_maybe_gzip(labels));
      if (lab.size() != raw.count)
        throw hf::FormatError(images.string() + ": image/label count mismatch");
      std::map<int, int> counts;
      for (auto l : lab) ++counts[l];
      std::cout << name << '/' << split << ": " << raw.count << " images " << raw.rows << 'x'
                << raw.cols << ", labels";
      for (const auto& [label, count] : counts) std::cout << ' ' << label << ':' << count;
      std::cout << '\n';
    }
  }
  if (!found_any) throw hf::FormatError("no dataset directories under " + data_dir);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Heteroscedastic extension of Fisher's criterion: KDE-activation "
               "random-projection networks on MNIST/Fashion-MNIST"};
  app.require_subcommand(1);

  CommonOpts opts;
  hf::ExperimentConfig config;
  std::string classes = "0,1", criterion = "extended", preset, out_path, model_path;
  std::vector<std::uint64_t> seeds;

  CLI::App* pair_cmd = app.add_subcommand("run-pair", "Train/evaluate one class pair over seeds");
  add_common(pair_cmd, opts);
  pair_cmd->add_option("--classes", classes, "Class pair A,B (e.g. 0,1)");
  pair_cmd->add_option("--criterion", criterion, "Ranking criterion")
      ->check(CLI::IsMember({"extended", "fisher"}));
  pair_cmd->add_option("--nodes", config.nodes, "Hidden-layer size m");
  pair_cmd->add_option("--top-n", config.top_n, "Selected nodes N per class");
  pair_cmd->add_option("--seeds", seeds, "Run seeds (comma separated)")->delimiter(',');
  pair_cmd->add_flag("--delta-mu-sim", config.delta_mu_sim,
                     "Collide projected class means (delta-mu ~ N(0,1))");
  pair_cmd->add_option("--preset", preset, "desk (m=2000, 500/500 per class, 5 seeds) or paper")
      ->check(CLI::IsMember({"desk", "paper"}));
  pair_cmd->add_option("--train-per-class", config.train_per_class,
                       "Per-class training subsample (0 = full)");
  pair_cmd->add_option("--test-per-class", config.test_per_class,
                       "Per-class test subsample (0 = full)");
  pair_cmd->add_option("--out", out_path, "Report JSON path")->required();
  pair_cmd->add_option("--save-model", model_path, "Save the last seed's model (HFSH1)");

  CLI::App* matrix_cmd =
      app.add_subcommand("run-matrix", "All unordered class pairs, both criteria");
  add_common(matrix_cmd, opts);
  matrix_cmd->add_option("--nodes", config.nodes, "Hidden-layer size m");
  matrix_cmd->add_option("--top-n", config.top_n, "Selected nodes N per class");
  matrix_cmd->add_option("--seeds", seeds, "Run seeds (comma separated)")->delimiter(',');
  matrix_cmd->add_flag("--delta-mu-sim", config.delta_mu_sim,
                       "Collide projected class means (delta-mu ~ N(0,1))");
  matrix_cmd->add_option("--preset", preset, "desk or paper")
      ->check(CLI::IsMember({"desk", "paper"}));
  matrix_cmd->add_option("--train-per-class", config.train_per_class,
                         "Per-class training subsample (0 = full)");
  matrix_cmd->add_option("--test-per-class", config.test_per_class,
                         "Per-class test subsample (0 = full)");
  matrix_cmd->add_option("--out", out_path, "Report CSV path")->required();

  std::string dump_model, dump_data_dir = default_data_dir(), dump_out;
  Eigen::Index image_index = 0;
  CLI::App* dump_cmd =
      app.add_subcommand("dump-activations", "Sorted per-node responses for one test image");
  dump_cmd->add_option("--model", dump_model, "Model file from run-pair --save-model")->required();
  dump_cmd->add_option("--data-dir", dump_data_dir, "Data directory");
  dump_cmd->add_option("--image-index", image_index, "Test image index within the pair");
  dump_cmd->add_option("--out", dump_out, "Curves CSV path")->required();

  std::string check_data_dir = default_data_dir();
  CLI::App* check_cmd = app.add_subcommand("check-data", "IDX integrity and label counts");
  check_cmd->add_option("--data-dir", check_data_dir, "Data directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : kExitUsage;
  }

  try {
    if (pair_cmd->parsed())
      return run_pair_cmd(opts, classes, criterion, config, seeds, preset, out_path, model_path);
    if (matrix_cmd->parsed())
      return run_matrix_cmd(opts, config, seeds, preset, out_path);
    if (dump_cmd->parsed())
      return dump_activations_cmd(dump_model, dump_data_dir, image_index, dump_out);
    if (check_cmd->parsed()) return check_data_cmd(check_data_dir);
  } catch (const CLI::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const hf::FormatError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::invalid_argument& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const hf::NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kExitNumeric;
  }
  return 0;
}
