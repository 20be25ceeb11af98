#include "heterofisher/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <string_view>

#include <nlohmann/json.hpp>

#include "heterofisher/rng.hpp"

namespace heterofisher {

namespace {

// Regularized incomplete beta I_x(a, b), continued fraction by Lentz's method.
double beta_cf(double a, double b, double x) {
  constexpr int kMaxIter = 300;
  constexpr double kEps = 3e-16;
  constexpr double kTiny = 1e-300;
  const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEps) break;
  }
  return h;
}

double incomplete_beta(double a, double b, double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                          a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(ln_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_cf(a, b, x) / a;
  return 1.0 - front * beta_cf(b, a, 1.0 - x) / b;
}

double student_t_cdf(double t, double dof) {
  const double x = dof / (dof + t * t);
  const double half_tail = 0.5 * incomplete_beta(0.5 * dof, 0.5, x);
  return t >= 0.0 ? 1.0 - half_tail : half_tail;
}

}  // namespace

double student_t_quantile(double p, double dof) {
  if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("student_t_quantile: p outside (0,1)");
  if (!(dof > 0.0)) throw std::invalid_argument("student_t_quantile: dof must be positive");
  if (p == 0.5) return 0.0;
  if (p < 0.5) return -student_t_quantile(1.0 - p, dof);
  double lo = 0.0, hi = 1.0;
  while (student_t_cdf(hi, dof) < p) hi *= 2.0;  // bracket the quantile
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (student_t_cdf(mid, dof) < p ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

std::pair<double, double> confidence_interval(std::span<const double> values, double level) {
  const std::size_t n = values.size();
  if (n < 2) throw std::invalid_argument("confidence_interval: need at least 2 values");
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / double(n);
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  const double s = std::sqrt(ss / double(n - 1));
  const double t = student_t_quantile(0.5 * (1.0 + level), double(n - 1));
  return {mean, t * s / std::sqrt(double(n))};
}

ModelConfig ExperimentConfig::model_config(std::uint64_t run_seed) const {
  ModelConfig mc;
  mc.nodes = nodes;
  mc.top_n = top_n;
  mc.seed = run_seed;
  mc.criterion = criterion;
  mc.delta_mu_sim = delta_mu_sim;
  mc.sim_seed = delta_mu_sim ? derive_sim_seed(run_seed) : 0;
  return mc;
}

namespace {

constexpr std::uint64_t kSimSeedSalt = 0x6A09E667F3BCC909ULL;      // frac(sqrt 2)
constexpr std::uint64_t kSubsampleSalt = 0xBB67AE8584CAA73BULL;    // frac(sqrt 3)

}  // namespace

std::uint64_t derive_sim_seed(std::uint64_t run_seed) {
  return SplitMix64(run_seed ^ kSimSeedSalt).next();
}

void apply_preset(ExperimentConfig& config, const std::string& preset) {
  if (preset == "desk") {
    config.nodes = 2000;
    config.top_n = 10;
    config.train_per_class = 500;
    config.test_per_class = 500;
  } else if (preset == "paper") {
    config.nodes = 10000;
    config.top_n = 10;
    config.train_per_class = 0;
    config.test_per_class = 0;
  } else {
    throw std::invalid_argument("unknown preset: " + preset);
  }
}

std::vector<std::uint64_t> default_seeds(const std::string& preset) {
  const std::size_t n = (preset == "desk") ? 5 : 10;
  std::vector<std::uint64_t> seeds(n);
  std::iota(seeds.begin(), seeds.end(), 1);
  return seeds;
}

LoadedDataset load_dataset(const std::filesystem::path& data_dir, const std::string& name,
                           Normalization normalization) {
  const std::filesystem::path dir = data_dir / name;
  auto resolve = [&dir](const std::string& base) {
    for (const char* suffix : {"", ".gz"}) {
      std::filesystem::path p = dir / (base + suffix);
      if (std::filesystem::exists(p)) return p;
    }
    throw FormatError("missing data file " + (dir / base).string() + "[.gz]");
  };
  LoadedDataset data;
  data.name = name;
  data.train = load_image_set(resolve("train-images-idx3-ubyte"),
                              resolve("train-labels-idx1-ubyte"), Split::kTrain);
  data.test = load_image_set(resolve("t10k-images-idx3-ubyte"),
                             resolve("t10k-labels-idx1-ubyte"), Split::kTest);
  z_normalize(data.train, data.test, normalization);
  return data;
}

namespace {

/// First `count` indices of a seeded permutation of 0..n-1, restored to
/// ascending order so the subsample keeps the original sample order.
std::vector<Index> pick_indices(Index n, Index count, SplitMix64& gen) {
  std::vector<Index> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), Index{0});
  for (Index i = n - 1; i > 0; --i) {  // Fisher-Yates
    const Index j = Index(gen.next() % std::uint64_t(i + 1));
    std::swap(idx[std::size_t(i)], idx[std::size_t(j)]);
  }
  idx.resize(std::size_t(std::min(count, n)));
  std::sort(idx.begin(), idx.end());
  return idx;
}

void subsample_split(const MatrixXd& x, const std::vector<int>& y, Index per_class,
                     std::uint64_t seed, int split_tag, MatrixXd& out_x, std::vector<int>& out_y) {
  if (per_class <= 0) {
    out_x = x;
    out_y = y;
    return;
  }
  std::vector<Index> keep;
  for (int cls = 0; cls < 2; ++cls) {
    std::vector<Index> members;
    for (Index i = 0; i < Index(y.size()); ++i)
      if (y[std::size_t(i)] == cls) members.push_back(i);
    SplitMix64 gen(substream_state(seed ^ kSubsampleSalt,
                                   std::uint64_t(split_tag) * 2 + std::uint64_t(cls)));
    for (Index pos : pick_indices(Index(members.size()), per_class, gen))
      keep.push_back(members[std::size_t(pos)]);
  }
  std::sort(keep.begin(), keep.end());
  out_x.resize(x.rows(), Index(keep.size()));
  out_y.resize(keep.size());
  for (std::size_t j = 0; j < keep.size(); ++j) {
    out_x.col(Index(j)) = x.col(keep[j]);
    out_y[j] = y[std::size_t(keep[j])];
  }
}

}  // namespace

PairDataset subsample_pair(const PairDataset& pair, Index train_per_class, Index test_per_class,
                           std::uint64_t seed) {
  PairDataset out;
  out.class_a = pair.class_a;
  out.class_b = pair.class_b;
  subsample_split(pair.train_x, pair.train_y, train_per_class, seed, 0, out.train_x, out.train_y);
  subsample_split(pair.test_x, pair.test_y, test_per_class, seed, 1, out.test_x, out.test_y);
  return out;
}

std::vector<RunResult> run_pair(const LoadedDataset& data, int a, int b,
                                const ExperimentConfig& config,
                                std::span<const std::uint64_t> seeds, TrainedModel* last_model) {
  if (seeds.empty()) throw std::invalid_argument("run_pair: seed list is empty");
  const PairDataset full_pair = extract_pair(data.train, data.test, a, b);

  std::vector<RunResult> results;
  results.reserve(seeds.size());
  for (std::uint64_t seed : seeds) {
    const auto t0 = std::chrono::steady_clock::now();
    const PairDataset pair =
        subsample_pair(full_pair, config.train_per_class, config.test_per_class, seed);
    try {
      TrainedModel model = train(pair.train_x, pair.train_y, config.model_config(seed));
      RunResult r;
      r.class_a = a;
      r.class_b = b;
      r.mode = config.criterion;
      r.seed = seed;
      r.accuracy = evaluate_accuracy(model, pair.test_x, pair.test_y);
      r.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      results.push_back(r);
      if (last_model && seed == seeds.back()) *last_model = std::move(model);
    } catch (const std::exception& e) {
      throw NumericError("pair (" + std::to_string(a) + "," + std::to_string(b) + ") seed " +
                         std::to_string(seed) + ": " + e.what());
    }
  }
  return results;
}

namespace {

nlohmann::ordered_json config_json(const LoadedDataset& data, int a, int b,
                                   const ExperimentConfig& config) {
  nlohmann::ordered_json j;
  j["dataset"] = data.name;
  j["classes"] = {a, b};
  j["criterion"] = to_string(config.criterion);
  j["nodes"] = config.nodes;
  j["top_n"] = config.top_n;
  j["delta_mu_sim"] = config.delta_mu_sim;
  j["normalization"] = to_string(config.normalization);
  j["train_per_class"] = config.train_per_class;
  j["test_per_class"] = config.test_per_class;
  return j;
}

}  // namespace

std::string pair_report_json(const LoadedDataset& data, int a, int b,
                             const ExperimentConfig& config,
                             std::span<const std::uint64_t> seeds,
                             std::span<const RunResult> results) {
  nlohmann::ordered_json j = config_json(data, a, b, config);
  j["seeds"] = std::vector<std::uint64_t>(seeds.begin(), seeds.end());
  nlohmann::ordered_json runs = nlohmann::ordered_json::array();
  std::vector<double> accs;
  for (const RunResult& r : results) {
    runs.push_back({{"seed", r.seed}, {"accuracy", r.accuracy}});
    accs.push_back(r.accuracy);
  }
  j["runs"] = runs;
  const auto [mean, halfwidth] =
      accs.size() >= 2 ? confidence_interval(accs) : std::make_pair(accs.at(0), 0.0);
  j["mean_accuracy"] = mean;
  j["ci95_halfwidth"] = halfwidth;
  return j.dump(2) + "\n";
}

const PairCell* ExperimentReport::find(int a, int b, Criterion mode) const {
  for (const PairCell& c : cells)
    if (((c.class_a == a && c.class_b == b) || (c.class_a == b && c.class_b == a)) &&
        c.mode == mode)
      return &c;
  return nullptr;
}

ExperimentReport run_matrix(const LoadedDataset& data, const ExperimentConfig& config,
                            std::span<const std::uint64_t> seeds) {
  std::vector<int> classes;
  for (std::uint8_t label : data.train.labels)
    if (std::find(classes.begin(), classes.end(), int(label)) == classes.end())
      classes.push_back(int(label));
  std::sort(classes.begin(), classes.end());

  ExperimentReport report;
  report.dataset = data.name;
  for (std::size_t ia = 0; ia < classes.size(); ++ia) {
    for (std::size_t ib = ia + 1; ib < classes.size(); ++ib) {
      for (Criterion mode : {Criterion::kExtended, Criterion::kFisher}) {
        ExperimentConfig cell_config = config;
        cell_config.criterion = mode;
        PairCell cell;
        cell.class_a = classes[ia];
        cell.class_b = classes[ib];
        cell.mode = mode;
        try {
          cell.runs = run_pair(data, classes[ia], classes[ib], cell_config, seeds);
          std::vector<double> accs;
          for (const RunResult& r : cell.runs) accs.push_back(r.accuracy);
          if (accs.size() >= 2) {
            std::tie(cell.mean_accuracy, cell.ci_halfwidth) = confidence_interval(accs);
          } else {
            cell.mean_accuracy = accs.at(0);
            cell.ci_halfwidth = 0.0;
          }
        } catch (const std::exception& e) {
          cell.error = e.what();
        }
        report.cells.push_back(std::move(cell));
      }
    }
  }

  double improvement_sum = 0.0;
  Index improved_pairs = 0;
  for (std::size_t i = 0; i + 1 < report.cells.size(); i += 2) {
    const PairCell& ext = report.cells[i];
    const PairCell& fis = report.cells[i + 1];
    if (ext.ok() && fis.ok()) {
      improvement_sum += 100.0 * (ext.mean_accuracy - fis.mean_accuracy);
      ++improved_pairs;
    }
  }
  report.mean_improvement = improved_pairs > 0 ? improvement_sum / double(improved_pairs) : 0.0;
  return report;
}

namespace {

// Locale-independent fixed formatting keeps reports byte-identical everywhere.
std::string format_double(double v, int precision = 6) {
  char buf[48];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::fixed,
                                       precision);
  return ec == std::errc{} ? std::string(buf, end) : std::string("nan");
}

}  // namespace

std::string matrix_report_csv(const ExperimentReport& report) {
  std::ostringstream out;
  out << "dataset,class_a,class_b,criterion,mean_accuracy,ci95_halfwidth,seeds,error\n";
  for (const PairCell& c : report.cells) {
    out << report.dataset << ',' << c.class_a << ',' << c.class_b << ',' << to_string(c.mode)
        << ',';
    if (c.ok()) {
      out << format_double(c.mean_accuracy) << ',' << format_double(c.ci_halfwidth) << ','
          << c.runs.size() << ",";
    } else {
      std::string quoted = c.error;
      for (std::size_t p = 0; (p = quoted.find('"', p)) != std::string::npos; p += 2)
        quoted.insert(p, 1, '"');
      out << ",,0,\"" << quoted << '"';
    }
    out << '\n';
  }
  out << "# mean_improvement_pp," << format_double(report.mean_improvement) << '\n';
  return out.str();
}

void dump_sorted_activations(const TrainedModel& model, const Eigen::Ref<const MatrixXd>& test_x,
                             std::span<const int> test_y, Index image_index,
                             const std::filesystem::path& out_path) {
  if (test_x.cols() == 0) throw std::invalid_argument("dump_sorted_activations: empty test set");
  if (image_index < 0 || image_index >= test_x.cols())
    throw std::invalid_argument("dump_sorted_activations: image index out of range");

  std::optional<int> sim_label;
  if (model.shift_plan) sim_label = test_y[std::size_t(image_index)];
  auto [a0, a1] = activation_responses(model, test_x.col(image_index), sim_label);
  std::sort(a0.begin(), a0.end());
  std::sort(a1.begin(), a1.end());

  std::ofstream out(out_path);
  if (!out) throw FormatError("cannot open " + out_path.string() + " for writing");
  out << "network,sorted_index,activation\n";
  for (int k = 0; k < 2; ++k) {
    const VectorXd& a = (k == 0) ? a0 : a1;
    for (Index i = 0; i < a.size(); ++i) {
      char buf[48];
      const auto [end, ec] =
          std::to_chars(buf, buf + sizeof(buf), a[i], std::chars_format::scientific, 12);
      out << k << ',' << i << ',' << std::string_view(buf, std::size_t(end - buf)) << '\n';
    }
  }
  if (!out) throw FormatError("write failed for " + out_path.string());
}

}  // namespace heterofisher
