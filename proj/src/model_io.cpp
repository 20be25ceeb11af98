#include "heterofisher/model_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>

namespace heterofisher {

static_assert(std::endian::native == std::endian::little,
              "model files are defined little-endian; add byte swaps for this platform");

namespace {

constexpr char kMagic[5] = {'H', 'F', 'S', 'H', '1'};
constexpr std::uint32_t kVersion = 1;

class Writer {
 public:
  explicit Writer(const std::filesystem::path& path) : out_(path, std::ios::binary) {
    if (!out_) throw FormatError("cannot open " + path.string() + " for writing");
  }
  template <typename T>
  void put(const T& v) {
    static_assert(std::is_trivially_copyable_v<T>);
    out_.write(reinterpret_cast<const char*>(&v), sizeof(T));
  }
  void put_bytes(const void* p, std::size_t n) { out_.write(static_cast<const char*>(p), std::streamsize(n)); }
  void put_string(const std::string& s) {
    put<std::uint32_t>(std::uint32_t(s.size()));
    put_bytes(s.data(), s.size());
  }
  void put_vector(const VectorXd& v) {
    put<std::int64_t>(v.size());
    put_bytes(v.data(), std::size_t(v.size()) * sizeof(double));
  }
  void put_index_vector(const std::vector<Index>& v) {
    put<std::int64_t>(std::int64_t(v.size()));
    for (Index i : v) put<std::int64_t>(i);
  }
  bool good() const { return bool(out_); }

 private:
  std::ofstream out_;
};

class Reader {
 public:
  explicit Reader(const std::filesystem::path& path) : in_(path, std::ios::binary), path_(path.string()) {
    if (!in_) throw FormatError("cannot open " + path_);
  }
  template <typename T>
  T get() {
    static_assert(std::is_trivially_copyable_v<T>);
    T v;
    in_.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in_) throw FormatError("truncated model file " + path_);
    return v;
  }
  void get_bytes(void* p, std::size_t n) {
    in_.read(static_cast<char*>(p), std::streamsize(n));
    if (!in_) throw FormatError("truncated model file " + path_);
  }
  std::string get_string() {
    const auto n = get<std::uint32_t>();
    std::string s(n, '\0');
    get_bytes(s.data(), n);
    return s;
  }
  VectorXd get_vector() {
    const auto n = get<std::int64_t>();
    if (n < 0) throw FormatError("negative vector length in " + path_);
    VectorXd v(n);
    get_bytes(v.data(), std::size_t(n) * sizeof(double));
    return v;
  }
  std::vector<Index> get_index_vector() {
    const auto n = get<std::int64_t>();
    if (n < 0) throw FormatError("negative index-vector length in " + path_);
    std::vector<Index> v(static_cast<std::size_t>(n));
    for (auto& i : v) i = Index(get<std::int64_t>());
    return v;
  }

 private:
  std::ifstream in_;
  std::string path_;
};

}  // namespace

void save_model(const TrainedModel& model, const std::filesystem::path& path) {
  Writer w(path);
  w.put_bytes(kMagic, sizeof(kMagic));
  w.put(kVersion);

  w.put<std::int64_t>(model.config.nodes);
  w.put<std::int64_t>(model.config.top_n);
  w.put<std::int64_t>(model.input_dim());
  w.put<std::uint64_t>(model.config.seed);
  w.put<std::uint64_t>(model.config.sim_seed);
  w.put<std::uint8_t>(model.config.criterion == Criterion::kFisher ? 1 : 0);
  w.put<std::uint8_t>(model.config.delta_mu_sim ? 1 : 0);
  w.put(model.prior0);
  w.put(model.prior1);

  w.put<std::uint32_t>(std::uint32_t(model.metadata.size()));
  for (const auto& [key, value] : model.metadata) {
    w.put_string(key);
    w.put_string(value);
  }

  const Index m = model.config.nodes;
  for (Index i = 0; i < m; ++i) {
    for (const auto* acts : {&model.activations0, &model.activations1}) {
      const ActivationFunctiond& f = (*acts)[std::size_t(i)];
      w.put_vector(f.centers);
      w.put(f.bandwidth);
    }
    for (const auto* stats : {&model.stats0, &model.stats1}) {
      const ClassStatsd& s = (*stats)[std::size_t(i)];
      w.put(s.mu);
      w.put(s.sigma);
    }
    const NodeDivergenced& d = model.divergences[std::size_t(i)];
    w.put(d.fisher);
    w.put(d.threshold_0);
    w.put(d.threshold_1);
    w.put(d.div_0);
    w.put(d.div_1);
  }

  w.put_index_vector(model.ranking0.order);
  w.put_index_vector(model.ranking1.order);

  w.put<std::uint8_t>(model.shift_plan ? 1 : 0);
  if (model.shift_plan) {
    w.put<std::uint64_t>(model.shift_plan->sim_seed);
    w.put_vector(model.shift_plan->deltas);
    w.put_vector(model.shift_plan->shifts);
  }
  if (!w.good()) throw FormatError("write failed for " + path.string());
}

TrainedModel load_model(const std::filesystem::path& path) {
  Reader r(path);
  char magic[5];
  r.get_bytes(magic, sizeof(magic));
  if (std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw FormatError(path.string() + " is not a HFSH1 model file");
  const auto version = r.get<std::uint32_t>();
  if (version != kVersion)
    throw FormatError("unsupported model version " + std::to_string(version));

  TrainedModel model;
  model.config.nodes = Index(r.get<std::int64_t>());
  model.config.top_n = Index(r.get<std::int64_t>());
  const Index input_dim = Index(r.get<std::int64_t>());
  model.config.seed = r.get<std::uint64_t>();
  model.config.sim_seed = r.get<std::uint64_t>();
  model.config.criterion = r.get<std::uint8_t>() ? Criterion::kFisher : Criterion::kExtended;
  model.config.delta_mu_sim = r.get<std::uint8_t>() != 0;
  model.prior0 = r.get<double>();
  model.prior1 = r.get<double>();

  const auto n_meta = r.get<std::uint32_t>();
  for (std::uint32_t i = 0; i < n_meta; ++i) {
    std::string key = r.get_string();
    model.metadata[key] = r.get_string();
  }

  const Index m = model.config.nodes;
  model.activations0.resize(std::size_t(m));
  model.activations1.resize(std::size_t(m));
  model.stats0.resize(std::size_t(m));
  model.stats1.resize(std::size_t(m));
  model.divergences.resize(std::size_t(m));
  for (Index i = 0; i < m; ++i) {
    for (auto* acts : {&model.activations0, &model.activations1}) {
      ActivationFunctiond& f = (*acts)[std::size_t(i)];
      f.centers = r.get_vector();
      f.bandwidth = r.get<double>();
      f.node_index = i;
      f.class_label = (acts == &model.activations1) ? 1 : 0;
    }
    for (auto* stats : {&model.stats0, &model.stats1}) {
      ClassStatsd& s = *&(*stats)[std::size_t(i)];
      s.mu = r.get<double>();
      s.sigma = r.get<double>();
      s.prior = (stats == &model.stats1) ? model.prior1 : model.prior0;
    }
    NodeDivergenced& d = model.divergences[std::size_t(i)];
    d.fisher = r.get<double>();
    d.threshold_0 = r.get<double>();
    d.threshold_1 = r.get<double>();
    d.div_0 = r.get<double>();
    d.div_1 = r.get<double>();
  }

  model.ranking0.order = r.get_index_vector();
  model.ranking0.top_n = model.config.top_n;
  model.ranking1.order = r.get_index_vector();
  model.ranking1.top_n = model.config.top_n;

  if (r.get<std::uint8_t>()) {
    MeanShiftPlan plan;
    plan.sim_seed = r.get<std::uint64_t>();
    plan.deltas = r.get_vector();
    plan.shifts = r.get_vector();
    model.shift_plan = std::move(plan);
  }

  model.weights = generate_weights(model.config.seed, model.config.nodes, input_dim);
  return model;
}

}  // namespace heterofisher
