#include "softclt/config.hpp"

#include <fstream>
#include <set>

#include "softclt/error.hpp"

namespace softclt {

using nlohmann::json;

namespace {

std::string_view wave_name(WaveShape w) {
  switch (w) {
    case WaveShape::Sine: return "sine";
    case WaveShape::Square: return "square";
    case WaveShape::Sawtooth: return "sawtooth";
  }
  return "?";
}

WaveShape parse_wave(std::string_view s) {
  if (s == "sine") return WaveShape::Sine;
  if (s == "square") return WaveShape::Square;
  if (s == "sawtooth") return WaveShape::Sawtooth;
  throw UsageError("unknown wave shape '" + std::string(s) + "'");
}

// Reads the keys of one JSON object and rejects whatever was not read.
class Section {
 public:
  Section(const json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) throw UsageError("config: '" + where_ + "' must be an object");
  }
  ~Section() noexcept(false) {
    if (std::uncaught_exceptions()) return;
    for (const auto& [key, _] : j_.items())
      if (!seen_.contains(key)) throw UsageError("config: unknown key '" + where_ + "." + key + "'");
  }

  template <typename T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception&) {
      throw UsageError("config: '" + where_ + "." + key + "' has the wrong type");
    }
  }

  template <typename T, typename Parse>
  void get_enum(const char* key, T& out, Parse parse) {
    std::string s;
    seen_.insert(key);
    if (!j_.contains(key)) return;
    get(key, s);
    out = parse(s);
  }

  const json* child(const char* key) {
    seen_.insert(key);
    return j_.contains(key) ? &j_.at(key) : nullptr;
  }

 private:
  const json& j_;
  std::string where_;
  std::set<std::string> seen_;
};

void read_synthetic(const json& j, SyntheticSpec& s) {
  Section sec(j, "dataset.synthetic");
  sec.get("n_per_class", s.n_per_class);
  sec.get("length", s.length);
  sec.get("noise_std", s.noise_std);
  sec.get("phase_jitter", s.phase_jitter);
  sec.get("seed", s.seed);
  if (const json* classes = sec.child("classes")) {
    if (!classes->is_array()) throw UsageError("config: 'dataset.synthetic.classes' must be an array");
    s.classes.clear();
    for (const auto& c : *classes) {
      ClassFamily f;
      Section cs(c, "dataset.synthetic.classes[]");
      cs.get_enum("shape", f.shape, parse_wave);
      cs.get("frequency", f.frequency);
      s.classes.push_back(f);
    }
  }
}

}  // namespace

EngineConfig::EngineConfig() { dataset.synthetic.classes = default_families(); }

void EngineConfig::validate() const {
  if (dataset.path.empty()) {
    if (dataset.synthetic.classes.empty()) throw UsageError("config: synthetic corpus needs at least one class");
    if (dataset.synthetic.n_per_class < 1) throw UsageError("config: n_per_class must be >= 1");
    if (dataset.synthetic.length < 8) throw UsageError("config: synthetic length must be >= 8");
  }
  if (!dataset.path.empty() && !dataset.test_path.empty() && dataset.path == dataset.test_path)
    throw UsageError("config: train and test paths are the same file");
  if (distance.params.fastdtw_radius < 1 && distance.metric == Metric::FastDtw)
    throw UsageError("config: fastdtw_radius must be >= 1");
  instance.validate();
  temporal.validate();
  loss.validate();
  encoder.validate();
  train_config().validate();
  if (eval.k < 1) throw UsageError("config: eval.k must be >= 1");
}

TrainConfig EngineConfig::train_config() const {
  TrainConfig t;
  t.lr = train.lr;
  t.batch_size = train.batch_size;
  t.iters = train.iters;
  t.seed = train.seed;
  t.mask = train.mask;
  t.beta1 = train.beta1;
  t.beta2 = train.beta2;
  t.eps = train.eps;
  t.instance = instance;
  t.temporal = temporal;
  t.loss = loss;
  return t;
}

EngineConfig config_from_json(const json& j) {
  EngineConfig c;
  Section root(j, "config");
  if (const json* d = root.child("dataset")) {
    Section s(*d, "dataset");
    s.get("path", c.dataset.path);
    s.get("test_path", c.dataset.test_path);
    s.get("znormalize", c.dataset.znormalize);
    if (const json* syn = s.child("synthetic")) read_synthetic(*syn, c.dataset.synthetic);
  }
  if (const json* d = root.child("distance")) {
    Section s(*d, "distance");
    s.get_enum("metric", c.distance.metric, parse_metric);
    s.get("fastdtw_radius", c.distance.params.fastdtw_radius);
    s.get("dtw_band", c.distance.params.dtw_band);
    s.get("cache", c.distance.cache);
    if (const json* w = s.child("tam_weights")) {
      if (!w->is_array() || w->size() != 3) throw UsageError("config: 'distance.tam_weights' must hold 3 numbers");
      try {
        c.distance.params.tam = {(*w)[0].get<double>(), (*w)[1].get<double>(), (*w)[2].get<double>()};
      } catch (const json::exception&) {
        throw UsageError("config: 'distance.tam_weights' must hold 3 numbers");
      }
    }
  }
  if (const json* d = root.child("assignment")) {
    Section s(*d, "assignment");
    s.get_enum("instance_kernel", c.instance.kernel, parse_instance_kernel);
    s.get("tau_inst", c.instance.tau);
    s.get("alpha", c.instance.alpha);
    s.get("sigma", c.instance.sigma);
    s.get_enum("temporal_kernel", c.temporal.kernel, parse_temporal_kernel);
    s.get("tau_temp", c.temporal.tau_base);
    s.get("pool_kernel", c.temporal.pool_kernel);
    s.get("neighbor_frac", c.temporal.neighbor_frac);
    s.get("gaussian_std", c.temporal.gaussian_std);
    s.get("hierarchical", c.temporal.hierarchical);
  }
  if (const json* d = root.child("loss")) {
    Section s(*d, "loss");
    s.get("lambda", c.loss.lambda);
    s.get("temperature", c.loss.temperature);
    s.get("soft_instance", c.loss.soft_instance);
    s.get("soft_temporal", c.loss.soft_temporal);
  }
  if (const json* d = root.child("train")) {
    Section s(*d, "train");
    s.get("lr", c.train.lr);
    s.get("batch_size", c.train.batch_size);
    s.get("iters", c.train.iters);
    s.get("seed", c.train.seed);
    s.get_enum("mask", c.train.mask, parse_mask_mode);
    s.get("beta1", c.train.beta1);
    s.get("beta2", c.train.beta2);
    s.get("eps", c.train.eps);
  }
  if (const json* d = root.child("encoder")) {
    Section s(*d, "encoder");
    s.get("hidden", c.encoder.hidden);
    s.get("output_dims", c.encoder.output_dims);
    s.get("depth", c.encoder.depth);
    s.get("kernel_size", c.encoder.kernel_size);
  }
  if (const json* d = root.child("eval")) {
    Section s(*d, "eval");
    s.get("k", c.eval.k);
    if (const json* ac = s.child("anomaly_c"); ac && !ac->is_null()) {
      if (!ac->is_number()) throw UsageError("config: 'eval.anomaly_c' must be a number or null");
      c.eval.anomaly_c = ac->get<double>();
    }
    s.get("point_adjust", c.eval.point_adjust);
    if (const json* sp = s.child("spike")) {
      Section ss(*sp, "eval.spike");
      ss.get("length", c.eval.spike.length);
      ss.get("index", c.eval.spike.spike_index);
      ss.get("amplitude", c.eval.spike.amplitude);
      ss.get("period", c.eval.spike.period);
      ss.get("noise_std", c.eval.spike.noise_std);
      ss.get("seed", c.eval.spike.seed);
    }
  }
  c.validate();
  return c;
}

json config_to_json(const EngineConfig& c) {
  json classes = json::array();
  for (const auto& f : c.dataset.synthetic.classes)
    classes.push_back({{"shape", wave_name(f.shape)}, {"frequency", f.frequency}});
  const auto& syn = c.dataset.synthetic;
  const auto& tam = c.distance.params.tam;
  const auto& sp = c.eval.spike;
  return {
      {"dataset",
       {{"path", c.dataset.path},
        {"test_path", c.dataset.test_path},
        {"znormalize", c.dataset.znormalize},
        {"synthetic",
         {{"n_per_class", syn.n_per_class},
          {"length", syn.length},
          {"noise_std", syn.noise_std},
          {"phase_jitter", syn.phase_jitter},
          {"seed", syn.seed},
          {"classes", classes}}}}},
      {"distance",
       {{"metric", metric_name(c.distance.metric)},
        {"fastdtw_radius", c.distance.params.fastdtw_radius},
        {"dtw_band", c.distance.params.dtw_band},
        {"tam_weights", {tam.advance, tam.delay, tam.phase}},
        {"cache", c.distance.cache}}},
      {"assignment",
       {{"instance_kernel", kernel_name(c.instance.kernel)},
        {"tau_inst", c.instance.tau},
        {"alpha", c.instance.alpha},
        {"sigma", c.instance.sigma},
        {"temporal_kernel", kernel_name(c.temporal.kernel)},
        {"tau_temp", c.temporal.tau_base},
        {"pool_kernel", c.temporal.pool_kernel},
        {"neighbor_frac", c.temporal.neighbor_frac},
        {"gaussian_std", c.temporal.gaussian_std},
        {"hierarchical", c.temporal.hierarchical}}},
      {"loss",
       {{"lambda", c.loss.lambda},
        {"temperature", c.loss.temperature},
        {"soft_instance", c.loss.soft_instance},
        {"soft_temporal", c.loss.soft_temporal}}},
      {"train",
       {{"lr", c.train.lr},
        {"batch_size", c.train.batch_size},
        {"iters", c.train.iters},
        {"seed", c.train.seed},
        {"mask", mask_name(c.train.mask)},
        {"beta1", c.train.beta1},
        {"beta2", c.train.beta2},
        {"eps", c.train.eps}}},
      {"encoder",
       {{"hidden", c.encoder.hidden},
        {"output_dims", c.encoder.output_dims},
        {"depth", c.encoder.depth},
        {"kernel_size", c.encoder.kernel_size}}},
      {"eval",
       {{"k", c.eval.k},
        {"anomaly_c", c.eval.anomaly_c ? json(*c.eval.anomaly_c) : json(nullptr)},
        {"point_adjust", c.eval.point_adjust},
        {"spike",
         {{"length", sp.length},
          {"index", sp.spike_index},
          {"amplitude", sp.amplitude},
          {"period", sp.period},
          {"noise_std", sp.noise_std},
          {"seed", sp.seed}}}}},
  };
}

EngineConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw UsageError("config " + path.string() + " is not valid JSON: " + e.what());
  }
  return config_from_json(j);
}

void save_config(const EngineConfig& cfg, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << config_to_json(cfg).dump(2) << '\n';
}

}  // namespace softclt
