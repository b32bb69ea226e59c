#include "softclt/pipeline.hpp"

#include <fstream>
#include <sstream>

#include "softclt/error.hpp"
#include "softclt/log.hpp"
#include "softclt/rng.hpp"

namespace softclt {

namespace {

TimeSeriesSet prepare(TimeSeriesSet set, const EngineConfig& cfg) {
  return cfg.dataset.znormalize ? znormalize(set) : set;
}

const std::vector<int>& labels_of(const TimeSeriesSet& set, const char* which) {
  if (!set.labels()) throw DataError(std::string(which) + " set has no labels");
  return *set.labels();
}

}  // namespace

TimeSeriesSet load_train_set(const EngineConfig& cfg) {
  if (!cfg.dataset.path.empty()) return prepare(load_ucr_tsv(cfg.dataset.path), cfg);
  return prepare(make_synthetic(cfg.dataset.synthetic), cfg);
}

TimeSeriesSet load_test_set(const EngineConfig& cfg) {
  if (!cfg.dataset.test_path.empty()) return prepare(load_ucr_tsv(cfg.dataset.test_path), cfg);
  if (!cfg.dataset.path.empty()) throw UsageError("evaluation on a file dataset needs dataset.test_path");
  SyntheticSpec spec = cfg.dataset.synthetic;
  spec.seed = derive_seed(spec.seed, "test-split");
  return prepare(make_synthetic(spec), cfg);
}

DistanceLoad distances_for(const EngineConfig& cfg, const TimeSeriesSet& set, const std::filesystem::path& cache) {
  const Metric metric = cfg.distance.metric;
  if (!cache.empty() && std::filesystem::exists(cache)) {
    DistanceMatrix m = load_matrix(cache);
    if (m.metric() != metric)
      throw DataError("cache " + cache.string() + " holds " + std::string(metric_name(m.metric())) +
                      " distances, config asks for " + std::string(metric_name(metric)));
    if (m.size() != set.size())
      throw DataError("cache " + cache.string() + " covers " + std::to_string(m.size()) + " series, data has " +
                      std::to_string(set.size()));
    if (m.normalized()) throw DataError("cache " + cache.string() + " holds normalized distances");
    return {std::move(m), true};
  }
  DistanceMatrix m = pairwise_raw(set, metric, cfg.distance.params);
  if (!cache.empty()) save_matrix(m, cache);
  return {std::move(m), false};
}

std::optional<DistanceMatrix> training_distances(const EngineConfig& cfg, const TimeSeriesSet& set) {
  if (!(cfg.loss.soft_instance && cfg.loss.lambda > 0.0)) return std::nullopt;
  return minmax_normalize(distances_for(cfg, set, cfg.distance.cache).raw);
}

std::string_view axis_name(AblationAxis a) {
  switch (a) {
    case AblationAxis::Assignment: return "assignment";
    case AblationAxis::Alpha: return "alpha";
    case AblationAxis::Metric: return "metric";
    case AblationAxis::Hierarchy: return "hierarchy";
  }
  return "?";
}

AblationAxis parse_axis(std::string_view name) {
  if (name == "assignment") return AblationAxis::Assignment;
  if (name == "alpha") return AblationAxis::Alpha;
  if (name == "metric") return AblationAxis::Metric;
  if (name == "hierarchy") return AblationAxis::Hierarchy;
  throw UsageError("unknown ablation axis '" + std::string(name) +
                   "' (expected assignment, alpha, metric or hierarchy)");
}

ProbeRun pretrain_and_probe(const EngineConfig& cfg) {
  const TimeSeriesSet train = load_train_set(cfg);
  const TimeSeriesSet test = load_test_set(cfg);
  const auto dist = training_distances(cfg, train);
  ProbeRun run{pretrain(train, dist ? &*dist : nullptr, cfg.train_config(), cfg.encoder), {}};
  run.report = classify_probe(encode_instances(run.trained.model, train), labels_of(train, "training"),
                              encode_instances(run.trained.model, test), labels_of(test, "test"), cfg.eval.k);
  run.report.config = config_to_json(cfg);
  return run;
}

namespace {

AblationRow ablation_row(AblationAxis axis, std::string setting, const EngineConfig& cfg) {
  const ProbeRun run = pretrain_and_probe(cfg);
  AblationRow row;
  row.axis = axis_name(axis);
  row.setting = std::move(setting);
  row.instance = cfg.loss.soft_instance
                     ? std::string(kernel_name(cfg.instance.kernel)) + "/" + std::string(metric_name(cfg.distance.metric))
                     : "hard";
  row.temporal = cfg.loss.soft_temporal ? std::string(kernel_name(cfg.temporal.kernel)) : "hard";
  bool first = true;
  for (const auto& r : run.trained.log) {
    if (r.skipped) continue;
    if (first) row.initial_loss = r.loss.total;
    first = false;
    row.final_loss = r.loss.total;
  }
  row.accuracy = run.report.accuracy;
  log::info("ablation " + row.axis + " " + row.setting + ": accuracy " + std::to_string(row.accuracy));
  return row;
}

}  // namespace

std::vector<AblationRow> run_ablation(AblationAxis axis, const EngineConfig& cfg) {
  std::vector<AblationRow> rows;
  EngineConfig base = cfg;
  base.distance.cache.clear();
  switch (axis) {
    case AblationAxis::Assignment: {
      for (auto k : {TemporalKernel::Neighbor, TemporalKernel::Linear, TemporalKernel::Gaussian,
                     TemporalKernel::Sigmoid}) {
        EngineConfig c = base;
        c.loss.soft_instance = false;
        c.loss.soft_temporal = true;
        c.temporal.kernel = k;
        rows.push_back(ablation_row(axis, "temporal:" + std::string(kernel_name(k)), c));
      }
      for (auto k : {InstanceKernel::NoKernel, InstanceKernel::Gaussian, InstanceKernel::Laplacian,
                     InstanceKernel::Sigmoid}) {
        EngineConfig c = base;
        c.loss.soft_instance = true;
        c.loss.soft_temporal = false;
        c.instance.kernel = k;
        rows.push_back(ablation_row(axis, "instance:" + std::string(kernel_name(k)), c));
      }
      break;
    }
    case AblationAxis::Alpha:
      for (double a : {0.25, 0.5, 0.75, 1.0}) {
        EngineConfig c = base;
        c.loss.soft_instance = true;
        c.loss.soft_temporal = false;
        c.instance.alpha = a;
        std::ostringstream s;
        s << "alpha=" << a;
        rows.push_back(ablation_row(axis, s.str(), c));
      }
      break;
    case AblationAxis::Metric:
      for (auto m : {Metric::Cosine, Metric::Euclidean, Metric::Dtw, Metric::Tam}) {
        EngineConfig c = base;
        c.loss.soft_instance = true;
        c.loss.soft_temporal = true;
        c.distance.metric = m;
        rows.push_back(ablation_row(axis, "metric=" + std::string(metric_name(m)), c));
      }
      break;
    case AblationAxis::Hierarchy:
      for (bool h : {false, true}) {
        EngineConfig c = base;
        c.loss.soft_instance = false;
        c.loss.soft_temporal = true;
        c.temporal.hierarchical = h;
        rows.push_back(ablation_row(axis, h ? "hierarchical" : "constant", c));
      }
      break;
  }
  return rows;
}

void write_ablation_csv(const std::vector<AblationRow>& rows, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out.precision(17);
  out << "axis,setting,instance,temporal,initial_loss,final_loss,accuracy\n";
  for (const auto& r : rows)
    out << r.axis << ',' << r.setting << ',' << r.instance << ',' << r.temporal << ',' << r.initial_loss << ','
        << r.final_loss << ',' << r.accuracy << '\n';
  if (!out) throw DataError("failed writing " + path.string());
}

}  // namespace softclt
