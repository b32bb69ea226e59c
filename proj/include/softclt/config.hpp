#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include <json.hpp>

#include "softclt/assign.hpp"
#include "softclt/dataset.hpp"
#include "softclt/distance.hpp"
#include "softclt/encoder.hpp"
#include "softclt/eval.hpp"
#include "softclt/loss.hpp"
#include "softclt/train.hpp"

namespace softclt {

struct DatasetSection {
  std::string path;       // UCR-style TSV; empty selects the synthetic corpus
  std::string test_path;  // optional held-out split for evaluation
  bool znormalize = true;
  SyntheticSpec synthetic;  // classes default to default_families()

  bool operator==(const DatasetSection&) const = default;
};

struct DistanceSection {
  Metric metric = Metric::Dtw;
  DistanceParams params;
  std::string cache;  // distance matrix cache file; empty disables caching

  bool operator==(const DistanceSection&) const = default;
};

struct TrainSection {
  double lr = 0.001;
  std::size_t batch_size = 8;
  std::size_t iters = 200;
  std::uint64_t seed = 0;
  MaskMode mask = MaskMode::Binomial;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  bool operator==(const TrainSection&) const = default;
};

struct EvalSection {
  std::size_t k = 1;
  std::optional<double> anomaly_c;  // unset: pick c from the default grid by F1
  bool point_adjust = false;
  SpikeSpec spike;

  bool operator==(const EvalSection&) const = default;
};

// Whole-pipeline configuration. JSON layout:
//
//   dataset    { path, test_path, znormalize,
//                synthetic { n_per_class, length, noise_std, phase_jitter, seed,
//                            classes [ { shape, frequency } ] } }
//   distance   { metric, fastdtw_radius, dtw_band, tam_weights [adv, delay, phase], cache }
//   assignment { instance_kernel, tau_inst, alpha, sigma,
//                temporal_kernel, tau_temp, pool_kernel, neighbor_frac, gaussian_std, hierarchical }
//   loss       { lambda, temperature, soft_instance, soft_temporal }
//   train      { lr, batch_size, iters, seed, mask, beta1, beta2, eps }
//   encoder    { hidden, output_dims, depth, kernel_size }
//   eval       { k, anomaly_c, point_adjust, spike { length, index, amplitude, period, noise_std, seed } }
//
// Every key is optional; unknown keys are rejected.
struct EngineConfig {
  DatasetSection dataset;
  DistanceSection distance;
  InstanceAssignConfig instance;
  TemporalAssignConfig temporal;
  LossOptions loss;
  TrainSection train;
  EncoderConfig encoder;
  EvalSection eval;

  EngineConfig();

  void validate() const;
  TrainConfig train_config() const;

  bool operator==(const EngineConfig&) const = default;
};

EngineConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const EngineConfig& cfg);

EngineConfig load_config(const std::filesystem::path& path);
void save_config(const EngineConfig& cfg, const std::filesystem::path& path);

}  // namespace softclt
