#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "softclt/config.hpp"

namespace softclt {

// Training split: the TSV at dataset.path, or the synthetic corpus.
TimeSeriesSet load_train_set(const EngineConfig& cfg);
// Held-out split: dataset.test_path, or a second synthetic draw with its own
// seed. A file-backed training set without a test path is a usage error.
TimeSeriesSet load_test_set(const EngineConfig& cfg);

struct DistanceLoad {
  DistanceMatrix raw;
  bool cache_hit = false;
};

// Raw pairwise distances. With a cache path, an existing file is loaded and
// checked against the configured metric and the set size; otherwise the
// matrix is computed and written there.
DistanceLoad distances_for(const EngineConfig& cfg, const TimeSeriesSet& set, const std::filesystem::path& cache);

// Normalized distances when the configured loss needs them, otherwise empty.
std::optional<DistanceMatrix> training_distances(const EngineConfig& cfg, const TimeSeriesSet& set);

enum class AblationAxis { Assignment, Alpha, Metric, Hierarchy };

std::string_view axis_name(AblationAxis a);
AblationAxis parse_axis(std::string_view name);

struct AblationRow {
  std::string axis;
  std::string setting;
  std::string instance;  // "hard" or the instance kernel / metric in use
  std::string temporal;  // "hard" or the temporal kernel in use
  double initial_loss = 0.0;
  double final_loss = 0.0;
  double accuracy = 0.0;
};

// One pretraining run plus kNN probe per grid point, on the configured corpus.
std::vector<AblationRow> run_ablation(AblationAxis axis, const EngineConfig& cfg);
void write_ablation_csv(const std::vector<AblationRow>& rows, const std::filesystem::path& path);

struct ProbeRun {
  PretrainResult trained;
  EvalReport report;
};

// Pretrain on the training split and probe on the held-out split.
ProbeRun pretrain_and_probe(const EngineConfig& cfg);

}  // namespace softclt
