#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <vector>

#include "softclt/assign.hpp"
#include "softclt/dataset.hpp"
#include "softclt/distance.hpp"
#include "softclt/encoder.hpp"
#include "softclt/loss.hpp"

namespace softclt {

struct TrainConfig {
  double lr = 0.001;
  std::size_t batch_size = 8;
  std::size_t iters = 200;
  std::uint64_t seed = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  MaskMode mask = MaskMode::Binomial;
  InstanceAssignConfig instance;
  TemporalAssignConfig temporal;
  LossOptions loss;

  void validate() const;
};

// Everything needed to continue a run bit-for-bit: all randomness is keyed by
// (seed, step), so no generator state beyond the counters is stored.
struct TrainState {
  EncoderModel model;
  std::vector<Tensor> adam_m;
  std::vector<Tensor> adam_v;
  std::uint64_t step = 0;     // batches consumed
  std::uint64_t updates = 0;  // optimizer steps taken (skipped batches excluded)
  std::uint64_t seed = 0;

  bool operator==(const TrainState&) const = default;
};

struct LogRow {
  std::uint64_t step = 0;
  bool skipped = false;
  LossBreakdown loss;
};

// Inputs of one optimization step, reproducible from (seed, step).
struct StepInputs {
  std::vector<std::size_t> indices;
  ViewPair views;
  MaskSpec mask_a;
  MaskSpec mask_b;
};

class Trainer {
 public:
  // `dist` may be null when the instance term is hard or lambda = 0; otherwise
  // it must cover `set` and outlive the trainer.
  Trainer(const TimeSeriesSet& set, const DistanceMatrix* dist, TrainConfig config, EncoderModel model);
  Trainer(const TimeSeriesSet& set, const DistanceMatrix* dist, TrainConfig config, TrainState state);

  // One batch. Batches of fewer than two series are skipped with a warning.
  // Throws NumericError if the loss is not finite.
  const LogRow& step();
  void run_until(std::uint64_t step);
  void run() { run_until(config_.iters); }

  StepInputs prepare_step(std::uint64_t step) const;
  std::vector<std::size_t> batch_indices(std::uint64_t step) const;

  const TrainState& state() const { return state_; }
  const EncoderModel& model() const { return state_.model; }
  const std::vector<LogRow>& log() const { return log_; }
  const TrainConfig& config() const { return config_; }

 private:
  void adam_update(const std::vector<Tensor>& grads);

  const TimeSeriesSet* set_;
  const DistanceMatrix* dist_;
  TrainConfig config_;
  TrainState state_;
  std::vector<LogRow> log_;
};

struct PretrainResult {
  EncoderModel model;
  std::vector<LogRow> log;
  TrainState state;
};

PretrainResult pretrain(const TimeSeriesSet& set, const DistanceMatrix* dist, const TrainConfig& config,
                        const EncoderConfig& encoder);

void save_checkpoint(const TrainState& state, const std::filesystem::path& path);
TrainState load_checkpoint(const std::filesystem::path& path);

// step, skipped, total, instance_term, temporal_term, then per level k the
// columns level{k}_instance and level{k}_temporal.
void write_log_csv(const std::vector<LogRow>& log, const std::filesystem::path& path);

}  // namespace softclt
