#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "softclt/dataset.hpp"
#include "softclt/encoder.hpp"
#include "softclt/tensor.hpp"

namespace softclt {

enum class EvalTask { Classify, Anomaly };

std::string_view task_name(EvalTask t);
EvalTask parse_task(std::string_view name);

struct ClassCounts {
  std::size_t support = 0;
  std::size_t correct = 0;
};

struct EvalReport {
  EvalTask task = EvalTask::Classify;
  std::size_t items = 0;
  double accuracy = 0.0;
  // Anomaly task only.
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
  double threshold = 0.0;
  std::map<int, ClassCounts> per_class;  // Classify task only
  nlohmann::json config;                 // echo of the settings that produced the report

  std::string to_text() const;
  std::string to_csv() const;  // metric,value rows
};

void write_report(const EvalReport& report, const std::filesystem::path& csv_path);

// Instance representations [N, M] of every series, each encoded at its own
// length and max-pooled over time.
Tensor encode_instances(const EncoderModel& model, const TimeSeriesSet& set);

// Euclidean k-nearest-neighbour vote. Tied votes go to the tied label whose
// member is nearest; equal distances are ordered by training index.
std::vector<int> knn_predict(const Tensor& train_reprs, const std::vector<int>& train_labels, const Tensor& test_reprs,
                             std::size_t k);
std::vector<int> knn_predict_serial(const Tensor& train_reprs, const std::vector<int>& train_labels,
                                    const Tensor& test_reprs, std::size_t k);

EvalReport classify_probe(const Tensor& train_reprs, const std::vector<int>& train_labels, const Tensor& test_reprs,
                          const std::vector<int>& test_labels, std::size_t k = 1);

// series: [L, D]. score_t is the L1 distance, at position t, between the
// unmasked encoding and the encoding with timestamp t masked.
std::vector<double> anomaly_scores(const EncoderModel& model, const Tensor& series);
std::vector<double> anomaly_scores_serial(const EncoderModel& model, const Tensor& series);

struct AnomalyResult {
  std::vector<int> labels;  // 1 = anomalous
  EvalReport report;
};

// Flags score > mean + c * stdev (population stdev).
// Point adjustment: a ground-truth segment with at least one flagged point
// counts as flagged in full.
AnomalyResult threshold_anomalies(const std::vector<double>& scores, const std::vector<int>& truth, double c,
                                  bool point_adjust = false);

struct ThresholdSearch {
  double c = 0.0;
  AnomalyResult result;
};

// Best F1 over the grid; the first c reaching the maximum wins.
ThresholdSearch tune_threshold(const std::vector<double>& scores, const std::vector<int>& truth,
                               const std::vector<double>& grid, bool point_adjust = false);
std::vector<double> default_threshold_grid();

struct SpikeSpec {
  std::size_t length = 256;
  std::size_t spike_index = 170;
  double amplitude = 6.0;
  double period = 32.0;
  double noise_std = 0.05;
  std::uint64_t seed = 0;

  bool operator==(const SpikeSpec&) const = default;
};

struct SpikeSeries {
  Tensor series;           // [L, 1]
  std::vector<int> truth;  // 1 at the spike
};

// A noisy sine with one additive spike.
SpikeSeries make_spike_series(const SpikeSpec& spec);

}  // namespace softclt
