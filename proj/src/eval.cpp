#include "softclt/eval.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include "softclt/error.hpp"
#include "softclt/rng.hpp"

namespace softclt {

std::string_view task_name(EvalTask t) { return t == EvalTask::Classify ? "classify" : "anomaly"; }

EvalTask parse_task(std::string_view name) {
  if (name == "classify") return EvalTask::Classify;
  if (name == "anomaly") return EvalTask::Anomaly;
  throw UsageError("unknown task '" + std::string(name) + "' (expected classify or anomaly)");
}

std::string EvalReport::to_text() const {
  std::ostringstream s;
  s.precision(6);
  s << "task: " << task_name(task) << "\nitems: " << items << '\n';
  if (task == EvalTask::Classify) {
    s << "accuracy: " << accuracy << '\n';
    for (const auto& [label, c] : per_class)
      s << "  class " << label << ": " << c.correct << "/" << c.support << " correct\n";
  } else {
    s << "threshold: " << threshold << "\nprecision: " << precision << "\nrecall: " << recall << "\nf1: " << f1
      << "\ntp " << tp << "  fp " << fp << "  fn " << fn << "  tn " << tn << '\n';
  }
  if (!config.is_null()) s << "config: " << config.dump() << '\n';
  return s.str();
}

std::string EvalReport::to_csv() const {
  std::ostringstream s;
  s.precision(17);
  s << "metric,value\ntask," << task_name(task) << "\nitems," << items << '\n';
  if (task == EvalTask::Classify) {
    s << "accuracy," << accuracy << '\n';
    for (const auto& [label, c] : per_class)
      s << "class_" << label << "_support," << c.support << "\nclass_" << label << "_correct," << c.correct << '\n';
  } else {
    s << "threshold," << threshold << "\nprecision," << precision << "\nrecall," << recall << "\nf1," << f1
      << "\ntp," << tp << "\nfp," << fp << "\nfn," << fn << "\ntn," << tn << '\n';
  }
  return s.str();
}

void write_report(const EvalReport& report, const std::filesystem::path& csv_path) {
  std::ofstream out(csv_path);
  if (!out) throw DataError("cannot write " + csv_path.string());
  out << report.to_csv();
  if (!out) throw DataError("failed writing " + csv_path.string());
}

Tensor encode_instances(const EncoderModel& model, const TimeSeriesSet& set) {
  if (set.dims() != model.config().input_dims)
    throw ShapeError("model expects " + std::to_string(model.config().input_dims) + " channels, data has " +
                     std::to_string(set.dims()));
  const std::size_t N = set.size(), M = model.config().output_dims, D = set.dims();
  Tensor out(Shape{N, M});
  std::exception_ptr err;
#pragma omp parallel for schedule(dynamic, 1)
  for (std::size_t i = 0; i < N; ++i) {
    try {
      const SeriesView s = set.series(i);
      Tensor x(Shape{1, s.length, D}, std::vector<double>(s.values.begin(), s.values.end()));
      const Tensor r = instance_repr(encode(model, x));
      for (std::size_t c = 0; c < M; ++c) out.at(i, c) = r.at(0, c);
    } catch (...) {
#pragma omp critical
      if (!err) err = std::current_exception();
    }
  }
  if (err) std::rethrow_exception(err);
  return out;
}

namespace {

void check_probe_inputs(const Tensor& train, const std::vector<int>& labels, const Tensor& test, std::size_t k) {
  if (train.rank() != 2 || test.rank() != 2 || train.dim(1) != test.dim(1))
    throw ShapeError("probe expects [N, M] representations of equal width");
  if (labels.size() != train.dim(0)) throw ShapeError("one training label per representation is required");
  if (labels.empty()) throw DataError("probe needs at least one training item");
  if (k < 1) throw UsageError("k must be >= 1");
  if (k > train.dim(0))
    throw UsageError("k = " + std::to_string(k) + " exceeds the " + std::to_string(train.dim(0)) + " training items");
}

int knn_one(const Tensor& train, const std::vector<int>& labels, const double* q, std::size_t k) {
  const std::size_t N = train.dim(0), M = train.dim(1);
  std::vector<std::pair<double, std::size_t>> d(N);
  for (std::size_t i = 0; i < N; ++i) {
    double acc = 0.0;
    for (std::size_t c = 0; c < M; ++c) {
      const double diff = train.at(i, c) - q[c];
      acc += diff * diff;
    }
    d[i] = {acc, i};
  }
  std::partial_sort(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(k), d.end());
  std::map<int, std::size_t> votes;
  std::size_t best = 0;
  for (std::size_t j = 0; j < k; ++j) best = std::max(best, ++votes[labels[d[j].second]]);
  for (std::size_t j = 0; j < k; ++j)
    if (votes[labels[d[j].second]] == best) return labels[d[j].second];
  return labels[d[0].second];
}

}  // namespace

std::vector<int> knn_predict(const Tensor& train_reprs, const std::vector<int>& train_labels, const Tensor& test_reprs,
                             std::size_t k) {
  check_probe_inputs(train_reprs, train_labels, test_reprs, k);
  const std::size_t Q = test_reprs.dim(0), M = test_reprs.dim(1);
  std::vector<int> out(Q);
#pragma omp parallel for schedule(static)
  for (std::size_t q = 0; q < Q; ++q) out[q] = knn_one(train_reprs, train_labels, test_reprs.data().data() + q * M, k);
  return out;
}

std::vector<int> knn_predict_serial(const Tensor& train_reprs, const std::vector<int>& train_labels,
                                    const Tensor& test_reprs, std::size_t k) {
  check_probe_inputs(train_reprs, train_labels, test_reprs, k);
  const std::size_t Q = test_reprs.dim(0), M = test_reprs.dim(1);
  std::vector<int> out(Q);
  for (std::size_t q = 0; q < Q; ++q) out[q] = knn_one(train_reprs, train_labels, test_reprs.data().data() + q * M, k);
  return out;
}

EvalReport classify_probe(const Tensor& train_reprs, const std::vector<int>& train_labels, const Tensor& test_reprs,
                          const std::vector<int>& test_labels, std::size_t k) {
  if (test_labels.empty()) throw DataError("probe needs at least one test item");
  if (test_reprs.rank() != 2 || test_labels.size() != test_reprs.dim(0))
    throw ShapeError("one test label per representation is required");
  const auto pred = knn_predict(train_reprs, train_labels, test_reprs, k);
  EvalReport r;
  r.task = EvalTask::Classify;
  r.items = test_labels.size();
  std::size_t correct = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    auto& c = r.per_class[test_labels[i]];
    ++c.support;
    if (pred[i] == test_labels[i]) {
      ++c.correct;
      ++correct;
    }
  }
  r.accuracy = static_cast<double>(correct) / static_cast<double>(r.items);
  r.config = {{"probe", "knn"}, {"k", k}};
  return r;
}

namespace {

Tensor as_batch(const EncoderModel& model, const Tensor& series) {
  if (series.rank() != 2 || series.dim(1) != model.config().input_dims)
    throw ShapeError("anomaly scoring expects [L, " + std::to_string(model.config().input_dims) + "], got " +
                     shape_str(series.shape()));
  if (series.dim(0) < 1) throw DataError("anomaly scoring needs a nonempty series");
  return series.reshaped(Shape{1, series.dim(0), series.dim(1)});
}

double score_at(const EncoderModel& model, const Tensor& x, const Tensor& full, std::size_t t) {
  MaskSpec mask;
  mask.mode = MaskMode::LastPoint;
  mask.point = t;
  const Tensor masked = encode(model, x, mask);
  const std::size_t M = full.dim(2);
  double s = 0.0;
  for (std::size_t c = 0; c < M; ++c) s += std::abs(full.at(0, t, c) - masked.at(0, t, c));
  return s;
}

}  // namespace

std::vector<double> anomaly_scores(const EncoderModel& model, const Tensor& series) {
  const Tensor x = as_batch(model, series);
  const Tensor full = encode(model, x);
  const std::size_t L = x.dim(1);
  std::vector<double> out(L);
  std::exception_ptr err;
#pragma omp parallel for schedule(dynamic, 4)
  for (std::size_t t = 0; t < L; ++t) {
    try {
      out[t] = score_at(model, x, full, t);
    } catch (...) {
#pragma omp critical
      if (!err) err = std::current_exception();
    }
  }
  if (err) std::rethrow_exception(err);
  return out;
}

std::vector<double> anomaly_scores_serial(const EncoderModel& model, const Tensor& series) {
  const Tensor x = as_batch(model, series);
  const Tensor full = encode(model, x);
  std::vector<double> out(x.dim(1));
  for (std::size_t t = 0; t < out.size(); ++t) out[t] = score_at(model, x, full, t);
  return out;
}

AnomalyResult threshold_anomalies(const std::vector<double>& scores, const std::vector<int>& truth, double c,
                                  bool point_adjust) {
  if (scores.empty()) throw DataError("no anomaly scores to threshold");
  if (truth.size() != scores.size())
    throw ShapeError("got " + std::to_string(truth.size()) + " ground-truth labels for " +
                     std::to_string(scores.size()) + " scores");
  const double n = static_cast<double>(scores.size());
  double mean = 0.0;
  for (double s : scores) mean += s;
  mean /= n;
  double var = 0.0;
  for (double s : scores) var += (s - mean) * (s - mean);
  const double sd = std::sqrt(var / n);

  AnomalyResult out;
  auto& r = out.report;
  r.task = EvalTask::Anomaly;
  r.items = scores.size();
  r.threshold = mean + c * sd;
  out.labels.resize(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) out.labels[i] = scores[i] > r.threshold ? 1 : 0;
  if (point_adjust) {
    for (std::size_t lo = 0; lo < truth.size();) {
      if (!truth[lo]) {
        ++lo;
        continue;
      }
      std::size_t hi = lo;
      bool hit = false;
      for (; hi < truth.size() && truth[hi]; ++hi) hit = hit || out.labels[hi];
      if (hit) std::fill(out.labels.begin() + static_cast<std::ptrdiff_t>(lo),
                         out.labels.begin() + static_cast<std::ptrdiff_t>(hi), 1);
      lo = hi;
    }
  }
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const int p = out.labels[i];
    const bool t = truth[i] != 0;
    if (p && t) ++r.tp;
    else if (p) ++r.fp;
    else if (t) ++r.fn;
    else ++r.tn;
  }
  r.precision = r.tp + r.fp ? static_cast<double>(r.tp) / static_cast<double>(r.tp + r.fp) : 0.0;
  r.recall = r.tp + r.fn ? static_cast<double>(r.tp) / static_cast<double>(r.tp + r.fn) : 0.0;
  r.f1 = r.precision + r.recall > 0.0 ? 2.0 * r.precision * r.recall / (r.precision + r.recall) : 0.0;
  r.accuracy = static_cast<double>(r.tp + r.tn) / n;
  r.config = {{"c", c}, {"point_adjust", point_adjust}};
  return out;
}

ThresholdSearch tune_threshold(const std::vector<double>& scores, const std::vector<int>& truth,
                               const std::vector<double>& grid, bool point_adjust) {
  if (grid.empty()) throw UsageError("threshold grid is empty");
  ThresholdSearch best;
  bool first = true;
  for (double c : grid) {
    auto r = threshold_anomalies(scores, truth, c, point_adjust);
    if (first || r.report.f1 > best.result.report.f1) {
      best = {c, std::move(r)};
      first = false;
    }
  }
  return best;
}

std::vector<double> default_threshold_grid() {
  std::vector<double> g;
  for (int i = 0; i <= 80; ++i) g.push_back(0.1 * i);
  return g;
}

SpikeSeries make_spike_series(const SpikeSpec& spec) {
  if (spec.length < 2) throw UsageError("spike series needs length >= 2");
  if (spec.spike_index >= spec.length) throw UsageError("spike index outside the series");
  if (!(spec.period > 0.0)) throw UsageError("spike series period must be > 0");
  SpikeSeries out;
  out.series = Tensor(Shape{spec.length, 1});
  out.truth.assign(spec.length, 0);
  Rng rng(spec.seed, "spike-series");
  std::normal_distribution<double> noise(0.0, 1.0);
  for (std::size_t t = 0; t < spec.length; ++t) {
    double v = std::sin(2.0 * std::numbers::pi * static_cast<double>(t) / spec.period);
    if (spec.noise_std > 0.0) v += spec.noise_std * noise(rng);
    out.series.at(t, 0) = v;
  }
  out.series.at(spec.spike_index, 0) += spec.amplitude;
  out.truth[spec.spike_index] = 1;
  return out;
}

}  // namespace softclt
