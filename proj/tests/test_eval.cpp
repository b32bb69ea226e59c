#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "softclt/error.hpp"
#include "softclt/eval.hpp"

using namespace softclt;
namespace fs = std::filesystem;

namespace {

Tensor rows(std::initializer_list<std::initializer_list<double>> r) { return Tensor::matrix(r); }

EncoderModel tiny(std::uint64_t seed = 1) {
  EncoderConfig c;
  c.hidden = 8;
  c.output_dims = 4;
  c.depth = 2;
  return EncoderModel(c, seed);
}

}  // namespace

TEST_CASE("task names") {
  CHECK(parse_task("classify") == EvalTask::Classify);
  CHECK(parse_task(task_name(EvalTask::Anomaly)) == EvalTask::Anomaly);
  CHECK_THROWS_AS(parse_task("forecast"), UsageError);
}

TEST_CASE("knn: a test point equal to a training point takes its label") {
  const Tensor train = rows({{0, 0}, {5, 5}, {9, 1}});
  const std::vector<int> labels{3, 7, 2};
  CHECK(knn_predict(train, labels, rows({{5, 5}}), 1) == std::vector<int>{7});
}

TEST_CASE("knn: k = N_tr returns the majority label") {
  const Tensor train = rows({{0, 0}, {1, 0}, {2, 0}, {3, 0}, {4, 0}});
  const std::vector<int> labels{1, 1, 1, 0, 0};
  const auto p = knn_predict(train, labels, rows({{4, 0}, {10, 0}, {-3, 0}}), 5);
  CHECK(p == std::vector<int>{1, 1, 1});
  CHECK_THROWS_AS(knn_predict(train, labels, rows({{0, 0}}), 6), UsageError);
}

TEST_CASE("knn: vote ties go to the nearest neighbour's label") {
  const Tensor train = rows({{0, 0}, {3, 0}});
  CHECK(knn_predict(train, {4, 9}, rows({{2, 0}}), 2) == std::vector<int>{9});
}

TEST_CASE("knn: parallel and serial agree") {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> g;
  Tensor train(Shape{40, 5}), test(Shape{25, 5});
  for (auto& v : train.raw()) v = g(rng);
  for (auto& v : test.raw()) v = g(rng);
  std::vector<int> labels(40);
  for (std::size_t i = 0; i < 40; ++i) labels[i] = static_cast<int>(i % 4);
  for (std::size_t k : {1u, 3u, 7u}) CHECK(knn_predict(train, labels, test, k) == knn_predict_serial(train, labels, test, k));
}

TEST_CASE("classify_probe: separated clusters are classified perfectly") {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> g(0.0, 0.3);
  Tensor train(Shape{20, 3}), test(Shape{10, 3});
  std::vector<int> tl(20), sl(10);
  for (std::size_t i = 0; i < 20; ++i) {
    tl[i] = static_cast<int>(i % 2);
    for (std::size_t c = 0; c < 3; ++c) train.at(i, c) = g(rng) + (tl[i] ? 10.0 : -10.0);
  }
  for (std::size_t i = 0; i < 10; ++i) {
    sl[i] = static_cast<int>(i % 2);
    for (std::size_t c = 0; c < 3; ++c) test.at(i, c) = g(rng) + (sl[i] ? 10.0 : -10.0);
  }
  const auto r = classify_probe(train, tl, test, sl, 1);
  CHECK(r.accuracy == 1.0);
  CHECK(r.items == 10);
  CHECK(r.per_class.at(0).support == 5);
  CHECK(r.per_class.at(1).correct == 5);
  CHECK(r.to_csv().find("accuracy,1") != std::string::npos);
}

TEST_CASE("encode_instances returns one row per series") {
  SyntheticSpec spec;
  spec.classes = default_families();
  spec.n_per_class = 2;
  const auto set = make_synthetic(spec);
  const Tensor r = encode_instances(tiny(), set);
  CHECK(r.shape() == Shape{6, 4});
  const Tensor one = instance_repr(encode(tiny(), set.values().reshaped({6, 64, 1})));
  CHECK(r == one);
}

TEST_CASE("anomaly scores are nonnegative and agree with the serial path") {
  SpikeSpec spec;
  spec.length = 40;
  spec.spike_index = 25;
  const auto s = make_spike_series(spec);
  const auto scores = anomaly_scores(tiny(), s.series);
  CHECK(scores.size() == 40);
  for (double v : scores) CHECK(v >= 0.0);
  CHECK(scores == anomaly_scores_serial(tiny(), s.series));
}

TEST_CASE("a constant encoder scores everything zero") {
  EncoderModel m = tiny();
  for (auto& p : m.params()) std::fill(p.value.raw().begin(), p.value.raw().end(), 0.0);
  const auto s = make_spike_series(SpikeSpec{32, 10, 6.0, 8.0, 0.05, 0});
  for (double v : anomaly_scores(m, s.series)) CHECK(v == 0.0);
}

TEST_CASE("thresholding") {
  const std::vector<double> equal(10, 0.4);
  const std::vector<int> truth{0, 0, 1, 0, 0, 0, 0, 0, 0, 0};
  const auto none = threshold_anomalies(equal, truth, 1.0);
  for (int l : none.labels) CHECK(l == 0);

  std::vector<double> sep(10, 0.1);
  sep[2] = 5.0;
  const auto perfect = threshold_anomalies(sep, truth, 1.0);
  CHECK(perfect.report.f1 == 1.0);
  CHECK(perfect.report.tp == 1);
  CHECK(perfect.report.tn == 9);

  CHECK_THROWS_AS(threshold_anomalies({}, {}, 1.0), DataError);
  CHECK_THROWS_AS(threshold_anomalies(sep, {0, 1}, 1.0), DataError);
}

TEST_CASE("point adjustment credits whole segments") {
  const std::vector<double> scores{0, 0, 0, 9, 0, 0, 0, 0};
  const std::vector<int> truth{0, 0, 1, 1, 1, 0, 0, 0};
  const auto plain = threshold_anomalies(scores, truth, 1.0);
  CHECK(plain.report.tp == 1);
  CHECK(plain.report.fn == 2);
  const auto adjusted = threshold_anomalies(scores, truth, 1.0, true);
  CHECK(adjusted.report.tp == 3);
  CHECK(adjusted.report.fn == 0);
  CHECK(adjusted.labels == truth);
}

TEST_CASE("tune_threshold keeps the first best c") {
  std::vector<double> scores(20, 0.0);
  for (std::size_t i = 0; i < 20; ++i) scores[i] = 0.01 * static_cast<double>(i % 3);
  scores[7] = 3.0;
  std::vector<int> truth(20, 0);
  truth[7] = 1;
  const auto best = tune_threshold(scores, truth, default_threshold_grid());
  CHECK(best.result.report.f1 == 1.0);
  for (double c : default_threshold_grid()) {
    if (c >= best.c) break;
    CHECK(threshold_anomalies(scores, truth, c).report.f1 < 1.0);
  }
  CHECK_THROWS_AS(tune_threshold(scores, truth, {}), UsageError);
}

TEST_CASE("spike series") {
  SpikeSpec spec;
  const auto s = make_spike_series(spec);
  CHECK(s.series.shape() == Shape{256, 1});
  CHECK(std::count(s.truth.begin(), s.truth.end(), 1) == 1);
  CHECK(s.truth[170] == 1);
  CHECK(make_spike_series(spec).series == s.series);
  spec.spike_index = 300;
  CHECK_THROWS_AS(make_spike_series(spec), UsageError);
}

TEST_CASE("reports render as text and CSV") {
  std::vector<double> sep(10, 0.1);
  sep[2] = 5.0;
  std::vector<int> truth(10, 0);
  truth[2] = 1;
  const auto r = threshold_anomalies(sep, truth, 1.0).report;
  CHECK(r.to_text().find("f1") != std::string::npos);
  const fs::path p = fs::temp_directory_path() / "softclt_report.csv";
  write_report(r, p);
  std::ifstream in(p);
  std::stringstream body;
  body << in.rdbuf();
  CHECK(body.str().find("f1,1") != std::string::npos);
}
