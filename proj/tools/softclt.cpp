#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "softclt/blob_io.hpp"
#include "softclt/config.hpp"
#include "softclt/error.hpp"
#include "softclt/eval.hpp"
#include "softclt/pipeline.hpp"
#include "softclt/train.hpp"

using namespace softclt;

namespace {

enum Exit { kOk = 0, kUsage = 1, kData = 2, kNumeric = 3 };

struct Overrides {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<double> lambda;
  std::optional<std::size_t> iters;
  std::optional<double> lr;
  std::optional<std::size_t> batch_size;
  std::optional<std::string> metric;
  std::optional<double> alpha;
  std::optional<double> tau_inst;
  std::optional<double> tau_temp;
  std::optional<std::string> data;
  std::optional<std::string> test_data;
  std::optional<std::string> cache;
  std::optional<std::size_t> k;
  std::optional<double> anomaly_c;
  bool hard_instance = false;
  bool hard_temporal = false;
  bool point_adjust = false;
};

void add_common(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config,-c", o.config, "JSON config file");
  cmd->add_option("--seed", o.seed, "random seed");
  cmd->add_option("--lambda", o.lambda, "weight of the instance-wise term");
  cmd->add_option("--iters", o.iters, "training iterations");
  cmd->add_option("--lr", o.lr, "learning rate");
  cmd->add_option("--batch-size", o.batch_size, "batch size");
  cmd->add_option("--metric", o.metric, "COS, EUC, DTW, FASTDTW or TAM");
  cmd->add_option("--alpha", o.alpha, "upper bound of instance-wise weights");
  cmd->add_option("--tau-inst", o.tau_inst, "instance-wise sharpness");
  cmd->add_option("--tau-temp", o.tau_temp, "temporal sharpness at level 0");
  cmd->add_option("--data", o.data, "training TSV (default: synthetic corpus)");
  cmd->add_option("--test-data", o.test_data, "held-out TSV");
  cmd->add_option("--cache", o.cache, "distance cache file");
  cmd->add_option("--k", o.k, "neighbours of the kNN probe");
  cmd->add_option("--anomaly-c", o.anomaly_c, "anomaly threshold multiplier (default: tuned)");
  cmd->add_flag("--hard-instance", o.hard_instance, "hard instance-wise contrast");
  cmd->add_flag("--hard-temporal", o.hard_temporal, "hard temporal contrast");
  cmd->add_flag("--point-adjust", o.point_adjust, "count a truth segment as found when any point in it is flagged");
}

EngineConfig resolve(const Overrides& o) {
  EngineConfig c = o.config.empty() ? EngineConfig{} : load_config(o.config);
  if (o.seed) c.train.seed = *o.seed;
  if (o.lambda) c.loss.lambda = *o.lambda;
  if (o.iters) c.train.iters = *o.iters;
  if (o.lr) c.train.lr = *o.lr;
  if (o.batch_size) c.train.batch_size = *o.batch_size;
  if (o.metric) c.distance.metric = parse_metric(*o.metric);
  if (o.alpha) c.instance.alpha = *o.alpha;
  if (o.tau_inst) c.instance.tau = *o.tau_inst;
  if (o.tau_temp) c.temporal.tau_base = *o.tau_temp;
  if (o.data) c.dataset.path = *o.data;
  if (o.test_data) c.dataset.test_path = *o.test_data;
  if (o.cache) c.distance.cache = *o.cache;
  if (o.k) c.eval.k = *o.k;
  if (o.anomaly_c) c.eval.anomaly_c = *o.anomaly_c;
  if (o.hard_instance) c.loss.soft_instance = false;
  if (o.hard_temporal) c.loss.soft_temporal = false;
  if (o.point_adjust) c.eval.point_adjust = true;
  c.validate();
  return c;
}

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

int cmd_config(const Overrides& o) {
  std::cout << config_to_json(resolve(o)).dump(2) << '\n';
  return kOk;
}

int cmd_distances(const Overrides& o, const std::string& out, const std::string& csv) {
  const EngineConfig cfg = resolve(o);
  const TimeSeriesSet set = load_train_set(cfg);
  const std::string path = out.empty() ? cfg.distance.cache : out;
  if (path.empty()) throw UsageError("distances needs --out or distance.cache");
  const DistanceLoad d = distances_for(cfg, set, path);
  if (d.cache_hit)
    std::cout << "cache hit: " << path << '\n';
  else
    std::cout << "computed " << metric_name(d.raw.metric()) << " distances for " << set.size() << " series -> "
              << path << '\n';
  const MatrixStats s = off_diagonal_stats(d.raw);
  std::cout.precision(10);
  std::cout << "off-diagonal min " << s.min << " max " << s.max << " mean " << s.mean << '\n';
  if (!csv.empty()) export_matrix_csv(d.raw, csv);
  return kOk;
}

int cmd_pretrain(const Overrides& o, const std::string& out, std::string log_path) {
  const EngineConfig cfg = resolve(o);
  const TimeSeriesSet set = load_train_set(cfg);
  const auto dist = training_distances(cfg, set);
  const PretrainResult r = pretrain(set, dist ? &*dist : nullptr, cfg.train_config(), cfg.encoder);
  save_checkpoint(r.state, out);
  if (log_path.empty()) log_path = out + ".log.csv";
  write_log_csv(r.log, log_path);
  std::cout << "trained " << r.state.updates << " steps on " << set.size() << " series";
  for (auto it = r.log.rbegin(); it != r.log.rend(); ++it)
    if (!it->skipped) {
      std::cout << ", final loss " << it->loss.total;
      break;
    }
  std::cout << "\ncheckpoint: " << out << "\nlog: " << log_path << '\n';
  return kOk;
}

EncoderModel load_any_model(const std::string& path) {
  if (!std::filesystem::exists(path)) throw DataError("checkpoint " + path + " does not exist");
  return model_from_blobs(load_blob_file(path));
}

void write_matrix_csv(const Tensor& t, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  out.precision(17);
  for (std::size_t i = 0; i < t.dim(0); ++i) {
    for (std::size_t c = 0; c < t.dim(1); ++c) out << (c ? "," : "") << t.at(i, c);
    out << '\n';
  }
}

int cmd_encode(const Overrides& o, const std::string& ckpt, const std::string& out, const std::string& full_out) {
  const EngineConfig cfg = resolve(o);
  const EncoderModel model = load_any_model(ckpt);
  const TimeSeriesSet set = load_train_set(cfg);
  const Tensor inst = encode_instances(model, set);

  Tensor full;
  if (!full_out.empty()) {
    const std::size_t N = set.size(), T = set.max_length(), M = model.config().output_dims, D = set.dims();
    full = Tensor(Shape{N, T, M}, std::numeric_limits<double>::quiet_NaN());
    for (std::size_t i = 0; i < N; ++i) {
      const SeriesView s = set.series(i);
      const Tensor r = encode(model, Tensor(Shape{1, s.length, D}, {s.values.begin(), s.values.end()}));
      for (std::size_t t = 0; t < s.length; ++t)
        for (std::size_t c = 0; c < M; ++c) full.at(i, t, c) = r.at(0, t, c);
    }
  }

  auto save_bin = [](const Tensor& t, const char* name, const std::string& path) {
    BlobFile f;
    f.meta = {{"kind", "representations"}};
    f.blobs.emplace_back(name, t);
    save_blob_file(f, path);
  };
  if (ends_with(out, ".bin")) save_bin(inst, "instance", out);
  else write_matrix_csv(inst, out);
  if (!full_out.empty()) {
    if (ends_with(full_out, ".bin")) {
      save_bin(full, "full", full_out);
    } else {
      std::ofstream fo(full_out);
      if (!fo) throw DataError("cannot write " + full_out);
      fo.precision(17);
      for (std::size_t i = 0; i < set.size(); ++i)
        for (std::size_t t = 0; t < set.lengths()[i]; ++t) {
          fo << i << ',' << t;
          for (std::size_t c = 0; c < full.dim(2); ++c) fo << ',' << full.at(i, t, c);
          fo << '\n';
        }
    }
  }
  std::cout << "wrote " << inst.dim(0) << " x " << inst.dim(1) << " instance representations to " << out << '\n';
  return kOk;
}

// Two columns per line: value, label (1 = anomaly).
SpikeSeries read_labelled_series(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  std::vector<double> values;
  SpikeSeries s;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw DataError(path + ":" + std::to_string(lineno) + ": expected value,label");
    try {
      values.push_back(std::stod(line.substr(0, comma)));
      s.truth.push_back(std::stoi(line.substr(comma + 1)) != 0 ? 1 : 0);
    } catch (const std::exception&) {
      throw DataError(path + ":" + std::to_string(lineno) + ": malformed number");
    }
  }
  if (values.empty()) throw DataError(path + " holds no samples");
  const std::size_t n = values.size();
  s.series = Tensor(Shape{n, 1}, std::move(values));
  return s;
}

int cmd_evaluate(const Overrides& o, const std::string& task_s, const std::string& ckpt, const std::string& out,
                 const std::string& series_path) {
  const EvalTask task = parse_task(task_s);
  const EngineConfig cfg = resolve(o);
  const EncoderModel model = load_any_model(ckpt);
  EvalReport report;
  if (task == EvalTask::Classify) {
    const TimeSeriesSet train = load_train_set(cfg);
    const TimeSeriesSet test = load_test_set(cfg);
    if (!train.labels() || !test.labels()) throw DataError("classification needs labelled data");
    report = classify_probe(encode_instances(model, train), *train.labels(), encode_instances(model, test),
                            *test.labels(), cfg.eval.k);
  } else {
    const SpikeSeries s = series_path.empty() ? make_spike_series(cfg.eval.spike) : read_labelled_series(series_path);
    const auto scores = anomaly_scores(model, s.series);
    const bool pa = cfg.eval.point_adjust;
    report = cfg.eval.anomaly_c ? threshold_anomalies(scores, s.truth, *cfg.eval.anomaly_c, pa).report
                                : tune_threshold(scores, s.truth, default_threshold_grid(), pa).result.report;
  }
  report.config = config_to_json(cfg);
  std::cout << report.to_text();
  if (!out.empty()) write_report(report, out);
  return kOk;
}

int cmd_ablate(const Overrides& o, const std::string& axis_s, const std::string& out) {
  const AblationAxis axis = parse_axis(axis_s);
  const EngineConfig cfg = resolve(o);
  const auto rows = run_ablation(axis, cfg);
  write_ablation_csv(rows, out);
  for (const auto& r : rows) std::cout << r.setting << ": accuracy " << r.accuracy << '\n';
  std::cout << rows.size() << " rows -> " << out << '\n';
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Soft contrastive learning for time series"};
  app.require_subcommand(1);

  Overrides o;
  std::string out, csv, log_path, ckpt, full_out, task, axis, series;

  auto* config = app.add_subcommand("config", "print the effective configuration");
  add_common(config, o);

  auto* distances = app.add_subcommand("distances", "compute or load cached pairwise distances");
  add_common(distances, o);
  distances->add_option("--out,-o", out, "cache file (default: distance.cache)");
  distances->add_option("--csv", csv, "also export the matrix as CSV");

  auto* pre = app.add_subcommand("pretrain", "pretrain an encoder");
  add_common(pre, o);
  pre->add_option("--out,-o", out, "checkpoint file")->required();
  pre->add_option("--log", log_path, "training log CSV (default: <out>.log.csv)");

  auto* enc = app.add_subcommand("encode", "write representations of a dataset");
  add_common(enc, o);
  enc->add_option("--ckpt", ckpt, "model or training checkpoint")->required();
  enc->add_option("--out,-o", out, "instance representations, CSV or .bin")->required();
  enc->add_option("--full", full_out, "also write per-timestamp representations (CSV rows series,t,..., or .bin)");

  auto* ev = app.add_subcommand("evaluate", "evaluate a pretrained encoder");
  add_common(ev, o);
  ev->add_option("--task", task, "classify or anomaly")->required();
  ev->add_option("--ckpt", ckpt, "model or training checkpoint")->required();
  ev->add_option("--out,-o", out, "report CSV");
  ev->add_option("--series", series, "anomaly input, one 'value,label' per line (default: synthetic spike)");

  auto* ab = app.add_subcommand("ablate", "sweep one design axis");
  add_common(ab, o);
  ab->add_option("--axis", axis, "assignment, alpha, metric or hierarchy")->required();
  ab->add_option("--out,-o", out, "comparison CSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (*config) return cmd_config(o);
    if (*distances) return cmd_distances(o, out, csv);
    if (*pre) return cmd_pretrain(o, out, log_path);
    if (*enc) return cmd_encode(o, ckpt, out, full_out);
    if (*ev) return cmd_evaluate(o, task, ckpt, out, series);
    if (*ab) return cmd_ablate(o, axis, out);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << '\n';
    return kNumeric;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kData;
  }
  return kUsage;
}
