// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fail.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "oracle.hpp"
#include "softclt/assign.hpp"
#include "softclt/blob_io.hpp"
#include "softclt/config.hpp"
#include "softclt/distance.hpp"
#include "softclt/encoder.hpp"
#include "softclt/eval.hpp"
#include "softclt/loss.hpp"
#include "softclt/pipeline.hpp"
#include "softclt/rng.hpp"
#include "softclt/train.hpp"

using namespace softclt;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;
  std::vector<std::string> failed;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      failed.push_back(what);
      pass = false;
    }
  }
};

int failures = 0;

void criterion(int id, const std::string& title, double budget_s, const std::function<void(Outcome&)>& body) {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    body(o);
  } catch (const std::exception& e) {
    o.require(false, std::string("exception: ") + e.what());
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (budget_s > 0 && secs > budget_s) {
    std::ostringstream s;
    s << "runtime " << secs << " s exceeds " << budget_s << " s";
    o.require(false, s.str());
  }
  if (!o.pass) ++failures;
  std::string why;
  for (const auto& f : o.failed) why += (why.empty() ? " | failed: " : "; ") + f;
  std::printf("[%s] %2d %s (%.2f s) %s%s\n", o.pass ? "PASS" : "FAIL", id, title.c_str(), secs, o.detail.str().c_str(),
              why.c_str());
  std::fflush(stdout);
}

struct RepsPair {
  Tensor tensor;  // [2N, T, M]
  oracle::Reps nested;
};

RepsPair random_reps(std::mt19937_64& rng, std::size_t two_n, std::size_t T, std::size_t M, double scale = 1.0) {
  std::normal_distribution<double> g(0.0, scale);
  RepsPair r{Tensor(Shape{two_n, T, M}), oracle::Reps(two_n, std::vector<std::vector<double>>(T, std::vector<double>(M)))};
  for (std::size_t i = 0; i < two_n; ++i)
    for (std::size_t t = 0; t < T; ++t)
      for (std::size_t c = 0; c < M; ++c) r.tensor.at(i, t, c) = r.nested[i][t][c] = g(rng);
  return r;
}

struct Weights {
  Tensor tensor;
  oracle::Matrix nested;
};

Weights random_weights(std::mt19937_64& rng, std::size_t k, double zero_prob = 0.0) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Weights w{Tensor(Shape{k, k}), oracle::Matrix(k, std::vector<double>(k))};
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = 0; j < k; ++j) {
      const double v = u(rng) < zero_prob ? 0.0 : u(rng);
      w.tensor.at(i, j) = w.nested[i][j] = v;
    }
  return w;
}

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(3);
  s << v;
  return s.str();
}

// Soft instance and temporal losses against the scalar-loop oracles.
void equation_fidelity(Outcome& o) {
  std::mt19937_64 rng(101);
  std::uniform_int_distribution<std::size_t> nd(1, 4), td(1, 8), md(1, 6);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t N = nd(rng), T = td(rng), M = md(rng);
    const auto reps = random_reps(rng, 2 * N, T, M);
    const auto wi = random_weights(rng, N);
    const auto wt = random_weights(rng, T);
    const double li = soft_instance_loss(reps.tensor, extend_instance(wi.tensor));
    const double lt = soft_temporal_loss(reps.tensor, extend_temporal(wt.tensor));
    worst = std::max({worst, std::abs(li - oracle::scalar_soft_instance_loss(reps.nested, wi.nested).value),
                      std::abs(lt - oracle::scalar_soft_temporal_loss(reps.nested, wt.nested).value)});
  }
  o.detail << "max |loss - oracle| = " << fmt(worst) << " over 100 instances";
  o.require(worst <= 1e-10, "deviation above 1e-10");
}

void hard_reduction(Outcome& o) {
  std::mt19937_64 rng(202);
  std::uniform_int_distribution<std::size_t> nd(1, 4), td(1, 8), md(1, 6);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t N = nd(rng), T = td(rng), M = md(rng);
    const auto reps = random_reps(rng, 2 * N, T, M);
    const double li = soft_instance_loss(reps.tensor, extend_instance(Tensor(Shape{N, N})));
    const double lt = soft_temporal_loss(reps.tensor, extend_temporal(Tensor(Shape{T, T})));
    worst = std::max({worst, std::abs(li - oracle::infonce_instance(reps.nested).value),
                      std::abs(lt - oracle::infonce_temporal(reps.nested).value)});
  }
  o.detail << "max |soft(w=0) - InfoNCE| = " << fmt(worst);
  o.require(worst <= 1e-10, "deviation above 1e-10");
}

void kl_identity(Outcome& o) {
  std::mt19937_64 rng(303);
  std::uniform_int_distribution<std::size_t> nd(1, 4), td(1, 8), md(1, 6);
  double worst = 0.0, worst_oracle = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t N = nd(rng), T = td(rng), M = md(rng);
    const auto reps = random_reps(rng, 2 * N, T, M);
    const auto wi = random_weights(rng, N, 0.2);
    const auto wt = random_weights(rng, T, 0.2);
    const auto ki = kl_identity_check(reps.tensor, extend_instance(wi.tensor), LossFamily::Instance);
    const auto kt = kl_identity_check(reps.tensor, extend_temporal(wt.tensor), LossFamily::Temporal);
    worst = std::max({worst, std::abs(ki.lhs - ki.rhs), std::abs(kt.lhs - kt.rhs)});
    worst_oracle = std::max({worst_oracle, std::abs(ki.lhs - oracle::scaled_kl_instance(reps.nested, wi.nested).value),
                             std::abs(kt.lhs - oracle::scaled_kl_temporal(reps.nested, wt.nested).value)});
  }
  o.detail << "max |lhs - rhs| = " << fmt(worst) << ", against the independent rhs " << fmt(worst_oracle);
  o.require(worst < 1e-8, "identity gap above 1e-8");
  o.require(worst_oracle < 1e-8, "oracle gap above 1e-8");
}

void gradient_check(Outcome& o) {
  const std::size_t N = 3, T = 8, D = 2;
  EncoderConfig ec;
  ec.input_dims = D;
  ec.hidden = 8;
  ec.output_dims = 4;
  ec.depth = 3;
  const EncoderModel base(ec, 11);

  std::mt19937_64 rng(404);
  std::normal_distribution<double> g(0.0, 1.0);
  Tensor xa(Shape{N, T, D}), xb(Shape{N, T, D});
  for (auto& v : xa.raw()) v = g(rng);
  for (auto& v : xb.raw()) v = g(rng);
  Tensor raw(Shape{N, N});
  for (std::size_t i = 0; i < N; ++i)
    for (std::size_t j = i + 1; j < N; ++j) raw.at(i, j) = raw.at(j, i) = 0.5 + std::abs(g(rng));
  const DistanceMatrix dist = minmax_normalize(DistanceMatrix(raw, Metric::Dtw, false));
  const InstanceAssignConfig icfg;
  const TemporalAssignConfig tcfg;
  const LossOptions opts;

  auto loss_of = [&](const EncoderModel& model, std::vector<Tensor>* grads) {
    Tape tape;
    const auto binding = bind(tape, model, grads != nullptr);
    const Var ra = encode(model, binding, tape.constant(xa));
    const Var rb = encode(model, binding, tape.constant(xb));
    const auto jl = joint_loss(ra, rb, &dist, icfg, tcfg, opts);
    if (grads) {
      tape.backward(jl.loss);
      for (const auto& v : binding.vars) grads->push_back(tape.grad(v.id()));
    }
    return jl.breakdown.total;
  };

  std::vector<Tensor> analytic;
  loss_of(base, &analytic);

  double worst = 0.0;
  std::string worst_name;
  std::size_t checked = 0;
  for (std::size_t p = 0; p < base.params().size(); ++p) {
    auto f = [&](const std::vector<double>& values) {
      EncoderModel m = base;
      m.params()[p].value.raw() = values;
      return loss_of(m, nullptr);
    };
    const auto fd = oracle::fd_gradient(f, base.params()[p].value.raw(), 1e-5);
    for (std::size_t k = 0; k < fd.size(); ++k) {
      const double a = analytic[p][k];
      const double rel = std::abs(a - fd[k]) / std::max({std::abs(a), std::abs(fd[k]), 1e-8});
      if (rel > worst) {
        worst = rel;
        worst_name = base.params()[p].name;
      }
      ++checked;
    }
  }
  o.detail << checked << " parameters, max relative error " << fmt(worst) << " (" << worst_name << ")";
  o.require(worst < 1e-4, "relative error above 1e-4");
}

SeriesView view_of(const std::vector<double>& v, std::size_t dims) { return {v, v.size() / dims, dims}; }

void dtw_equivalence(Outcome& o) {
  std::mt19937_64 rng(505);
  std::uniform_int_distribution<std::size_t> ld(1, 6), dd(1, 2);
  std::normal_distribution<double> g(0.0, 1.0);
  std::size_t exact_mismatch = 0, tam_mismatch = 0, fast_mismatch = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t la = ld(rng), lb = ld(rng), D = dd(rng);
    std::vector<double> a(la * D), b(lb * D);
    for (auto& v : a) v = g(rng);
    for (auto& v : b) v = g(rng);
    oracle::Series sa(la, std::vector<double>(D)), sb(lb, std::vector<double>(D));
    for (std::size_t t = 0; t < la; ++t)
      for (std::size_t c = 0; c < D; ++c) sa[t][c] = a[t * D + c];
    for (std::size_t t = 0; t < lb; ++t)
      for (std::size_t c = 0; c < D; ++c) sb[t][c] = b[t * D + c];

    const double exact = dtw(view_of(a, D), view_of(b, D));
    if (exact != oracle::brute_dtw(sa, sb).value) ++exact_mismatch;
    if (fastdtw(view_of(a, D), view_of(b, D), std::max(la, lb)) != exact) ++fast_mismatch;

    const double t = tam(view_of(a, D), view_of(b, D));
    bool found = false;
    for (const auto& path : oracle::brute_optimal_paths(sa, sb))
      found = found || std::abs(oracle::tam_of_path(path, static_cast<int>(la), static_cast<int>(lb)) - t) < 1e-12;
    if (!found) ++tam_mismatch;
  }

  // Noiseless sine-family series at length 100, every pair within and across classes.
  SyntheticSpec smooth;
  smooth.n_per_class = 10;
  smooth.length = 100;
  smooth.noise_std = 0.0;
  for (const auto& f : default_families())
    if (f.shape == WaveShape::Sine) smooth.classes.push_back(f);
  const TimeSeriesSet sines = make_synthetic(smooth);
  double worst_rel = 0.0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < sines.size(); ++i)
    for (std::size_t j = i + 1; j < sines.size(); ++j, ++pairs) {
      const double exact = dtw(sines.series(i), sines.series(j));
      worst_rel = std::max(worst_rel, (fastdtw(sines.series(i), sines.series(j), 1) - exact) / exact);
    }
  o.detail << "exact vs brute mismatches " << exact_mismatch << "/200, TAM not on an optimal path " << tam_mismatch
           << "/200, FastDTW(radius=T) mismatches " << fast_mismatch << "/200, FastDTW(radius=1) worst rel. error "
           << fmt(worst_rel) << " on " << pairs << " smooth length-100 pairs";
  o.require(exact_mismatch == 0, "exact DTW differs from brute force");
  o.require(tam_mismatch == 0, "TAM differs from every optimal path");
  o.require(fast_mismatch == 0, "FastDTW with full radius differs from DTW");
  o.require(worst_rel <= 0.05, "FastDTW radius 1 error above 5%");
}

void kernel_properties(Outcome& o) {
  std::size_t violations = 0;
  const double eps = 1e-15;
  for (auto k : {InstanceKernel::Sigmoid, InstanceKernel::NoKernel, InstanceKernel::Gaussian,
                 InstanceKernel::Laplacian}) {
    InstanceAssignConfig c;
    c.kernel = k;
    for (double tau : {1.0, 2.0, 3.0, 4.0, 5.0, 10.0, 20.0}) {
      c.tau = tau;
      double prev = instance_weight(0.0, c);
      for (int s = 1; s <= 200; ++s) {
        const double w = instance_weight(s / 200.0, c);
        if (w > prev + eps) ++violations;
        prev = w;
      }
    }
  }
  for (auto k : {TemporalKernel::Sigmoid, TemporalKernel::Neighbor, TemporalKernel::Linear,
                 TemporalKernel::Gaussian}) {
    TemporalAssignConfig c;
    c.kernel = k;
    for (std::size_t level = 0; level < 4; ++level) {
      double prev = temporal_weight(0, 32, level, c);
      for (std::size_t gap = 1; gap < 32; ++gap) {
        const double w = temporal_weight(gap, 32, level, c);
        if (w > prev + eps) ++violations;
        prev = w;
      }
    }
  }

  std::size_t alpha_bad = 0;
  for (double alpha : {0.25, 0.5, 0.75, 1.0}) {
    InstanceAssignConfig c;
    c.alpha = alpha;
    for (double tau : {1.0, 10.0, 20.0})
      if (c.tau = tau; std::abs(instance_weight(0.0, c) - alpha) > 1e-15) ++alpha_bad;
  }

  std::size_t tau_bad = 0;
  for (double tau : {0.5, 1.0, 1.5, 2.0, 2.5})
    for (std::size_t m : {2u, 3u})
      for (std::size_t level = 0; level < 5; ++level) {
        TemporalAssignConfig c;
        c.tau_base = tau;
        c.pool_kernel = m;
        const double scaled = std::pow(static_cast<double>(m), static_cast<double>(level)) * tau;
        if (std::abs(effective_tau(c, level) - scaled) > 1e-12 * scaled) ++tau_bad;
        for (std::size_t gap = 0; gap < 6; ++gap) {
          const double expected = 2.0 / (1.0 + std::exp(scaled * static_cast<double>(gap)));
          if (std::abs(temporal_weight(gap, 16, level, c) - expected) > 1e-12) ++tau_bad;
        }
        c.hierarchical = false;
        if (effective_tau(c, level) != tau) ++tau_bad;
      }

  o.detail << "monotonicity violations " << violations << ", w_I(0) != alpha " << alpha_bad
           << ", hierarchical sharpness mismatches " << tau_bad;
  o.require(violations == 0, "kernel not monotone");
  o.require(alpha_bad == 0, "sigmoid kernel does not start at alpha");
  o.require(tau_bad == 0, "sharpness scaling wrong");
}

double epoch_mean(const std::vector<LogRow>& log, bool first, std::size_t per_epoch) {
  double s = 0.0;
  std::size_t n = 0;
  const std::size_t lo = first ? 0 : log.size() - per_epoch;
  for (std::size_t i = lo; i < lo + per_epoch; ++i)
    if (!log[i].skipped) {
      s += log[i].loss.total;
      ++n;
    }
  return s / static_cast<double>(n);
}

void desk_experiment(Outcome& o) {
  EngineConfig cfg;
  const auto run = pretrain_and_probe(cfg);
  const std::size_t n = cfg.dataset.synthetic.n_per_class * cfg.dataset.synthetic.classes.size();
  const std::size_t per_epoch = (n + cfg.train.batch_size - 1) / cfg.train.batch_size;
  const double first = epoch_mean(run.trained.log, true, per_epoch);
  const double last = epoch_mean(run.trained.log, false, per_epoch);
  const double ratio = last / first;
  o.detail << n << " series, " << run.trained.state.updates << " steps, loss " << fmt(first) << " -> " << fmt(last)
           << " (ratio " << fmt(ratio) << "), probe accuracy " << fmt(run.report.accuracy);
  o.require(run.trained.state.updates == 200, "expected 200 optimizer steps");
  o.require(ratio <= 0.5, "final loss above 50% of the initial loss");
  o.require(run.report.accuracy >= 0.90, "probe accuracy below 0.90");

  EngineConfig longer = cfg;
  longer.train.iters = 50 * per_epoch;
  const auto long_run = pretrain_and_probe(longer);
  const double long_ratio =
      epoch_mean(long_run.trained.log, false, per_epoch) / epoch_mean(long_run.trained.log, true, per_epoch);
  o.detail << "; 50 epochs (" << longer.train.iters << " steps) ratio " << fmt(long_ratio);
  o.require(long_ratio <= 0.5, "50-epoch loss above 50% of the initial loss");

  o.detail << "; probe accuracy hard/soft:";
  double hard_sum = 0.0, soft_sum = 0.0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    EngineConfig soft = cfg;
    soft.train.seed = seed;
    EngineConfig hard = soft;
    hard.loss.soft_instance = false;
    hard.loss.soft_temporal = false;
    const double ah = pretrain_and_probe(hard).report.accuracy;
    const double as = pretrain_and_probe(soft).report.accuracy;
    hard_sum += ah;
    soft_sum += as;
    o.detail << " seed " << seed << " " << fmt(ah) << "/" << fmt(as);
  }
  o.detail << "; mean hard " << fmt(hard_sum / 5) << ", soft " << fmt(soft_sum / 5);
}

void anomaly_smoke(Outcome& o) {
  SpikeSpec spec;
  spec.seed = 3;
  const SpikeSeries s = make_spike_series(spec);
  std::vector<double> values(s.series.data().begin(), s.series.data().end());
  const TimeSeriesSet windows = make_windows(values, 32);

  TrainConfig tc;
  tc.loss.lambda = 0.0;
  tc.iters = 100;
  tc.seed = 5;
  EncoderConfig ec;
  const auto trained = pretrain(windows, nullptr, tc, ec);

  const auto scores = anomaly_scores(trained.model, s.series);
  const auto argmax = static_cast<std::size_t>(std::max_element(scores.begin(), scores.end()) - scores.begin());
  const auto best = tune_threshold(scores, s.truth, default_threshold_grid());
  o.detail << "spike at " << spec.spike_index << ", argmax " << argmax << ", tuned c " << fmt(best.c) << " F1 "
           << fmt(best.result.report.f1);
  o.require(argmax == spec.spike_index, "argmax misses the spike");
  o.require(best.result.report.f1 >= 0.9, "F1 below 0.9");
}

void determinism(Outcome& o) {
  const fs::path dir = fs::temp_directory_path() / "softclt_acceptance";
  fs::create_directories(dir);
  EngineConfig cfg;
  const TimeSeriesSet set = load_train_set(cfg);
  const auto dist = training_distances(cfg, set);
  const TrainConfig tc = cfg.train_config();

  const auto a = pretrain(set, &*dist, tc, cfg.encoder);
  const auto b = pretrain(set, &*dist, tc, cfg.encoder);
  o.require(a.state == b.state, "repeated pretraining differs");

  save_checkpoint(a.state, dir / "state.ckpt");
  o.require(load_checkpoint(dir / "state.ckpt") == a.state, "checkpoint round trip differs");

  const DistanceMatrix raw = pairwise_raw(set, Metric::Dtw);
  save_matrix(raw, dir / "dist.bin");
  o.require(load_matrix(dir / "dist.bin") == raw, "distance cache round trip differs");

  EncoderConfig ec = cfg.encoder;
  ec.input_dims = set.dims();
  Trainer first(set, &*dist, tc, EncoderModel(ec, derive_seed(tc.seed, "model")));
  first.run_until(100);
  save_checkpoint(first.state(), dir / "half.ckpt");
  Trainer resumed(set, &*dist, tc, load_checkpoint(dir / "half.ckpt"));
  resumed.run();
  o.require(resumed.state() == a.state, "resumed training differs from the uninterrupted run");
  o.detail << "repeat, checkpoint, cache and resume-at-100 comparisons are bitwise";
  fs::remove_all(dir);
}

void ablation_harness(Outcome& o) {
  const fs::path dir = fs::temp_directory_path() / "softclt_ablation";
  fs::create_directories(dir);
  EngineConfig cfg;
  cfg.train.iters = 16;
  const std::vector<std::pair<AblationAxis, std::vector<std::string>>> expected = {
      {AblationAxis::Alpha, {"alpha=0.25", "alpha=0.5", "alpha=0.75", "alpha=1"}},
      {AblationAxis::Assignment,
       {"temporal:neighbor", "temporal:linear", "temporal:gaussian", "temporal:sigmoid", "instance:no_kernel",
        "instance:gaussian", "instance:laplacian", "instance:sigmoid"}},
      {AblationAxis::Metric, {"metric=COS", "metric=EUC", "metric=DTW", "metric=TAM"}},
      {AblationAxis::Hierarchy, {"constant", "hierarchical"}},
  };
  for (const auto& [axis, settings] : expected) {
    const auto rows = run_ablation(axis, cfg);
    const fs::path csv = dir / (std::string(axis_name(axis)) + ".csv");
    write_ablation_csv(rows, csv);
    std::ifstream in(csv);
    std::size_t lines = 0;
    for (std::string line; std::getline(in, line);) ++lines;
    bool names_ok = rows.size() == settings.size();
    for (std::size_t i = 0; names_ok && i < rows.size(); ++i) names_ok = rows[i].setting == settings[i];
    o.require(names_ok, std::string(axis_name(axis)) + " grid differs");
    o.require(lines == settings.size() + 1, std::string(axis_name(axis)) + " CSV row count");
    o.detail << axis_name(axis) << " " << rows.size() << " rows; ";
  }
  fs::remove_all(dir);
}

}  // namespace

int main() {
  criterion(1, "equation fidelity vs scalar oracles", 10.0, equation_fidelity);
  criterion(2, "hard-CL reduction to InfoNCE", 0.0, hard_reduction);
  criterion(3, "scaled-KL identity", 0.0, kl_identity);
  criterion(4, "encoder+loss gradients vs finite differences", 60.0, gradient_check);
  criterion(5, "DTW / TAM / FastDTW oracle equivalence", 0.0, dtw_equivalence);
  criterion(6, "assignment kernel properties", 0.0, kernel_properties);
  criterion(7, "end-to-end desk experiment", 300.0, desk_experiment);
  criterion(8, "anomaly smoke test", 120.0, anomaly_smoke);
  criterion(9, "determinism and persistence", 0.0, determinism);
  criterion(10, "ablation harness grids", 0.0, ablation_harness);
  std::printf("%d criteria failed\n", failures);
  return failures ? 1 : 0;
}
