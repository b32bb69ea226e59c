#include "softclt/train.hpp"

#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "softclt/blob_io.hpp"
#include "softclt/error.hpp"
#include "softclt/log.hpp"
#include "softclt/rng.hpp"

namespace softclt {

void TrainConfig::validate() const {
  if (!(lr >= 0.0) || !std::isfinite(lr)) throw UsageError("learning rate must be finite and >= 0");
  if (batch_size < 1) throw UsageError("batch_size must be >= 1");
  if (!(beta1 >= 0.0 && beta1 < 1.0)) throw UsageError("beta1 must lie in [0, 1)");
  if (!(beta2 >= 0.0 && beta2 < 1.0)) throw UsageError("beta2 must lie in [0, 1)");
  if (!(eps > 0.0)) throw UsageError("eps must be > 0");
  instance.validate();
  temporal.validate();
  loss.validate();
}

namespace {

bool needs_distances(const TrainConfig& c) { return c.loss.soft_instance && c.loss.lambda > 0.0; }

std::vector<Tensor> zeros_like(const EncoderModel& model) {
  std::vector<Tensor> out;
  out.reserve(model.params().size());
  for (const auto& p : model.params()) out.emplace_back(p.value.shape());
  return out;
}

}  // namespace

Trainer::Trainer(const TimeSeriesSet& set, const DistanceMatrix* dist, TrainConfig config, EncoderModel model)
    : Trainer(set, dist, config, [&] {
        TrainState s;
        s.adam_m = zeros_like(model);
        s.adam_v = zeros_like(model);
        s.model = std::move(model);
        s.seed = config.seed;
        return s;
      }()) {}

Trainer::Trainer(const TimeSeriesSet& set, const DistanceMatrix* dist, TrainConfig config, TrainState state)
    : set_(&set), dist_(dist), config_(std::move(config)), state_(std::move(state)) {
  config_.validate();
  config_.seed = state_.seed;
  if (set.size() < 2) throw DataError("training needs at least 2 series");
  if (state_.model.config().input_dims != set.dims())
    throw ShapeError("model expects " + std::to_string(state_.model.config().input_dims) +
                     " channels, data has " + std::to_string(set.dims()));
  if (state_.adam_m.size() != state_.model.params().size() || state_.adam_v.size() != state_.model.params().size())
    throw DataError("optimizer state does not match the model");
  if (needs_distances(config_) && !dist_)
    throw UsageError("soft instance-wise loss needs a distance matrix");
  if (dist_) {
    if (dist_->size() != set.size())
      throw ShapeError("distance matrix covers " + std::to_string(dist_->size()) + " series, data has " +
                       std::to_string(set.size()));
    if (!dist_->normalized()) throw DataError("distance matrix must be min-max normalized");
  }
}

std::vector<std::size_t> Trainer::batch_indices(std::uint64_t step) const {
  const std::size_t n = set_->size();
  const std::size_t bs = std::min(config_.batch_size, n);
  const std::size_t per_epoch = (n + bs - 1) / bs;
  const std::uint64_t epoch = step / per_epoch;
  const std::size_t b = static_cast<std::size_t>(step % per_epoch);

  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  Rng rng(state_.seed, "epoch", epoch);
  for (std::size_t i = n; i > 1; --i) std::swap(perm[i - 1], perm[rng.uniform_int(0, i - 1)]);

  const std::size_t lo = b * bs;
  const std::size_t hi = std::min(n, lo + bs);
  return {perm.begin() + static_cast<std::ptrdiff_t>(lo), perm.begin() + static_cast<std::ptrdiff_t>(hi)};
}

StepInputs Trainer::prepare_step(std::uint64_t step) const {
  StepInputs in;
  in.indices = batch_indices(step);
  const TimeSeriesSet batch = set_->subset(in.indices);
  in.views = crop_two_views(batch, derive_seed(state_.seed, "crop", step));
  in.mask_a = {config_.mask, derive_seed(state_.seed, "mask-a", step), 0.5, std::nullopt};
  in.mask_b = {config_.mask, derive_seed(state_.seed, "mask-b", step), 0.5, std::nullopt};
  return in;
}

const LogRow& Trainer::step() {
  const std::uint64_t s = state_.step;
  const auto indices = batch_indices(s);
  if (indices.size() < 2) {
    log::warn("step " + std::to_string(s) + ": batch of " + std::to_string(indices.size()) +
              " series skipped, the instance-wise loss needs at least 2");
    ++state_.step;
    log_.push_back({s, true, {}});
    return log_.back();
  }

  const StepInputs in = prepare_step(s);
  const auto& v = in.views;
  Tape tape;
  const EncoderBinding binding = bind(tape, state_.model, true);
  const Var za = encode(state_.model, binding, tape.constant(v.view_a), in.mask_a);
  const Var zb = encode(state_.model, binding, tape.constant(v.view_b), in.mask_b);
  const Var oa = ad::slice(za, 1, v.overlap_start_a, v.overlap_len);
  const Var ob = ad::slice(zb, 1, v.overlap_start_b, v.overlap_len);

  std::optional<DistanceMatrix> batch_dist;
  if (dist_) batch_dist = dist_->submatrix(in.indices);
  JointLoss jl = joint_loss(oa, ob, batch_dist ? &*batch_dist : nullptr, config_.instance, config_.temporal,
                            config_.loss);
  if (!std::isfinite(jl.breakdown.total))
    throw NumericError("loss is not finite at step " + std::to_string(s));

  tape.backward(jl.loss);
  std::vector<Tensor> grads;
  grads.reserve(binding.vars.size());
  for (std::size_t i = 0; i < binding.vars.size(); ++i) {
    const Tensor& g = tape.grad(binding.vars[i].id());
    grads.push_back(g.size() ? g : Tensor(state_.model.params()[i].value.shape()));
  }
  adam_update(grads);

  ++state_.step;
  log_.push_back({s, false, std::move(jl.breakdown)});
  log::debug("step " + std::to_string(s) + " loss " + std::to_string(log_.back().loss.total));
  return log_.back();
}

void Trainer::run_until(std::uint64_t step) {
  while (state_.step < step) this->step();
}

void Trainer::adam_update(const std::vector<Tensor>& grads) {
  ++state_.updates;
  const double t = static_cast<double>(state_.updates);
  const double c1 = 1.0 - std::pow(config_.beta1, t);
  const double c2 = 1.0 - std::pow(config_.beta2, t);
  auto& params = state_.model.params();
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& w = params[i].value.raw();
    auto& m = state_.adam_m[i].raw();
    auto& v = state_.adam_v[i].raw();
    const auto g = grads[i].data();
    for (std::size_t j = 0; j < w.size(); ++j) {
      m[j] = config_.beta1 * m[j] + (1.0 - config_.beta1) * g[j];
      v[j] = config_.beta2 * v[j] + (1.0 - config_.beta2) * g[j] * g[j];
      const double mh = m[j] / c1;
      const double vh = v[j] / c2;
      w[j] -= config_.lr * mh / (std::sqrt(vh) + config_.eps);
    }
  }
}

PretrainResult pretrain(const TimeSeriesSet& set, const DistanceMatrix* dist, const TrainConfig& config,
                        const EncoderConfig& encoder) {
  EncoderConfig ec = encoder;
  ec.input_dims = set.dims();
  Trainer trainer(set, dist, config, EncoderModel(ec, derive_seed(config.seed, "model")));
  trainer.run();
  return {trainer.model(), trainer.log(), trainer.state()};
}

void save_checkpoint(const TrainState& state, const std::filesystem::path& path) {
  BlobFile file = model_to_blobs(state.model);
  file.meta["kind"] = "train_state";
  file.meta["step"] = state.step;
  file.meta["updates"] = state.updates;
  file.meta["seed"] = state.seed;
  const auto& params = state.model.params();
  for (std::size_t i = 0; i < params.size(); ++i) {
    file.blobs.emplace_back("adam_m/" + params[i].name, state.adam_m.at(i));
    file.blobs.emplace_back("adam_v/" + params[i].name, state.adam_v.at(i));
  }
  save_blob_file(file, path);
}

TrainState load_checkpoint(const std::filesystem::path& path) {
  const BlobFile file = load_blob_file(path);
  if (file.meta.value("kind", std::string{}) != "train_state")
    throw DataError(path.string() + " is not a training checkpoint");
  TrainState state;
  state.model = model_from_blobs(file);
  try {
    state.step = file.meta.at("step").get<std::uint64_t>();
    state.updates = file.meta.at("updates").get<std::uint64_t>();
    state.seed = file.meta.at("seed").get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("training checkpoint metadata is invalid: ") + e.what());
  }
  for (const auto& p : state.model.params()) {
    const Tensor& m = file.get("adam_m/" + p.name);
    const Tensor& v = file.get("adam_v/" + p.name);
    if (m.shape() != p.value.shape() || v.shape() != p.value.shape())
      throw DataError("optimizer state for " + p.name + " has the wrong shape");
    state.adam_m.push_back(m);
    state.adam_v.push_back(v);
  }
  return state;
}

void write_log_csv(const std::vector<LogRow>& log, const std::filesystem::path& path) {
  std::size_t levels = 0;
  for (const auto& r : log) levels = std::max(levels, r.loss.per_level.size());

  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out.precision(17);
  out << "step,skipped,total,instance_term,temporal_term";
  for (std::size_t k = 0; k < levels; ++k) out << ",level" << k << "_instance,level" << k << "_temporal";
  out << '\n';
  for (const auto& r : log) {
    out << r.step << ',' << (r.skipped ? 1 : 0) << ',' << r.loss.total << ',' << r.loss.instance_term << ','
        << r.loss.temporal_term;
    for (std::size_t k = 0; k < levels; ++k) {
      if (k < r.loss.per_level.size())
        out << ',' << r.loss.per_level[k].instance << ',' << r.loss.per_level[k].temporal;
      else
        out << ",,";
    }
    out << '\n';
  }
  if (!out) throw DataError("failed writing " + path.string());
}

}  // namespace softclt
