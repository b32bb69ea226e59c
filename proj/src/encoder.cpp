#include "softclt/encoder.hpp"

#include <cmath>

#include "softclt/blob_io.hpp"
#include "softclt/error.hpp"
#include "softclt/rng.hpp"

namespace softclt {

std::string_view mask_name(MaskMode m) {
  switch (m) {
    case MaskMode::None: return "none";
    case MaskMode::Binomial: return "binomial";
    case MaskMode::LastPoint: return "last_point";
  }
  return "?";
}

MaskMode parse_mask_mode(std::string_view name) {
  if (name == "none" || name == "NONE") return MaskMode::None;
  if (name == "binomial" || name == "BINOMIAL") return MaskMode::Binomial;
  if (name == "last_point" || name == "LAST_POINT") return MaskMode::LastPoint;
  throw UsageError("unknown mask mode '" + std::string(name) + "'");
}

void EncoderConfig::validate() const {
  if (input_dims < 1) throw UsageError("encoder input_dims must be >= 1");
  if (hidden < 1) throw UsageError("encoder hidden width must be >= 1");
  if (output_dims < 1) throw UsageError("encoder output_dims must be >= 1");
  if (depth < 1) throw UsageError("encoder depth must be >= 1");
  if (kernel_size < 1 || kernel_size % 2 == 0) throw UsageError("encoder kernel_size must be odd");
}

namespace {

struct BlockLayout {
  std::size_t in, out, dilation;
  bool projector;
};

std::vector<BlockLayout> layout(const EncoderConfig& c) {
  std::vector<BlockLayout> blocks;
  for (std::size_t b = 0; b < c.depth; ++b) {
    const bool last = b + 1 == c.depth;
    const std::size_t out = last ? c.output_dims : c.hidden;
    blocks.push_back({c.hidden, out, std::size_t{1} << b, last || c.hidden != out});
  }
  return blocks;
}

Tensor uniform_init(Shape shape, std::size_t fan_in, Rng& rng) {
  Tensor t(std::move(shape));
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  for (auto& v : t.raw()) v = (2.0 * rng.uniform() - 1.0) * bound;
  return t;
}

}  // namespace

EncoderModel::EncoderModel(const EncoderConfig& config, std::uint64_t seed) : config_(config) {
  config_.validate();
  Rng rng(seed, "encoder-init");
  const std::size_t K = config_.kernel_size;
  auto add = [&](std::string name, Shape shape, std::size_t fan_in) {
    params_.push_back({std::move(name), uniform_init(std::move(shape), fan_in, rng)});
  };
  add("input.weight", {1, config_.input_dims, config_.hidden}, config_.input_dims);
  add("input.bias", {config_.hidden}, config_.input_dims);
  const auto blocks = layout(config_);
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    const auto& bl = blocks[b];
    const std::string p = "block" + std::to_string(b) + ".";
    if (bl.projector) {
      add(p + "proj.weight", {1, bl.in, bl.out}, bl.in);
      add(p + "proj.bias", {bl.out}, bl.in);
    }
    add(p + "conv1.weight", {K, bl.in, bl.out}, K * bl.in);
    add(p + "conv1.bias", {bl.out}, K * bl.in);
    add(p + "conv2.weight", {K, bl.out, bl.out}, K * bl.out);
    add(p + "conv2.bias", {bl.out}, K * bl.out);
  }
}

const Tensor& EncoderModel::param(std::string_view name) const {
  for (const auto& p : params_)
    if (p.name == name) return p.value;
  throw DataError("encoder has no parameter '" + std::string(name) + "'");
}

std::size_t EncoderModel::parameter_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.value.size();
  return n;
}

EncoderBinding bind(Tape& tape, const EncoderModel& model, bool trainable) {
  EncoderBinding b;
  b.vars.reserve(model.params().size());
  for (const auto& p : model.params()) b.vars.push_back(trainable ? tape.param(p.value) : tape.constant(p.value));
  return b;
}

namespace {

Tensor make_mask(const MaskSpec& spec, std::size_t batch, std::size_t length, std::size_t width) {
  Tensor mask(Shape{batch, length, width}, 1.0);
  auto zero_step = [&](std::size_t b, std::size_t t) {
    for (std::size_t c = 0; c < width; ++c) mask.at(b, t, c) = 0.0;
  };
  switch (spec.mode) {
    case MaskMode::None:
      break;
    case MaskMode::Binomial: {
      Rng rng(spec.seed, "binomial-mask");
      for (std::size_t b = 0; b < batch; ++b)
        for (std::size_t t = 0; t < length; ++t)
          if (rng.uniform() >= spec.keep_prob) zero_step(b, t);
      break;
    }
    case MaskMode::LastPoint: {
      const std::size_t t = spec.point.value_or(length - 1);
      if (t >= length) throw DataError("mask point outside the series");
      for (std::size_t b = 0; b < batch; ++b) zero_step(b, t);
      break;
    }
  }
  return mask;
}

}  // namespace

Var encode(const EncoderModel& model, const EncoderBinding& binding, Var x, const MaskSpec& mask) {
  const auto& cfg = model.config();
  const Shape& xs = x.shape();
  if (xs.size() != 3 || xs[2] != cfg.input_dims)
    throw ShapeError("encoder expects [B, L, " + std::to_string(cfg.input_dims) + "], got " + shape_str(xs));
  if (xs[1] < 1) throw ShapeError("encoder input needs L >= 1");
  if (binding.vars.size() != model.params().size()) throw Error("encoder binding does not match the model");

  std::size_t next = 0;
  auto take = [&]() { return binding.vars.at(next++); };

  const Var w_in = take();
  const Var b_in = take();
  Var h = ad::conv1d(x, w_in, b_in, 1);
  if (mask.mode != MaskMode::None)
    h = ad::mul(h, x.tape()->constant(make_mask(mask, xs[0], xs[1], cfg.hidden)));

  for (const auto& bl : layout(cfg)) {
    Var residual = h;
    if (bl.projector) {
      const Var pw = take();
      const Var pb = take();
      residual = ad::conv1d(h, pw, pb, 1);
    }
    const Var w1 = take();
    const Var b1 = take();
    const Var w2 = take();
    const Var b2 = take();
    Var y = ad::conv1d(ad::gelu(h), w1, b1, bl.dilation);
    y = ad::conv1d(ad::gelu(y), w2, b2, bl.dilation);
    h = ad::add(y, residual);
  }
  return h;
}

Tensor encode(const EncoderModel& model, const Tensor& x, const MaskSpec& mask) {
  Tape tape;
  const auto binding = bind(tape, model, false);
  return encode(model, binding, tape.constant(x), mask).value();
}

std::vector<std::size_t> ladder_lengths(std::size_t length, std::size_t m) {
  if (m < 2) throw UsageError("pool kernel must be >= 2");
  std::vector<std::size_t> out{length};
  while (true) {
    const std::size_t next = (out.back() + m - 1) / m;
    if (next < 2 || next == out.back()) break;
    out.push_back(next);
  }
  return out;
}

std::vector<Var> pool_ladder(Var r, std::size_t m) {
  const auto lengths = ladder_lengths(r.shape().at(1), m);
  std::vector<Var> levels{r};
  for (std::size_t k = 1; k < lengths.size(); ++k) levels.push_back(ad::max_pool1d(levels.back(), m));
  return levels;
}

Var instance_repr(Var r) {
  const Shape& s = r.shape();
  if (s.size() != 3) throw ShapeError("instance_repr expects [B, L, M]");
  return ad::reshape(ad::max_pool1d(r, s[1]), Shape{s[0], s[2]});
}

Tensor instance_repr(const Tensor& r) {
  Tape tape;
  return instance_repr(tape.constant(r)).value();
}

namespace {

nlohmann::json config_json(const EncoderConfig& c) {
  return {{"input_dims", c.input_dims}, {"hidden", c.hidden}, {"output_dims", c.output_dims},
          {"depth", c.depth}, {"kernel_size", c.kernel_size}};
}

}  // namespace

BlobFile model_to_blobs(const EncoderModel& model) {
  BlobFile file;
  file.meta = {{"kind", "model"}, {"encoder", config_json(model.config())}};
  for (const auto& p : model.params()) file.blobs.emplace_back("param/" + p.name, p.value);
  return file;
}

EncoderModel model_from_blobs(const BlobFile& file) {
  EncoderConfig cfg;
  try {
    const auto& e = file.meta.at("encoder");
    cfg.input_dims = e.at("input_dims").get<std::size_t>();
    cfg.hidden = e.at("hidden").get<std::size_t>();
    cfg.output_dims = e.at("output_dims").get<std::size_t>();
    cfg.depth = e.at("depth").get<std::size_t>();
    cfg.kernel_size = e.at("kernel_size").get<std::size_t>();
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("checkpoint lacks a valid encoder config: ") + e.what());
  }
  EncoderModel model(cfg, 0);
  for (auto& p : model.params()) {
    const Tensor& stored = file.get("param/" + p.name);
    if (stored.shape() != p.value.shape())
      throw DataError("checkpoint parameter " + p.name + " has shape " + shape_str(stored.shape()) +
                      ", expected " + shape_str(p.value.shape()));
    p.value = stored;
  }
  return model;
}

void save_model(const EncoderModel& model, const std::filesystem::path& path) {
  save_blob_file(model_to_blobs(model), path);
}

EncoderModel load_model(const std::filesystem::path& path) { return model_from_blobs(load_blob_file(path)); }

}  // namespace softclt
