#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "softclt/autodiff.hpp"
#include "softclt/tensor.hpp"

namespace softclt {

enum class MaskMode { None, Binomial, LastPoint };

std::string_view mask_name(MaskMode m);
MaskMode parse_mask_mode(std::string_view name);

struct EncoderConfig {
  std::size_t input_dims = 1;
  std::size_t hidden = 32;
  std::size_t output_dims = 16;
  std::size_t depth = 4;  // dilated blocks; block b uses dilation 2^b
  std::size_t kernel_size = 3;

  void validate() const;
  bool operator==(const EncoderConfig&) const = default;
};

// Which timestamps are hidden after the input projection.
struct MaskSpec {
  MaskMode mode = MaskMode::None;
  std::uint64_t seed = 0;             // Binomial draws
  double keep_prob = 0.5;             // Binomial
  std::optional<std::size_t> point;   // LastPoint; defaults to the last timestamp
};

struct NamedTensor {
  std::string name;
  Tensor value;
  bool operator==(const NamedTensor&) const = default;
};

// Input projection followed by `depth` residual blocks of two dilated
// convolutions with GELU activations. The last block maps to output_dims
// through a 1x1 projector on the residual path.
class EncoderModel {
 public:
  EncoderModel() = default;
  EncoderModel(const EncoderConfig& config, std::uint64_t seed);

  const EncoderConfig& config() const { return config_; }
  std::vector<NamedTensor>& params() { return params_; }
  const std::vector<NamedTensor>& params() const { return params_; }
  const Tensor& param(std::string_view name) const;
  std::size_t parameter_count() const;

  bool operator==(const EncoderModel&) const = default;

 private:
  EncoderConfig config_;
  std::vector<NamedTensor> params_;
};

// The model's parameters recorded on a tape, in params() order.
struct EncoderBinding {
  std::vector<Var> vars;
};

EncoderBinding bind(Tape& tape, const EncoderModel& model, bool trainable = true);

// x: [B, L, D] -> r: [B, L, M].
Var encode(const EncoderModel& model, const EncoderBinding& binding, Var x, const MaskSpec& mask = {});

// Tape-free convenience for inference.
Tensor encode(const EncoderModel& model, const Tensor& x, const MaskSpec& mask = {});

// Level 0 is r, level k is max_pool1d(level k-1, m); stops before a level of
// length 1 is produced, so a length-1 input yields a single level.
std::vector<Var> pool_ladder(Var r, std::size_t m);
std::vector<std::size_t> ladder_lengths(std::size_t length, std::size_t m);

// Max over the time axis: [B, L, M] -> [B, M].
Var instance_repr(Var r);
Tensor instance_repr(const Tensor& r);

struct BlobFile;

// Checkpoint layout: metadata key "encoder" holds the config, parameters are
// stored as blobs named "param/<name>".
BlobFile model_to_blobs(const EncoderModel& model);
EncoderModel model_from_blobs(const BlobFile& file);

void save_model(const EncoderModel& model, const std::filesystem::path& path);
EncoderModel load_model(const std::filesystem::path& path);

}  // namespace softclt
