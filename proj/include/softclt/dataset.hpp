#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "softclt/tensor.hpp"

namespace softclt {

// Read-only view of one series: `length` valid timestamps of `dims` channels,
// row-major [length, dims].
struct SeriesView {
  std::span<const double> values;
  std::size_t length = 0;
  std::size_t dims = 0;

  double at(std::size_t t, std::size_t c) const { return values[t * dims + c]; }
  std::span<const double> row(std::size_t t) const { return values.subspan(t * dims, dims); }
};

// A batch or archive of multivariate series stored padded to a common T_max.
// Positions at or beyond lengths[i] are padding and hold 0.
class TimeSeriesSet {
 public:
  TimeSeriesSet() = default;
  TimeSeriesSet(Tensor values, std::vector<std::size_t> lengths,
                std::optional<std::vector<int>> labels = std::nullopt,
                std::vector<std::string> names = {});

  // Equal-length convenience constructor.
  explicit TimeSeriesSet(Tensor values, std::optional<std::vector<int>> labels = std::nullopt);

  std::size_t size() const { return lengths_.size(); }
  std::size_t max_length() const { return values_.rank() ? values_.dim(1) : 0; }
  std::size_t dims() const { return values_.rank() ? values_.dim(2) : 0; }
  std::size_t min_length() const;

  const Tensor& values() const { return values_; }
  const std::vector<std::size_t>& lengths() const { return lengths_; }
  const std::optional<std::vector<int>>& labels() const { return labels_; }
  const std::vector<std::string>& names() const { return names_; }

  SeriesView series(std::size_t i) const;
  TimeSeriesSet subset(std::span<const std::size_t> indices) const;

  bool operator==(const TimeSeriesSet&) const = default;

 private:
  Tensor values_;  // [N, T_max, D]
  std::vector<std::size_t> lengths_;
  std::optional<std::vector<int>> labels_;
  std::vector<std::string> names_;
};

// UCR archive convention: one series per line, label first, tab separated.
// "NaN" (any case) or an empty cell marks a missing value; only trailing
// missing values are accepted and they shorten the series.
TimeSeriesSet load_ucr_tsv(const std::filesystem::path& path);
void save_ucr_tsv(const TimeSeriesSet& set, const std::filesystem::path& path);

// Per series and channel: zero mean, unit population stdev over valid
// timestamps. Constant channels become all zeros.
TimeSeriesSet znormalize(const TimeSeriesSet& set);

enum class WaveShape { Sine, Square, Sawtooth };

struct ClassFamily {
  WaveShape shape = WaveShape::Sine;
  double frequency = 1.0;  // cycles over the whole series
  bool operator==(const ClassFamily&) const = default;
};

struct SyntheticSpec {
  std::size_t n_per_class = 20;
  std::size_t length = 64;
  std::vector<ClassFamily> classes;
  double noise_std = 0.1;
  double phase_jitter = 0.3;  // radians, uniform in [-j, j]
  std::uint64_t seed = 0;
  bool operator==(const SyntheticSpec&) const = default;
};

// The three-class corpus used throughout the tests and the CLI defaults.
std::vector<ClassFamily> default_families();

// Labelled multi-class corpus. Labels are class indices in the order of
// spec.classes; series are interleaved by class.
TimeSeriesSet make_synthetic(const SyntheticSpec& spec);

// Two overlapping random crops of every series, sharing one crop geometry.
struct ViewPair {
  Tensor view_a;  // [N, L, D]
  Tensor view_b;  // [N, L, D]
  std::size_t overlap_start_a = 0;
  std::size_t overlap_start_b = 0;
  std::size_t overlap_len = 0;
  std::size_t crop_start_a = 0;  // offsets of the views in the source series
  std::size_t crop_start_b = 0;

  std::size_t view_length() const { return view_a.dim(1); }
  bool operator==(const ViewPair&) const = default;
};

struct CropOptions {
  bool full_length = false;  // identity crop: both views equal the whole series
};

// Crop length is uniform in [ceil(T/2), T] where T is the shortest series;
// offsets are uniform subject to a nonempty overlap.
ViewPair crop_two_views(const TimeSeriesSet& set, std::uint64_t seed, CropOptions options = {});

// One univariate series cut into consecutive windows of `window` samples
// (the last partial window is dropped unless it is the only one).
TimeSeriesSet make_windows(std::span<const double> series, std::size_t window);

}  // namespace softclt
