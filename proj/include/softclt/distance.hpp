#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "softclt/dataset.hpp"
#include "softclt/tensor.hpp"

namespace softclt {

enum class Metric : std::uint32_t { Cosine = 0, Euclidean = 1, Dtw = 2, FastDtw = 3, Tam = 4 };

std::string_view metric_name(Metric m);
Metric parse_metric(std::string_view name);

// Penalty weights of the time alignment measurement. Unit weights give the
// usual score advance + delay + (1 - phase) in [0, 3].
struct TamWeights {
  double advance = 1.0;
  double delay = 1.0;
  double phase = 1.0;
  bool operator==(const TamWeights&) const = default;
};

struct DistanceParams {
  std::size_t fastdtw_radius = 1;
  std::size_t dtw_band = 0;  // Sakoe-Chiba half width, 0 disables the band
  TamWeights tam;
  bool operator==(const DistanceParams&) const = default;
};

using WarpPath = std::vector<std::pair<std::size_t, std::size_t>>;

struct DtwResult {
  double cost = 0.0;
  WarpPath path;  // from (0, 0) to (len_a - 1, len_b - 1)
};

// Classic DTW, per-step cost is the L2 norm of the channel difference and the
// step pattern is {(1,0), (0,1), (1,1)}.
double dtw(const SeriesView& a, const SeriesView& b, std::size_t band = 0);
DtwResult dtw_path(const SeriesView& a, const SeriesView& b, std::size_t band = 0);

// Multi-resolution approximation (coarsen by 2, project the path, refine in a
// window of `radius` cells). Falls back to exact DTW once either series is
// shorter than radius + 2.
double fastdtw(const SeriesView& a, const SeriesView& b, std::size_t radius = 1);
DtwResult fastdtw_path(const SeriesView& a, const SeriesView& b, std::size_t radius = 1);

// Time alignment measurement on the optimal DTW path. Steps that repeat an
// index of `b` count as advance, steps that repeat an index of `a` as delay,
// and diagonal steps as in-phase.
double tam(const SeriesView& a, const SeriesView& b, const TamWeights& weights = {});
double tam_from_path(const WarpPath& path, std::size_t len_a, std::size_t len_b,
                     const TamWeights& weights = {});

// Both compare the common prefix when lengths differ.
double euclidean(const SeriesView& a, const SeriesView& b);
double cosine_dist(const SeriesView& a, const SeriesView& b);

double distance(Metric metric, const SeriesView& a, const SeriesView& b,
                const DistanceParams& params = {});

class DistanceMatrix {
 public:
  DistanceMatrix() = default;
  DistanceMatrix(Tensor values, Metric metric, bool normalized);

  std::size_t size() const { return values_.rank() ? values_.dim(0) : 0; }
  double at(std::size_t i, std::size_t j) const { return values_.at(i, j); }
  const Tensor& values() const { return values_; }
  Metric metric() const { return metric_; }
  bool normalized() const { return normalized_; }

  // Rows and columns `indices` of this matrix, in that order.
  DistanceMatrix submatrix(std::span<const std::size_t> indices) const;

  bool operator==(const DistanceMatrix&) const = default;

 private:
  Tensor values_;  // [N, N]
  Metric metric_ = Metric::Dtw;
  bool normalized_ = false;
};

// Min-max over the off-diagonal entries; all-equal entries map to 0.
DistanceMatrix minmax_normalize(const DistanceMatrix& raw);

// Upper triangle evaluated in parallel (OpenMP), mirrored, then normalized.
DistanceMatrix pairwise(const TimeSeriesSet& set, Metric metric, const DistanceParams& params = {});
DistanceMatrix pairwise_raw(const TimeSeriesSet& set, Metric metric, const DistanceParams& params = {});

// Single-threaded reference of pairwise_raw, kept for tests and the benchmark.
DistanceMatrix pairwise_raw_serial(const TimeSeriesSet& set, Metric metric,
                                   const DistanceParams& params = {});

// Binary cache: "SCLTDMAT", u32 version, u32 metric tag, u64 N, u8 normalized
// flag, then N*N little-endian float64 in row-major order.
void save_matrix(const DistanceMatrix& m, const std::filesystem::path& path);
DistanceMatrix load_matrix(const std::filesystem::path& path);
void export_matrix_csv(const DistanceMatrix& m, const std::filesystem::path& path);

struct MatrixStats {
  double min = 0.0;
  double max = 0.0;
  double mean = 0.0;
};
MatrixStats off_diagonal_stats(const DistanceMatrix& m);

}  // namespace softclt
