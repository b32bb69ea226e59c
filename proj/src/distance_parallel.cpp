#include <omp.h>

#include <algorithm>
#include <cmath>
#include <exception>
#include <fstream>
#include <limits>

#include "softclt/blob_io.hpp"
#include "softclt/distance.hpp"
#include "softclt/error.hpp"

namespace softclt {

namespace {

constexpr std::string_view kMatrixMagic = "SCLTDMAT";
constexpr std::uint32_t kMatrixVersion = 1;

void require_pairs(const TimeSeriesSet& set) {
  if (set.size() < 2) throw DataError("pairwise distances need at least 2 series");
}

// Row-major index k over the strict upper triangle -> (i, j), i < j.
std::pair<std::size_t, std::size_t> upper_pair(std::size_t k, std::size_t n) {
  std::size_t i = 0;
  std::size_t row_len = n - 1;
  while (k >= row_len) {
    k -= row_len;
    ++i;
    --row_len;
  }
  return {i, i + 1 + k};
}

}  // namespace

DistanceMatrix::DistanceMatrix(Tensor values, Metric metric, bool normalized)
    : values_(std::move(values)), metric_(metric), normalized_(normalized) {
  if (values_.rank() != 2 || values_.dim(0) != values_.dim(1))
    throw ShapeError("distance matrix must be square, got " + shape_str(values_.shape()));
}

DistanceMatrix DistanceMatrix::submatrix(std::span<const std::size_t> indices) const {
  const std::size_t k = indices.size();
  Tensor out(Shape{k, k});
  for (std::size_t a = 0; a < k; ++a)
    for (std::size_t b = 0; b < k; ++b) {
      if (indices[a] >= size() || indices[b] >= size()) throw DataError("distance index out of range");
      out.at(a, b) = values_.at(indices[a], indices[b]);
    }
  return DistanceMatrix(std::move(out), metric_, normalized_);
}

DistanceMatrix pairwise_raw_serial(const TimeSeriesSet& set, Metric metric, const DistanceParams& params) {
  require_pairs(set);
  const std::size_t n = set.size();
  Tensor out(Shape{n, n});
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const double d = distance(metric, set.series(i), set.series(j), params);
      out.at(i, j) = d;
      out.at(j, i) = d;
    }
  return DistanceMatrix(std::move(out), metric, false);
}

DistanceMatrix pairwise_raw(const TimeSeriesSet& set, Metric metric, const DistanceParams& params) {
  require_pairs(set);
  const std::size_t n = set.size();
  const auto n_pairs = static_cast<std::ptrdiff_t>(n * (n - 1) / 2);
  Tensor out(Shape{n, n});
  std::exception_ptr failure;

#pragma omp parallel for schedule(dynamic, 8)
  for (std::ptrdiff_t k = 0; k < n_pairs; ++k) {
    try {
      const auto [i, j] = upper_pair(static_cast<std::size_t>(k), n);
      const double d = distance(metric, set.series(i), set.series(j), params);
      out.at(i, j) = d;
      out.at(j, i) = d;
    } catch (...) {
#pragma omp critical(softclt_pairwise_error)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  return DistanceMatrix(std::move(out), metric, false);
}

DistanceMatrix minmax_normalize(const DistanceMatrix& raw) {
  const std::size_t n = raw.size();
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (i != j) {
        lo = std::min(lo, raw.at(i, j));
        hi = std::max(hi, raw.at(i, j));
      }
  Tensor out(Shape{n, n});
  const double range = hi - lo;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (i != j && range > 0.0) out.at(i, j) = (raw.at(i, j) - lo) / range;
  return DistanceMatrix(std::move(out), raw.metric(), true);
}

DistanceMatrix pairwise(const TimeSeriesSet& set, Metric metric, const DistanceParams& params) {
  return minmax_normalize(pairwise_raw(set, metric, params));
}

void save_matrix(const DistanceMatrix& m, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out.write(kMatrixMagic.data(), kMatrixMagic.size());
  io::write_pod(out, kMatrixVersion);
  io::write_pod(out, static_cast<std::uint32_t>(m.metric()));
  io::write_pod<std::uint64_t>(out, m.size());
  io::write_pod<std::uint8_t>(out, m.normalized() ? 1 : 0);
  io::write_doubles(out, m.values().data());
  if (!out) throw DataError("write error on " + path.string());
}

DistanceMatrix load_matrix(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  io::expect_magic(in, kMatrixMagic);
  const auto version = io::read_pod<std::uint32_t>(in, "matrix version");
  if (version != kMatrixVersion) throw DataError("unsupported distance cache version " + std::to_string(version));
  const auto tag = io::read_pod<std::uint32_t>(in, "metric tag");
  if (tag > static_cast<std::uint32_t>(Metric::Tam)) throw DataError("corrupt metric tag in distance cache");
  const auto n = io::read_pod<std::uint64_t>(in, "matrix size");
  if (n == 0 || n > (1u << 20)) throw DataError("corrupt size field in distance cache");
  const auto flag = io::read_pod<std::uint8_t>(in, "normalization flag");
  if (flag > 1) throw DataError("corrupt normalization flag in distance cache");
  Tensor values(Shape{n, n});
  io::read_doubles(in, values.data(), "matrix values");
  if (in.peek() != std::char_traits<char>::eof()) throw DataError("trailing bytes in distance cache");
  return DistanceMatrix(std::move(values), static_cast<Metric>(tag), flag == 1);
}

void export_matrix_csv(const DistanceMatrix& m, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out.precision(17);
  for (std::size_t i = 0; i < m.size(); ++i) {
    for (std::size_t j = 0; j < m.size(); ++j) out << (j ? "," : "") << m.at(i, j);
    out << '\n';
  }
}

MatrixStats off_diagonal_stats(const DistanceMatrix& m) {
  MatrixStats s{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity(), 0.0};
  std::size_t count = 0;
  for (std::size_t i = 0; i < m.size(); ++i)
    for (std::size_t j = 0; j < m.size(); ++j)
      if (i != j) {
        s.min = std::min(s.min, m.at(i, j));
        s.max = std::max(s.max, m.at(i, j));
        s.mean += m.at(i, j);
        ++count;
      }
  if (count) s.mean /= static_cast<double>(count);
  else s = {};
  return s;
}

}  // namespace softclt
