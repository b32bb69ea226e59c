#include "softclt/distance.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "softclt/error.hpp"

namespace softclt {

std::string_view metric_name(Metric m) {
  switch (m) {
    case Metric::Cosine: return "COS";
    case Metric::Euclidean: return "EUC";
    case Metric::Dtw: return "DTW";
    case Metric::FastDtw: return "FASTDTW";
    case Metric::Tam: return "TAM";
  }
  return "?";
}

Metric parse_metric(std::string_view name) {
  std::string up(name);
  for (auto& c : up) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  if (up == "COS" || up == "COSINE") return Metric::Cosine;
  if (up == "EUC" || up == "EUCLIDEAN") return Metric::Euclidean;
  if (up == "DTW") return Metric::Dtw;
  if (up == "FASTDTW") return Metric::FastDtw;
  if (up == "TAM") return Metric::Tam;
  throw UsageError("unknown distance metric '" + std::string(name) + "'");
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_pair(const SeriesView& a, const SeriesView& b) {
  if (a.dims != b.dims)
    throw DataError("channel count mismatch: " + std::to_string(a.dims) + " vs " + std::to_string(b.dims));
  if (a.length < 1 || b.length < 1) throw DataError("series must have at least one timestamp");
}

double step_cost(const SeriesView& a, std::size_t i, const SeriesView& b, std::size_t j) {
  if (a.dims == 1) return std::abs(a.values[i] - b.values[j]);
  double s = 0.0;
  const double* x = a.values.data() + i * a.dims;
  const double* y = b.values.data() + j * b.dims;
  for (std::size_t c = 0; c < a.dims; ++c) {
    const double d = x[c] - y[c];
    s += d * d;
  }
  return std::sqrt(s);
}

// Inclusive column range per row of the cost matrix.
struct Window {
  std::vector<std::size_t> lo, hi;
};

Window full_window(std::size_t n, std::size_t m) {
  return Window{std::vector<std::size_t>(n, 0), std::vector<std::size_t>(n, m - 1)};
}

Window band_window(std::size_t n, std::size_t m, std::size_t band) {
  const std::size_t w = std::max(band, n > m ? n - m : m - n);
  Window win;
  win.lo.resize(n);
  win.hi.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    win.lo[i] = i > w ? i - w : 0;
    win.hi[i] = std::min(m - 1, i + w);
  }
  return win;
}

DtwResult dtw_windowed(const SeriesView& a, const SeriesView& b, const Window& win, bool want_path) {
  const std::size_t n = a.length, m = b.length;
  std::vector<double> acc(n * m, kInf);
  auto D = [&](std::size_t i, std::size_t j) -> double& { return acc[i * m + j]; };

  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = win.lo[i]; j <= win.hi[i]; ++j) {
      double best;
      if (i == 0 && j == 0) {
        best = 0.0;
      } else {
        best = kInf;
        if (i > 0 && j > 0) best = std::min(best, D(i - 1, j - 1));
        if (i > 0) best = std::min(best, D(i - 1, j));
        if (j > 0) best = std::min(best, D(i, j - 1));
      }
      D(i, j) = step_cost(a, i, b, j) + best;
    }
  }

  DtwResult out;
  out.cost = D(n - 1, m - 1);
  if (!std::isfinite(out.cost)) throw NumericError("DTW window does not connect the endpoints");
  if (!want_path) return out;

  std::size_t i = n - 1, j = m - 1;
  out.path.emplace_back(i, j);
  while (i > 0 || j > 0) {
    // Preference on ties: diagonal, then advance in a, then advance in b.
    std::size_t ni = i, nj = j;
    double best = kInf;
    if (i > 0 && j > 0) {
      best = D(i - 1, j - 1);
      ni = i - 1;
      nj = j - 1;
    }
    if (i > 0 && D(i - 1, j) < best) {
      best = D(i - 1, j);
      ni = i - 1;
      nj = j;
    }
    if (j > 0 && D(i, j - 1) < best) {
      best = D(i, j - 1);
      ni = i;
      nj = j - 1;
    }
    i = ni;
    j = nj;
    out.path.emplace_back(i, j);
  }
  std::reverse(out.path.begin(), out.path.end());
  return out;
}

// Average consecutive pairs; an odd trailing sample is dropped.
std::vector<double> coarsen(const SeriesView& s) {
  const std::size_t half = s.length / 2;
  std::vector<double> out(half * s.dims);
  for (std::size_t t = 0; t < half; ++t)
    for (std::size_t c = 0; c < s.dims; ++c)
      out[t * s.dims + c] = 0.5 * (s.at(2 * t, c) + s.at(2 * t + 1, c));
  return out;
}

Window expand_window(const WarpPath& coarse_path, std::size_t n, std::size_t m, std::size_t radius) {
  Window win{std::vector<std::size_t>(n, m), std::vector<std::size_t>(n, 0)};
  const auto r = static_cast<std::ptrdiff_t>(radius);
  for (const auto& [ci, cj] : coarse_path) {
    for (std::ptrdiff_t di = -r; di <= r; ++di) {
      const std::ptrdiff_t ii = static_cast<std::ptrdiff_t>(ci) + di;
      if (ii < 0) continue;
      const std::ptrdiff_t jlo = std::max<std::ptrdiff_t>(0, static_cast<std::ptrdiff_t>(cj) - r);
      const std::ptrdiff_t jhi = static_cast<std::ptrdiff_t>(cj) + r;
      const auto col_lo = static_cast<std::size_t>(2 * jlo);
      if (col_lo >= m) continue;
      const std::size_t col_hi = std::min(m - 1, static_cast<std::size_t>(2 * jhi + 1));
      for (std::size_t row = 2 * static_cast<std::size_t>(ii); row <= 2 * static_cast<std::size_t>(ii) + 1; ++row) {
        if (row >= n) break;
        win.lo[row] = std::min(win.lo[row], col_lo);
        win.hi[row] = std::max(win.hi[row], col_hi);
      }
    }
  }
  for (std::size_t i = 0; i < n; ++i)
    if (win.lo[i] > win.hi[i]) throw NumericError("FastDTW window left a row uncovered");
  return win;
}

DtwResult fastdtw_rec(const SeriesView& a, const SeriesView& b, std::size_t radius) {
  const std::size_t min_size = radius + 2;
  if (a.length < min_size || b.length < min_size)
    return dtw_windowed(a, b, full_window(a.length, b.length), true);
  const auto ca = coarsen(a);
  const auto cb = coarsen(b);
  const SeriesView va{ca, a.length / 2, a.dims};
  const SeriesView vb{cb, b.length / 2, b.dims};
  const auto low = fastdtw_rec(va, vb, radius);
  return dtw_windowed(a, b, expand_window(low.path, a.length, b.length, radius), true);
}

}  // namespace

double dtw(const SeriesView& a, const SeriesView& b, std::size_t band) {
  check_pair(a, b);
  const auto win = band ? band_window(a.length, b.length, band) : full_window(a.length, b.length);
  return dtw_windowed(a, b, win, false).cost;
}

DtwResult dtw_path(const SeriesView& a, const SeriesView& b, std::size_t band) {
  check_pair(a, b);
  const auto win = band ? band_window(a.length, b.length, band) : full_window(a.length, b.length);
  return dtw_windowed(a, b, win, true);
}

DtwResult fastdtw_path(const SeriesView& a, const SeriesView& b, std::size_t radius) {
  check_pair(a, b);
  if (radius < 1) throw UsageError("FastDTW radius must be >= 1");
  return fastdtw_rec(a, b, radius);
}

double fastdtw(const SeriesView& a, const SeriesView& b, std::size_t radius) {
  return fastdtw_path(a, b, radius).cost;
}

double tam_from_path(const WarpPath& path, std::size_t len_a, std::size_t len_b, const TamWeights& weights) {
  std::size_t advance = 0, delay = 0, phase = 0;
  for (std::size_t k = 1; k < path.size(); ++k) {
    const bool same_a = path[k].first == path[k - 1].first;
    const bool same_b = path[k].second == path[k - 1].second;
    if (same_a) ++delay;
    if (same_b) ++advance;
    if (!same_a && !same_b) ++phase;
  }
  const double span_a = static_cast<double>(len_a - 1);
  const double span_b = static_cast<double>(len_b - 1);
  const double span_min = std::min(span_a, span_b);
  const double p_advance = span_a > 0 ? static_cast<double>(advance) / span_a : 0.0;
  const double p_delay = span_b > 0 ? static_cast<double>(delay) / span_b : 0.0;
  const double p_phase = span_min > 0 ? static_cast<double>(phase) / span_min : 1.0;
  return weights.advance * p_advance + weights.delay * p_delay + weights.phase * (1.0 - p_phase);
}

double tam(const SeriesView& a, const SeriesView& b, const TamWeights& weights) {
  const auto res = dtw_path(a, b);
  return tam_from_path(res.path, a.length, b.length, weights);
}

double euclidean(const SeriesView& a, const SeriesView& b) {
  check_pair(a, b);
  const std::size_t n = std::min(a.length, b.length) * a.dims;
  double s = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double d = a.values[k] - b.values[k];
    s += d * d;
  }
  return std::sqrt(s);
}

double cosine_dist(const SeriesView& a, const SeriesView& b) {
  check_pair(a, b);
  const std::size_t n = std::min(a.length, b.length) * a.dims;
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    dot += a.values[k] * b.values[k];
    na += a.values[k] * a.values[k];
    nb += b.values[k] * b.values[k];
  }
  if (na == 0.0 || nb == 0.0) throw NumericError("cosine distance of a zero-norm series");
  const double cos = dot / std::sqrt(na * nb);
  return std::clamp(1.0 - cos, 0.0, 2.0);
}

double distance(Metric metric, const SeriesView& a, const SeriesView& b, const DistanceParams& params) {
  switch (metric) {
    case Metric::Cosine: return cosine_dist(a, b);
    case Metric::Euclidean: return euclidean(a, b);
    case Metric::Dtw: return dtw(a, b, params.dtw_band);
    case Metric::FastDtw: return fastdtw(a, b, params.fastdtw_radius);
    case Metric::Tam: return tam(a, b, params.tam);
  }
  throw UsageError("unknown metric");
}

}  // namespace softclt
