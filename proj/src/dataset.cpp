#include "softclt/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include "softclt/error.hpp"
#include "softclt/rng.hpp"

namespace softclt {

TimeSeriesSet::TimeSeriesSet(Tensor values, std::vector<std::size_t> lengths,
                             std::optional<std::vector<int>> labels,
                             std::vector<std::string> names)
    : values_(std::move(values)),
      lengths_(std::move(lengths)),
      labels_(std::move(labels)),
      names_(std::move(names)) {
  if (values_.rank() != 3) throw ShapeError("series values must be [N, T, D], got " + shape_str(values_.shape()));
  if (values_.dim(0) != lengths_.size()) throw DataError("length vector does not match N");
  if (values_.dim(0) == 0) throw DataError("empty series set");
  for (auto len : lengths_)
    if (len < 1 || len > values_.dim(1)) throw DataError("series length out of range [1, T_max]");
  if (labels_ && labels_->size() != lengths_.size()) throw DataError("label count does not match N");
  if (!names_.empty() && names_.size() != lengths_.size()) throw DataError("name count does not match N");
}

TimeSeriesSet::TimeSeriesSet(Tensor values, std::optional<std::vector<int>> labels)
    : TimeSeriesSet(values, std::vector<std::size_t>(values.rank() == 3 ? values.dim(0) : 0,
                                                     values.rank() == 3 ? values.dim(1) : 0),
                    std::move(labels)) {}

std::size_t TimeSeriesSet::min_length() const {
  return *std::min_element(lengths_.begin(), lengths_.end());
}

SeriesView TimeSeriesSet::series(std::size_t i) const {
  const std::size_t stride = max_length() * dims();
  return SeriesView{values_.data().subspan(i * stride, lengths_[i] * dims()), lengths_[i], dims()};
}

TimeSeriesSet TimeSeriesSet::subset(std::span<const std::size_t> indices) const {
  const std::size_t stride = max_length() * dims();
  Tensor out(Shape{indices.size(), max_length(), dims()});
  std::vector<std::size_t> lengths;
  std::optional<std::vector<int>> labels;
  if (labels_) labels.emplace();
  std::vector<std::string> names;
  for (std::size_t k = 0; k < indices.size(); ++k) {
    const std::size_t i = indices[k];
    if (i >= size()) throw DataError("subset index out of range");
    std::copy_n(values_.data().begin() + i * stride, stride, out.data().begin() + k * stride);
    lengths.push_back(lengths_[i]);
    if (labels_) labels->push_back((*labels_)[i]);
    if (!names_.empty()) names.push_back(names_[i]);
  }
  return TimeSeriesSet(std::move(out), std::move(lengths), std::move(labels), std::move(names));
}

namespace {

bool is_missing(std::string_view cell) {
  if (cell.empty()) return true;
  if (cell.size() != 3) return false;
  auto lower = [](char c) { return static_cast<char>(std::tolower(static_cast<unsigned char>(c))); };
  return lower(cell[0]) == 'n' && lower(cell[1]) == 'a' && lower(cell[2]) == 'n';
}

double parse_number(std::string_view cell, std::size_t line_no) {
  double v = 0.0;
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  if (!cell.empty() && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last || !std::isfinite(v))
    throw DataError("line " + std::to_string(line_no) + ": non-numeric cell '" + std::string(cell) + "'");
  return v;
}

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find('\t', start);
    cells.push_back(line.substr(start, pos == std::string_view::npos ? line.npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return cells;
}

}  // namespace

TimeSeriesSet load_ucr_tsv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());

  std::vector<std::vector<double>> rows;
  std::vector<int> labels;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = split_tabs(line);
    if (cells.size() < 2)
      throw DataError("line " + std::to_string(line_no) + ": expected label and at least one value");
    const double label = parse_number(cells[0], line_no);
    if (label != std::floor(label) || std::abs(label) > 1e9)
      throw DataError("line " + std::to_string(line_no) + ": label is not an integer");
    labels.push_back(static_cast<int>(label));

    std::size_t valid = cells.size() - 1;
    while (valid > 0 && is_missing(cells[valid])) --valid;
    if (valid == 0) throw DataError("line " + std::to_string(line_no) + ": series has no values");
    std::vector<double> row;
    row.reserve(valid);
    for (std::size_t c = 1; c <= valid; ++c) {
      if (is_missing(cells[c]))
        throw DataError("line " + std::to_string(line_no) + ": interior missing value at column " +
                        std::to_string(c));
      row.push_back(parse_number(cells[c], line_no));
    }
    rows.push_back(std::move(row));
  }
  if (in.bad()) throw DataError("read error on " + path.string());
  if (rows.empty()) throw DataError("empty file " + path.string());

  std::size_t t_max = 0;
  for (const auto& r : rows) t_max = std::max(t_max, r.size());
  Tensor values(Shape{rows.size(), t_max, 1});
  std::vector<std::size_t> lengths;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    std::copy(rows[i].begin(), rows[i].end(), values.data().begin() + i * t_max);
    lengths.push_back(rows[i].size());
  }
  return TimeSeriesSet(std::move(values), std::move(lengths), std::move(labels));
}

void save_ucr_tsv(const TimeSeriesSet& set, const std::filesystem::path& path) {
  if (set.dims() != 1) throw DataError("UCR TSV holds univariate series only");
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  char buf[32];
  for (std::size_t i = 0; i < set.size(); ++i) {
    out << (set.labels() ? (*set.labels())[i] : 0);
    const auto s = set.series(i);
    for (std::size_t t = 0; t < set.max_length(); ++t) {
      if (t < s.length) {
        auto [end, ec] = std::to_chars(buf, buf + sizeof buf, s.at(t, 0));
        out << '\t' << std::string_view(buf, end - buf);
      } else {
        out << "\tNaN";
      }
    }
    out << '\n';
  }
  if (!out) throw DataError("write error on " + path.string());
}

TimeSeriesSet znormalize(const TimeSeriesSet& set) {
  Tensor values = set.values();
  const std::size_t t_max = set.max_length();
  const std::size_t dims = set.dims();
  for (std::size_t i = 0; i < set.size(); ++i) {
    const std::size_t len = set.lengths()[i];
    for (std::size_t c = 0; c < dims; ++c) {
      double mean = 0.0;
      for (std::size_t t = 0; t < len; ++t) mean += values.at(i, t, c);
      mean /= static_cast<double>(len);
      double var = 0.0;
      for (std::size_t t = 0; t < len; ++t) {
        const double d = values.at(i, t, c) - mean;
        var += d * d;
      }
      const double sd = std::sqrt(var / static_cast<double>(len));
      const bool constant = sd <= 1e-12 * (1.0 + std::abs(mean));
      for (std::size_t t = 0; t < len; ++t)
        values.at(i, t, c) = constant ? 0.0 : (values.at(i, t, c) - mean) / sd;
      for (std::size_t t = len; t < t_max; ++t) values.at(i, t, c) = 0.0;
    }
  }
  return TimeSeriesSet(std::move(values), set.lengths(), set.labels(), set.names());
}

std::vector<ClassFamily> default_families() {
  return {{WaveShape::Sine, 1.0}, {WaveShape::Sine, 4.0}, {WaveShape::Square, 2.0}};
}

namespace {

double wave(WaveShape shape, double theta) {
  switch (shape) {
    case WaveShape::Sine:
      return std::sin(theta);
    case WaveShape::Square:
      return std::sin(theta) >= 0.0 ? 1.0 : -1.0;
    case WaveShape::Sawtooth: {
      const double u = theta / (2.0 * std::numbers::pi);
      return 2.0 * (u - std::floor(u)) - 1.0;
    }
  }
  return 0.0;
}

}  // namespace

TimeSeriesSet make_synthetic(const SyntheticSpec& spec) {
  if (spec.n_per_class < 1) throw UsageError("synthetic: n_per_class must be >= 1");
  if (spec.length < 8) throw UsageError("synthetic: length must be >= 8");
  if (spec.classes.empty()) throw UsageError("synthetic: at least one class family required");
  if (!(spec.noise_std >= 0.0)) throw UsageError("synthetic: noise_std must be >= 0");
  if (!(spec.phase_jitter >= 0.0)) throw UsageError("synthetic: phase_jitter must be >= 0");
  for (const auto& c : spec.classes)
    if (!(c.frequency > 0.0)) throw UsageError("synthetic: class frequency must be > 0");

  const std::size_t n_classes = spec.classes.size();
  const std::size_t n = spec.n_per_class * n_classes;
  Tensor values(Shape{n, spec.length, 1});
  std::vector<int> labels(n);
  Rng rng(spec.seed, "synthetic");
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t c = k % n_classes;
    labels[k] = static_cast<int>(c);
    const auto& fam = spec.classes[c];
    const double phase = (2.0 * rng.uniform() - 1.0) * spec.phase_jitter;
    std::normal_distribution<double> noise(0.0, 1.0);
    for (std::size_t t = 0; t < spec.length; ++t) {
      const double theta = 2.0 * std::numbers::pi * fam.frequency * static_cast<double>(t) /
                               static_cast<double>(spec.length) + phase;
      double v = wave(fam.shape, theta);
      if (spec.noise_std > 0.0) v += spec.noise_std * noise(rng);
      values.at(k, t, 0) = v;
    }
  }
  return TimeSeriesSet(std::move(values), std::move(labels));
}

ViewPair crop_two_views(const TimeSeriesSet& set, std::uint64_t seed, CropOptions options) {
  const std::size_t T = set.min_length();
  if (T < 4) throw DataError("crop_two_views: every series needs at least 4 timestamps");

  std::size_t len = T, sa = 0, sb = 0;
  if (!options.full_length) {
    Rng rng(seed, "crop");
    len = rng.uniform_int((T + 1) / 2, T);
    sa = rng.uniform_int(0, T - len);
    const std::size_t lo = sa >= len - 1 ? sa - (len - 1) : 0;
    const std::size_t hi = std::min(T - len, sa + len - 1);
    sb = rng.uniform_int(lo, hi);
  }

  const std::size_t n = set.size();
  const std::size_t dims = set.dims();
  ViewPair vp;
  vp.view_a = Tensor(Shape{n, len, dims});
  vp.view_b = Tensor(Shape{n, len, dims});
  for (std::size_t i = 0; i < n; ++i) {
    const auto s = set.series(i);
    std::copy_n(s.values.begin() + sa * dims, len * dims, vp.view_a.data().begin() + i * len * dims);
    std::copy_n(s.values.begin() + sb * dims, len * dims, vp.view_b.data().begin() + i * len * dims);
  }
  const std::size_t start = std::max(sa, sb);
  vp.crop_start_a = sa;
  vp.crop_start_b = sb;
  vp.overlap_start_a = start - sa;
  vp.overlap_start_b = start - sb;
  vp.overlap_len = std::min(sa, sb) + len - start;
  return vp;
}

TimeSeriesSet make_windows(std::span<const double> series, std::size_t window) {
  if (series.empty()) throw DataError("make_windows: empty series");
  if (window < 1) throw UsageError("make_windows: window must be >= 1");
  std::size_t count = series.size() / window;
  std::size_t len = window;
  if (count == 0) {
    count = 1;
    len = series.size();
  }
  Tensor values(Shape{count, len, 1});
  std::copy_n(series.begin(), count * len, values.data().begin());
  return TimeSeriesSet(std::move(values));
}

}  // namespace softclt
