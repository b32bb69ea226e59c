#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "oracle.hpp"
#include "softclt/distance.hpp"
#include "softclt/error.hpp"

using namespace softclt;
namespace fs = std::filesystem;

namespace {

SeriesView view(const std::vector<double>& v, std::size_t dims = 1) { return {v, v.size() / dims, dims}; }

oracle::Series nested(const std::vector<double>& v) {
  oracle::Series s;
  for (double x : v) s.push_back({x});
  return s;
}

std::vector<double> random_series(std::mt19937_64& rng, std::size_t n) {
  std::normal_distribution<double> g;
  std::vector<double> v(n);
  for (auto& x : v) x = g(rng);
  return v;
}

TimeSeriesSet small_set(std::size_t n, std::uint64_t seed) {
  SyntheticSpec spec;
  spec.classes = default_families();
  spec.n_per_class = n;
  spec.length = 16;
  spec.seed = seed;
  return make_synthetic(spec);
}

}  // namespace

TEST_CASE("dtw: identical series and symmetry") {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 20; ++i) {
    const auto a = random_series(rng, 1 + i % 9), b = random_series(rng, 1 + (i * 7) % 11);
    CHECK(dtw(view(a), view(a)) == 0.0);
    CHECK(dtw(view(a), view(b)) == dtw(view(b), view(a)));
  }
}

TEST_CASE("dtw: hand pair agrees with path enumeration") {
  const std::vector<double> a{0, 1, 2}, b{0, 2};
  CHECK(dtw(view(a), view(b)) == oracle::brute_dtw(nested(a), nested(b)).value);
  CHECK(dtw(view(a), view(b)) == 1.0);
}

TEST_CASE("dtw_path runs corner to corner with unit steps") {
  std::mt19937_64 rng(4);
  const auto a = random_series(rng, 7), b = random_series(rng, 5);
  const auto r = dtw_path(view(a), view(b));
  CHECK(r.cost == dtw(view(a), view(b)));
  REQUIRE(!r.path.empty());
  CHECK(r.path.front() == std::pair<std::size_t, std::size_t>{0, 0});
  CHECK(r.path.back() == std::pair<std::size_t, std::size_t>{6, 4});
  for (std::size_t k = 1; k < r.path.size(); ++k) {
    const auto di = r.path[k].first - r.path[k - 1].first, dj = r.path[k].second - r.path[k - 1].second;
    CHECK(di <= 1);
    CHECK(dj <= 1);
    CHECK(di + dj >= 1);
  }
}

TEST_CASE("dtw band never beats the unconstrained cost") {
  std::mt19937_64 rng(5);
  const auto a = random_series(rng, 20), b = random_series(rng, 20);
  CHECK(dtw(view(a), view(b), 2) >= dtw(view(a), view(b)));
  CHECK(dtw(view(a), view(b), 20) == dtw(view(a), view(b)));
}

TEST_CASE("fastdtw: full radius is exact, identical series cost nothing") {
  std::mt19937_64 rng(6);
  for (int i = 0; i < 10; ++i) {
    const auto a = random_series(rng, 30 + i), b = random_series(rng, 25 + 2 * i);
    CHECK(fastdtw(view(a), view(b), std::max(a.size(), b.size())) == dtw(view(a), view(b)));
    CHECK(fastdtw(view(a), view(a), 1) == 0.0);
    CHECK(fastdtw(view(a), view(b), 1) >= dtw(view(a), view(b)));
  }
  CHECK_THROWS_AS(fastdtw(view({1.0, 2.0}), view({1.0}), 0), UsageError);
}

TEST_CASE("tam: identical series are in phase") {
  const std::vector<double> a{0.1, 0.5, -0.3, 2.0};
  CHECK(tam(view(a), view(a)) == 0.0);
}

TEST_CASE("tam: hand pair scores one of the optimal paths") {
  const std::vector<double> a{0, 1, 2}, b{0, 2};
  const double t = tam(view(a), view(b));
  bool found = false;
  for (const auto& p : oracle::brute_optimal_paths(nested(a), nested(b)))
    found = found || std::abs(oracle::tam_of_path(p, 3, 2) - t) < 1e-12;
  CHECK(found);
}

TEST_CASE("tam is symmetric with unit weights") {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 30; ++i) {
    const auto a = random_series(rng, 2 + i % 6), b = random_series(rng, 2 + (i * 5) % 7);
    CHECK(tam(view(a), view(b)) == doctest::Approx(tam(view(b), view(a))).epsilon(1e-12));
    auto path = dtw_path(view(a), view(b)).path;
    for (auto& [i1, j1] : path) std::swap(i1, j1);
    CHECK(tam_from_path(path, b.size(), a.size()) == doctest::Approx(tam(view(a), view(b))).epsilon(1e-12));
  }
}

TEST_CASE("euclidean and cosine closed forms") {
  const std::vector<double> a{1, 0}, b{0, 1}, c{-1, 0};
  CHECK(euclidean(view(a), view(a)) == 0.0);
  CHECK(cosine_dist(view(a), view(a)) == doctest::Approx(0.0).scale(1.0).epsilon(1e-15));
  CHECK(euclidean(view(a), view(b)) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-15));
  CHECK(cosine_dist(view(a), view(b)) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(cosine_dist(view(a), view(c)) == doctest::Approx(2.0).epsilon(1e-15));
}

TEST_CASE("metric names round trip") {
  for (auto m : {Metric::Cosine, Metric::Euclidean, Metric::Dtw, Metric::FastDtw, Metric::Tam})
    CHECK(parse_metric(metric_name(m)) == m);
  CHECK_THROWS_AS(parse_metric("manhattan"), UsageError);
}

TEST_CASE("pairwise: symmetric, zero diagonal, normalized range") {
  const auto set = small_set(3, 1);
  for (auto m : {Metric::Cosine, Metric::Euclidean, Metric::Dtw, Metric::FastDtw, Metric::Tam}) {
    const auto d = pairwise(set, m);
    CHECK(d.normalized());
    CHECK(d.metric() == m);
    double lo = 1.0, hi = 0.0;
    for (std::size_t i = 0; i < d.size(); ++i) {
      CHECK(d.at(i, i) == 0.0);
      for (std::size_t j = 0; j < d.size(); ++j) {
        CHECK(d.at(i, j) == d.at(j, i));
        if (i != j) lo = std::min(lo, d.at(i, j)), hi = std::max(hi, d.at(i, j));
      }
    }
    CHECK(lo == 0.0);
    CHECK(hi == 1.0);
  }
}

TEST_CASE("pairwise: parallel and serial kernels agree bitwise") {
  const auto set = small_set(4, 2);
  for (auto m : {Metric::Euclidean, Metric::Dtw, Metric::Tam})
    CHECK(pairwise_raw(set, m) == pairwise_raw_serial(set, m));
}

TEST_CASE("normalization edge cases") {
  Tensor two(Shape{2, 2});
  two.at(0, 1) = two.at(1, 0) = 3.7;
  const auto n2 = minmax_normalize(DistanceMatrix(two, Metric::Dtw, false));
  CHECK(n2.at(0, 1) == 0.0);
  CHECK(n2.at(1, 0) == 0.0);

  const auto set = TimeSeriesSet(Tensor(Shape{3, 3, 1}, std::vector<double>{1, 2, 3, 1, 2, 3, 9, 0, 4}));
  const auto d = pairwise(set, Metric::Euclidean);
  CHECK(d.at(0, 1) == 0.0);
}

TEST_CASE("submatrix picks rows and columns") {
  const auto d = pairwise(small_set(2, 3), Metric::Euclidean);
  const std::vector<std::size_t> idx{4, 1};
  const auto s = d.submatrix(idx);
  CHECK(s.size() == 2);
  CHECK(s.at(0, 1) == d.at(4, 1));
  CHECK(s.normalized() == d.normalized());
}

TEST_CASE("distance cache: round trip, truncation, CSV") {
  const auto d = pairwise_raw(small_set(2, 4), Metric::Tam);
  const fs::path p = fs::temp_directory_path() / "softclt_dist_cache.bin";
  save_matrix(d, p);
  CHECK(load_matrix(p) == d);

  const auto size = fs::file_size(p);
  fs::resize_file(p, size - 5);
  CHECK_THROWS_AS(load_matrix(p), DataError);
  std::ofstream(p) << "garbage";
  CHECK_THROWS_AS(load_matrix(p), DataError);

  const fs::path csv = fs::temp_directory_path() / "softclt_dist_cache.csv";
  export_matrix_csv(d, csv);
  std::ifstream in(csv);
  std::size_t rows = 0;
  for (std::string line; std::getline(in, line);) ++rows;
  CHECK(rows == d.size());
}

TEST_CASE("off_diagonal_stats ignores the diagonal") {
  Tensor t(Shape{3, 3}, std::vector<double>{0, 1, 2, 1, 0, 3, 2, 3, 0});
  const auto s = off_diagonal_stats(DistanceMatrix(t, Metric::Euclidean, false));
  CHECK(s.min == 1.0);
  CHECK(s.max == 3.0);
  CHECK(s.mean == doctest::Approx(2.0));
}
