#include <doctest.h>

#include <cmath>
#include <random>

#include "oracle.hpp"
#include "softclt/autodiff.hpp"
#include "softclt/error.hpp"

using namespace softclt;

namespace {

Tensor random_tensor(std::mt19937_64& rng, Shape shape) {
  std::normal_distribution<double> g;
  Tensor t(std::move(shape));
  for (auto& v : t.raw()) v = g(rng);
  return t;
}

// Max relative error of the tape gradient of f at x against central differences.
double fd_error(const std::function<Var(Tape&, Var)>& f, const Tensor& x) {
  Tape tape;
  const Var p = tape.param(x);
  tape.backward(f(tape, p));
  const Tensor analytic = tape.grad(p.id());
  const auto numeric = oracle::fd_gradient(
      [&](const std::vector<double>& v) {
        Tape t;
        return f(t, t.constant(Tensor(x.shape(), v))).value().item();
      },
      x.raw(), 1e-5);
  double worst = 0.0;
  for (std::size_t k = 0; k < numeric.size(); ++k)
    worst = std::max(worst, std::abs(analytic[k] - numeric[k]) /
                                std::max({std::abs(analytic[k]), std::abs(numeric[k]), 1e-8}));
  return worst;
}

}  // namespace

TEST_CASE("matmul by the identity") {
  Tape t;
  const Var a = t.constant(Tensor::matrix({{1, 2}, {3, 4}}));
  const Var i = t.constant(Tensor::matrix({{1, 0}, {0, 1}}));
  CHECK(ad::matmul(a, i).value() == a.value());
  CHECK_THROWS_AS(ad::matmul(a, t.constant(Tensor::matrix({{1, 2, 3}}))), ShapeError);
}

TEST_CASE("max_pool1d halves with the window max") {
  Tape t;
  CHECK(ad::max_pool1d(t.constant(Tensor::vector({1, 3, 2, 5})), 2).value() == Tensor::vector({3, 5}));
}

TEST_CASE("softmax of equal logits is uniform") {
  Tape t;
  const Var s = ad::softmax_rows(t.constant(Tensor::matrix({{0, 0, 0}})));
  for (std::size_t k = 0; k < 3; ++k) CHECK(s.value()[k] == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
}

TEST_CASE("product rule") {
  Tape t;
  const Var x = t.param(Tensor::scalar(2.0));
  const Var y = t.param(Tensor::scalar(3.0));
  t.backward(ad::mul(x, y));
  CHECK(t.grad(x.id()).item() == 3.0);
  CHECK(t.grad(y.id()).item() == 2.0);
}

TEST_CASE("relu blocks gradients of negative inputs") {
  Tape t;
  const Var x = t.param(Tensor::vector({-1.0, -0.5, 2.0}));
  t.backward(ad::sum(ad::relu(x)));
  CHECK(t.grad(x.id()) == Tensor::vector({0.0, 0.0, 1.0}));
}

TEST_CASE("log of a nonpositive value is a numeric error") {
  Tape t;
  CHECK_THROWS_AS(ad::log(t.constant(Tensor::vector({1.0, 0.0}))), NumericError);
}

TEST_CASE("gradients accumulate over shared nodes") {
  Tape t;
  const Var x = t.param(Tensor::scalar(1.5));
  t.backward(ad::add(ad::mul(x, x), x));
  CHECK(t.grad(x.id()).item() == doctest::Approx(4.0));
}

TEST_CASE("random 20-parameter graph matches finite differences") {
  std::mt19937_64 rng(10);
  const Tensor w = random_tensor(rng, {5, 3});
  const Tensor bias = random_tensor(rng, {3});
  auto f = [&](Tape& t, Var x) {
    const Var h = ad::gelu(ad::matmul(x, t.constant(w)));
    const Var s = ad::softmax_rows(h);
    const Var e = ad::exp(ad::scale(ad::relu(ad::add_scalar(h, 0.1)), 0.5));
    const Var l = ad::log(ad::add_scalar(ad::mul(s, e), 1.0));
    const Var c = ad::concat(std::vector<Var>{l, ad::sub(h, s)}, 1);
    const Var tr = ad::transpose01(ad::slice(c, 1, 1, 4));
    const Var v = ad::reshape(tr, {16});
    return ad::add(ad::mean(v), ad::dot(ad::slice(v, 0, 0, 3), t.constant(bias)));
  };
  CHECK(fd_error(f, random_tensor(rng, {4, 5})) < 1e-4);
}

TEST_CASE("conv1d and max_pool1d gradients") {
  std::mt19937_64 rng(11);
  const Tensor kernel = random_tensor(rng, {3, 2, 4});
  const Tensor bias = random_tensor(rng, {4});
  for (std::size_t dilation : {1u, 2u, 4u}) {
    auto f = [&](Tape& t, Var x) {
      const Var y = ad::conv1d(x, t.constant(kernel), t.constant(bias), dilation);
      return ad::sum(ad::mul(ad::max_pool1d(y, 2), ad::max_pool1d(y, 2)));
    };
    CHECK(fd_error(f, random_tensor(rng, {2, 7, 2})) < 1e-4);
  }
  const Tensor input = random_tensor(rng, {1, 6, 2});
  auto through_kernel = [&](Tape& t, Var k) {
    const Var y = ad::conv1d(t.constant(input), k, t.constant(bias), 2);
    return ad::sum(ad::mul(y, y));
  };
  CHECK(fd_error(through_kernel, kernel) < 1e-4);
}

TEST_CASE("backward requires a scalar root") {
  Tape t;
  const Var x = t.param(Tensor::vector({1.0, 2.0}));
  CHECK_THROWS(t.backward(ad::relu(x)));
}
