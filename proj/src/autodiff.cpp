#include "softclt/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "softclt/error.hpp"

namespace softclt {

const Tensor& Var::value() const { return tape_->value(id_); }
const Tensor& Var::grad() const { return tape_->grad(id_); }
bool Var::requires_grad() const { return tape_->requires_grad(id_); }

Var Tape::push(Tensor value, bool requires_grad, Backward backward) {
  nodes_.push_back(Node{std::move(value), Tensor{}, requires_grad, std::move(backward)});
  return Var(this, nodes_.size() - 1);
}

Var Tape::record(Tensor value, std::span<const Var> parents, Backward backward) {
  bool needs = false;
  for (const auto& p : parents) {
    if (p.tape() != this) throw Error("operands recorded on different tapes");
    needs = needs || nodes_[p.id()].requires_grad;
  }
  return push(std::move(value), needs, needs ? std::move(backward) : Backward{});
}

const Tensor& Tape::grad(std::size_t id) const {
  const auto& g = nodes_[id].grad;
  return g.size() ? g : empty_;
}

Tensor& Tape::grad_buffer(std::size_t id) {
  auto& n = nodes_[id];
  if (n.grad.size() != n.value.size() || n.grad.shape() != n.value.shape()) n.grad = Tensor(n.value.shape());
  return n.grad;
}

void Tape::backward(Var root) {
  if (root.tape() != this) throw Error("backward root belongs to another tape");
  if (nodes_[root.id()].value.size() != 1)
    throw ShapeError("backward needs a scalar root, got shape " + shape_str(nodes_[root.id()].value.shape()));
  for (auto& n : nodes_) n.grad = Tensor{};
  grad_buffer(root.id())[0] = 1.0;
  for (std::size_t k = root.id() + 1; k-- > 0;) {
    auto& n = nodes_[k];
    if (n.backward && n.grad.size()) n.backward(*this, k);
  }
}

namespace ad {

namespace {

void require_same_shape(const Var& a, const Var& b, const char* op) {
  if (a.shape() != b.shape())
    throw ShapeError(std::string(op) + ": shape mismatch " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
}

Tape& tape_of(const Var& a) {
  if (!a) throw Error("operation on an empty Var");
  return *a.tape();
}

// Elementwise unary op with derivative computed from (input, output).
template <typename F, typename DF>
Var unary(Var a, F f, DF df) {
  Tape& tape = tape_of(a);
  Tensor out(a.shape());
  const auto& x = a.value();
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = f(x[i]);
  const Var parents[] = {a};
  return tape.record(std::move(out), parents, [a, df](Tape& t, std::size_t self) {
    if (!a.requires_grad()) return;
    const auto& g = t.grad(self);
    const auto& x = t.value(a.id());
    const auto& y = t.value(self);
    auto& ga = t.grad_buffer(a.id());
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * df(x[i], y[i]);
  });
}

// [outer, axis, inner] factorisation of a shape around `axis`.
struct AxisSplit {
  std::size_t outer = 1, extent = 1, inner = 1;
};

AxisSplit split_at(const Shape& shape, std::size_t axis) {
  AxisSplit s;
  for (std::size_t i = 0; i < axis; ++i) s.outer *= shape[i];
  s.extent = shape[axis];
  for (std::size_t i = axis + 1; i < shape.size(); ++i) s.inner *= shape[i];
  return s;
}

}  // namespace

Var add(Var a, Var b) {
  require_same_shape(a, b, "add");
  Tensor out(a.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.value()[i] + b.value()[i];
  const Var parents[] = {a, b};
  return tape_of(a).record(std::move(out), parents, [a, b](Tape& t, std::size_t self) {
    const auto& g = t.grad(self);
    for (const Var& p : {a, b}) {
      if (!p.requires_grad()) continue;
      auto& gp = t.grad_buffer(p.id());
      for (std::size_t i = 0; i < g.size(); ++i) gp[i] += g[i];
    }
  });
}

Var sub(Var a, Var b) { return add(a, scale(b, -1.0)); }

Var mul(Var a, Var b) {
  require_same_shape(a, b, "mul");
  Tensor out(a.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.value()[i] * b.value()[i];
  const Var parents[] = {a, b};
  return tape_of(a).record(std::move(out), parents, [a, b](Tape& t, std::size_t self) {
    const auto& g = t.grad(self);
    if (a.requires_grad()) {
      auto& ga = t.grad_buffer(a.id());
      const auto& vb = t.value(b.id());
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * vb[i];
    }
    if (b.requires_grad()) {
      auto& gb = t.grad_buffer(b.id());
      const auto& va = t.value(a.id());
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * va[i];
    }
  });
}

Var scale(Var a, double c) {
  return unary(a, [c](double x) { return c * x; }, [c](double, double) { return c; });
}

Var add_scalar(Var a, double c) {
  return unary(a, [c](double x) { return x + c; }, [](double, double) { return 1.0; });
}

Var matmul(Var a, Var b) {
  const auto& A = a.value();
  const auto& B = b.value();
  if (A.rank() != 2 || B.rank() != 2 || A.dim(1) != B.dim(0))
    throw ShapeError("matmul: incompatible shapes " + shape_str(A.shape()) + " x " + shape_str(B.shape()));
  const std::size_t n = A.dim(0), k = A.dim(1), m = B.dim(1);
  Tensor out(Shape{n, m});
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t p = 0; p < k; ++p) {
      const double av = A.at(i, p);
      for (std::size_t j = 0; j < m; ++j) out.at(i, j) += av * B.at(p, j);
    }
  const Var parents[] = {a, b};
  return tape_of(a).record(std::move(out), parents, [a, b, n, k, m](Tape& t, std::size_t self) {
    const auto& g = t.grad(self);
    const auto& A = t.value(a.id());
    const auto& B = t.value(b.id());
    if (a.requires_grad()) {
      auto& ga = t.grad_buffer(a.id());
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t p = 0; p < k; ++p) {
          double s = 0.0;
          for (std::size_t j = 0; j < m; ++j) s += g.at(i, j) * B.at(p, j);
          ga.at(i, p) += s;
        }
    }
    if (b.requires_grad()) {
      auto& gb = t.grad_buffer(b.id());
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t p = 0; p < k; ++p) {
          const double av = A.at(i, p);
          for (std::size_t j = 0; j < m; ++j) gb.at(p, j) += av * g.at(i, j);
        }
    }
  });
}

Var dot(Var a, Var b) {
  if (a.value().rank() != 1) throw ShapeError("dot expects rank-1 operands");
  require_same_shape(a, b, "dot");
  double s = 0.0;
  for (std::size_t i = 0; i < a.value().size(); ++i) s += a.value()[i] * b.value()[i];
  const Var parents[] = {a, b};
  return tape_of(a).record(Tensor::scalar(s), parents, [a, b](Tape& t, std::size_t self) {
    const double g = t.grad(self)[0];
    if (a.requires_grad()) {
      auto& ga = t.grad_buffer(a.id());
      const auto& vb = t.value(b.id());
      for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g * vb[i];
    }
    if (b.requires_grad()) {
      auto& gb = t.grad_buffer(b.id());
      const auto& va = t.value(a.id());
      for (std::size_t i = 0; i < gb.size(); ++i) gb[i] += g * va[i];
    }
  });
}

Var relu(Var a) {
  return unary(a, [](double x) { return x > 0.0 ? x : 0.0; },
               [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Var gelu(Var a) {
  constexpr double inv_sqrt2 = 0.70710678118654752440;
  constexpr double inv_sqrt_2pi = 0.39894228040143267794;
  return unary(
      a, [](double x) { return 0.5 * x * (1.0 + std::erf(x * inv_sqrt2)); },
      [](double x, double) {
        return 0.5 * (1.0 + std::erf(x * inv_sqrt2)) + x * inv_sqrt_2pi * std::exp(-0.5 * x * x);
      });
}

Var exp(Var a) {
  return unary(a, [](double x) { return std::exp(x); }, [](double, double y) { return y; });
}

Var log(Var a) {
  for (double x : a.value().data())
    if (!(x > 0.0)) throw NumericError("log of a nonpositive value");
  return unary(a, [](double x) { return std::log(x); }, [](double x, double) { return 1.0 / x; });
}

Var sum(Var a) {
  double s = 0.0;
  for (double x : a.value().data()) s += x;
  const Var parents[] = {a};
  return tape_of(a).record(Tensor::scalar(s), parents, [a](Tape& t, std::size_t self) {
    const double g = t.grad(self)[0];
    auto& ga = t.grad_buffer(a.id());
    for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g;
  });
}

Var mean(Var a) {
  if (a.value().size() == 0) throw ShapeError("mean of an empty tensor");
  return scale(sum(a), 1.0 / static_cast<double>(a.value().size()));
}

Var softmax_rows(Var a) {
  const auto& x = a.value();
  if (x.rank() != 2) throw ShapeError("softmax_rows expects a rank-2 tensor");
  const std::size_t n = x.dim(0), k = x.dim(1);
  Tensor out(x.shape());
  for (std::size_t i = 0; i < n; ++i) {
    double mx = -INFINITY;
    for (std::size_t j = 0; j < k; ++j) mx = std::max(mx, x.at(i, j));
    double z = 0.0;
    for (std::size_t j = 0; j < k; ++j) z += (out.at(i, j) = std::exp(x.at(i, j) - mx));
    for (std::size_t j = 0; j < k; ++j) out.at(i, j) /= z;
  }
  const Var parents[] = {a};
  return tape_of(a).record(std::move(out), parents, [a, n, k](Tape& t, std::size_t self) {
    const auto& g = t.grad(self);
    const auto& y = t.value(self);
    auto& ga = t.grad_buffer(a.id());
    for (std::size_t i = 0; i < n; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < k; ++j) s += g.at(i, j) * y.at(i, j);
      for (std::size_t j = 0; j < k; ++j) ga.at(i, j) += y.at(i, j) * (g.at(i, j) - s);
    }
  });
}

Var reshape(Var a, Shape shape) {
  Tensor out = a.value().reshaped(std::move(shape));
  const Var parents[] = {a};
  return tape_of(a).record(std::move(out), parents, [a](Tape& t, std::size_t self) {
    const auto& g = t.grad(self);
    auto& ga = t.grad_buffer(a.id());
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
  });
}

Var transpose01(Var a) {
  const auto& x = a.value();
  if (x.rank() != 2 && x.rank() != 3) throw ShapeError("transpose01 expects rank 2 or 3");
  const std::size_t d0 = x.dim(0), d1 = x.dim(1), inner = x.rank() == 3 ? x.dim(2) : 1;
  Shape shape = x.shape();
  std::swap(shape[0], shape[1]);
  Tensor out(shape);
  for (std::size_t i = 0; i < d0; ++i)
    for (std::size_t j = 0; j < d1; ++j)
      std::copy_n(x.data().begin() + (i * d1 + j) * inner, inner, out.data().begin() + (j * d0 + i) * inner);
  const Var parents[] = {a};
  return tape_of(a).record(std::move(out), parents, [a, d0, d1, inner](Tape& t, std::size_t self) {
    const auto& g = t.grad(self);
    auto& ga = t.grad_buffer(a.id());
    for (std::size_t i = 0; i < d0; ++i)
      for (std::size_t j = 0; j < d1; ++j)
        for (std::size_t c = 0; c < inner; ++c) ga[(i * d1 + j) * inner + c] += g[(j * d0 + i) * inner + c];
  });
}

Var concat(std::span<const Var> parts, std::size_t axis) {
  if (parts.empty()) throw ShapeError("concat of zero tensors");
  const Shape& first = parts[0].shape();
  if (axis >= first.size()) throw ShapeError("concat axis out of range");
  Shape shape = first;
  shape[axis] = 0;
  for (const auto& p : parts) {
    const Shape& s = p.shape();
    if (s.size() != first.size()) throw ShapeError("concat: rank mismatch");
    for (std::size_t d = 0; d < s.size(); ++d)
      if (d != axis && s[d] != first[d]) throw ShapeError("concat: shape mismatch off the concat axis");
    shape[axis] += s[axis];
  }
  Tensor out(shape);
  const auto outer = split_at(shape, axis);
  std::vector<std::size_t> offsets;
  std::size_t offset = 0;
  for (const auto& p : parts) {
    const auto sp = split_at(p.shape(), axis);
    const std::size_t chunk = sp.extent * sp.inner;
    for (std::size_t o = 0; o < sp.outer; ++o)
      std::copy_n(p.value().data().begin() + o * chunk, chunk,
                  out.data().begin() + (o * outer.extent + offset) * outer.inner);
    offsets.push_back(offset);
    offset += sp.extent;
  }
  std::vector<Var> ps(parts.begin(), parts.end());
  return tape_of(parts[0]).record(std::move(out), parts, [ps, offsets, axis, outer](Tape& t, std::size_t self) {
    const auto& g = t.grad(self);
    for (std::size_t k = 0; k < ps.size(); ++k) {
      if (!ps[k].requires_grad()) continue;
      auto& gp = t.grad_buffer(ps[k].id());
      const auto sp = split_at(gp.shape(), axis);
      const std::size_t chunk = sp.extent * sp.inner;
      for (std::size_t o = 0; o < sp.outer; ++o) {
        const double* src = g.data().data() + (o * outer.extent + offsets[k]) * outer.inner;
        double* dst = gp.data().data() + o * chunk;
        for (std::size_t i = 0; i < chunk; ++i) dst[i] += src[i];
      }
    }
  });
}

Var slice(Var a, std::size_t axis, std::size_t start, std::size_t length) {
  const Shape& in_shape = a.shape();
  if (axis >= in_shape.size()) throw ShapeError("slice axis out of range");
  if (start + length > in_shape[axis] || length == 0)
    throw ShapeError("slice [" + std::to_string(start) + ", +" + std::to_string(length) + ") out of range for " +
                     shape_str(in_shape));
  Shape shape = in_shape;
  shape[axis] = length;
  const auto sp = split_at(in_shape, axis);
  Tensor out(shape);
  for (std::size_t o = 0; o < sp.outer; ++o)
    std::copy_n(a.value().data().begin() + (o * sp.extent + start) * sp.inner, length * sp.inner,
                out.data().begin() + o * length * sp.inner);
  const Var parents[] = {a};
  return tape_of(a).record(std::move(out), parents, [a, sp, start, length](Tape& t, std::size_t self) {
    const auto& g = t.grad(self);
    auto& ga = t.grad_buffer(a.id());
    for (std::size_t o = 0; o < sp.outer; ++o) {
      const double* src = g.data().data() + o * length * sp.inner;
      double* dst = ga.data().data() + (o * sp.extent + start) * sp.inner;
      for (std::size_t i = 0; i < length * sp.inner; ++i) dst[i] += src[i];
    }
  });
}

Var conv1d(Var x, Var kernel, Var bias, std::size_t dilation) {
  const auto& X = x.value();
  const auto& W = kernel.value();
  const auto& Bv = bias.value();
  if (X.rank() != 3 || W.rank() != 3 || Bv.rank() != 1)
    throw ShapeError("conv1d expects x [B,L,C_in], kernel [K,C_in,C_out], bias [C_out]");
  const std::size_t B = X.dim(0), L = X.dim(1), cin = X.dim(2);
  const std::size_t K = W.dim(0), cout = W.dim(2);
  if (W.dim(1) != cin || Bv.dim(0) != cout)
    throw ShapeError("conv1d: kernel " + shape_str(W.shape()) + " incompatible with input " + shape_str(X.shape()));
  if (K % 2 == 0) throw ShapeError("conv1d: kernel size must be odd");
  if (dilation < 1) throw ShapeError("conv1d: dilation must be >= 1");
  const auto pad = static_cast<std::ptrdiff_t>(dilation * (K - 1) / 2);

  Tensor out(Shape{B, L, cout});
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t t = 0; t < L; ++t) {
      double* y = &out.at(b, t, 0);
      for (std::size_t o = 0; o < cout; ++o) y[o] = Bv[o];
      for (std::size_t k = 0; k < K; ++k) {
        const std::ptrdiff_t s = static_cast<std::ptrdiff_t>(t + k * dilation) - pad;
        if (s < 0 || s >= static_cast<std::ptrdiff_t>(L)) continue;
        const double* xr = &X.at(b, static_cast<std::size_t>(s), 0);
        for (std::size_t c = 0; c < cin; ++c) {
          const double xv = xr[c];
          const double* w = &W.at(k, c, 0);
          for (std::size_t o = 0; o < cout; ++o) y[o] += xv * w[o];
        }
      }
    }

  const Var parents[] = {x, kernel, bias};
  return tape_of(x).record(
      std::move(out), parents, [x, kernel, bias, B, L, cin, K, cout, dilation, pad](Tape& t, std::size_t self) {
        const auto& G = t.grad(self);
        const auto& X = t.value(x.id());
        const auto& W = t.value(kernel.id());
        Tensor* gx = x.requires_grad() ? &t.grad_buffer(x.id()) : nullptr;
        Tensor* gw = kernel.requires_grad() ? &t.grad_buffer(kernel.id()) : nullptr;
        if (bias.requires_grad()) {
          auto& gb = t.grad_buffer(bias.id());
          for (std::size_t b = 0; b < B; ++b)
            for (std::size_t tt = 0; tt < L; ++tt)
              for (std::size_t o = 0; o < cout; ++o) gb[o] += G.at(b, tt, o);
        }
        if (!gx && !gw) return;
        for (std::size_t b = 0; b < B; ++b)
          for (std::size_t tt = 0; tt < L; ++tt) {
            const double* g = &G.at(b, tt, 0);
            for (std::size_t k = 0; k < K; ++k) {
              const std::ptrdiff_t s = static_cast<std::ptrdiff_t>(tt + k * dilation) - pad;
              if (s < 0 || s >= static_cast<std::ptrdiff_t>(L)) continue;
              const auto su = static_cast<std::size_t>(s);
              for (std::size_t c = 0; c < cin; ++c) {
                const double* w = &W.at(k, c, 0);
                if (gx) {
                  double acc = 0.0;
                  for (std::size_t o = 0; o < cout; ++o) acc += g[o] * w[o];
                  gx->at(b, su, c) += acc;
                }
                if (gw) {
                  const double xv = X.at(b, su, c);
                  double* dw = &gw->at(k, c, 0);
                  for (std::size_t o = 0; o < cout; ++o) dw[o] += xv * g[o];
                }
              }
            }
          }
      });
}

Var max_pool1d(Var x, std::size_t m) {
  if (m < 1) throw ShapeError("max_pool1d: kernel must be >= 1");
  const Shape& in_shape = x.shape();
  if (in_shape.empty()) throw ShapeError("max_pool1d needs rank >= 1");
  const std::size_t axis = in_shape.size() == 1 ? 0 : in_shape.size() - 2;
  const auto sp = split_at(in_shape, axis);
  const std::size_t out_len = (sp.extent + m - 1) / m;
  Shape shape = in_shape;
  shape[axis] = out_len;
  Tensor out(shape);
  std::vector<std::size_t> argmax(out.size());
  const auto& X = x.value();
  for (std::size_t o = 0; o < sp.outer; ++o)
    for (std::size_t w = 0; w < out_len; ++w)
      for (std::size_t c = 0; c < sp.inner; ++c) {
        const std::size_t begin = w * m, end = std::min(sp.extent, begin + m);
        std::size_t best = (o * sp.extent + begin) * sp.inner + c;
        for (std::size_t l = begin + 1; l < end; ++l) {
          const std::size_t idx = (o * sp.extent + l) * sp.inner + c;
          if (X[idx] > X[best]) best = idx;
        }
        const std::size_t oi = (o * out_len + w) * sp.inner + c;
        out[oi] = X[best];
        argmax[oi] = best;
      }
  const Var parents[] = {x};
  return tape_of(x).record(std::move(out), parents, [x, argmax = std::move(argmax)](Tape& t, std::size_t self) {
    const auto& g = t.grad(self);
    auto& gx = t.grad_buffer(x.id());
    for (std::size_t i = 0; i < g.size(); ++i) gx[argmax[i]] += g[i];
  });
}

}  // namespace ad
}  // namespace softclt
