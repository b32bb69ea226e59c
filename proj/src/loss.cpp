#include "softclt/loss.hpp"

#include <cmath>
#include <limits>

#include "softclt/encoder.hpp"
#include "softclt/error.hpp"

namespace softclt {

void LossOptions::validate() const {
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw UsageError("lambda must lie in [0, 1]");
  if (!(temperature > 0.0)) throw UsageError("temperature must be > 0");
}

namespace {

// Row a of one group: fills probs[b] (b != a) and returns log-sum-exp.
double row_softmax(const double* reps, std::size_t K, std::size_t M, std::size_t a, double inv_temp,
                   double* sims, double* probs) {
  const double* ra = reps + a * M;
  double mx = -std::numeric_limits<double>::infinity();
  for (std::size_t b = 0; b < K; ++b) {
    if (b == a) continue;
    const double* rb = reps + b * M;
    double s = 0.0;
    for (std::size_t c = 0; c < M; ++c) s += ra[c] * rb[c];
    sims[b] = s * inv_temp;
    mx = std::max(mx, sims[b]);
  }
  double z = 0.0;
  for (std::size_t b = 0; b < K; ++b)
    if (b != a) z += std::exp(sims[b] - mx);
  const double lse = mx + std::log(z);
  for (std::size_t b = 0; b < K; ++b) probs[b] = b == a ? 0.0 : std::exp(sims[b] - lse);
  return lse;
}

void check_weights(const Tensor& w_ext, std::size_t K) {
  if (w_ext.rank() != 2 || w_ext.dim(0) != K || w_ext.dim(1) != K)
    throw ShapeError("assignment matrix " + shape_str(w_ext.shape()) + " does not match " + std::to_string(K) +
                     " candidates");
}

}  // namespace

Var contrastive_ce(Var reps, const Tensor& w_ext, double temperature) {
  const Tensor& R = reps.value();
  if (R.rank() != 3) throw ShapeError("contrastive_ce expects [G, K, M], got " + shape_str(R.shape()));
  const std::size_t G = R.dim(0), K = R.dim(1), M = R.dim(2);
  if (K < 2) throw ShapeError("contrastive_ce needs at least 2 candidates");
  check_weights(w_ext, K);
  const double inv_temp = 1.0 / temperature;

  Tensor probs(Shape{G, K, K});
  std::vector<double> sims(K);
  double total = 0.0;
  for (std::size_t g = 0; g < G; ++g) {
    const double* rg = R.data().data() + g * K * M;
    for (std::size_t a = 0; a < K; ++a) {
      double* pa = &probs.at(g, a, 0);
      const double lse = row_softmax(rg, K, M, a, inv_temp, sims.data(), pa);
      for (std::size_t b = 0; b < K; ++b)
        if (b != a && w_ext.at(a, b) != 0.0) total += w_ext.at(a, b) * (lse - sims[b]);
    }
  }
  const double norm = 1.0 / static_cast<double>(G * K);

  std::vector<double> z(K, 0.0);
  for (std::size_t a = 0; a < K; ++a)
    for (std::size_t b = 0; b < K; ++b)
      if (b != a) z[a] += w_ext.at(a, b);

  const Var parents[] = {reps};
  return reps.tape()->record(
      Tensor::scalar(total * norm), parents,
      [reps, w_ext, probs = std::move(probs), z = std::move(z), G, K, M, norm, inv_temp](Tape& t, std::size_t self) {
        const double coef = t.grad(self)[0] * norm * inv_temp;
        const Tensor& R = t.value(reps.id());
        Tensor& gr = t.grad_buffer(reps.id());
        for (std::size_t g = 0; g < G; ++g) {
          const double* rg = R.data().data() + g * K * M;
          double* dg = gr.data().data() + g * K * M;
          for (std::size_t a = 0; a < K; ++a)
            for (std::size_t b = 0; b < K; ++b) {
              if (b == a) continue;
              // d/ds_ab of sum_b w_ab (lse_a - s_ab) = Z_a p_ab - w_ab
              const double gs = coef * (z[a] * probs.at(g, a, b) - w_ext.at(a, b));
              if (gs == 0.0) continue;
              const double* ra = rg + a * M;
              const double* rb = rg + b * M;
              double* da = dg + a * M;
              double* db = dg + b * M;
              for (std::size_t c = 0; c < M; ++c) {
                da[c] += gs * rb[c];
                db[c] += gs * ra[c];
              }
            }
        }
      });
}

Var soft_instance_loss(Var reps, const Tensor& w_ext, double temperature) {
  if (reps.shape().size() != 3 || reps.shape()[0] % 2 != 0)
    throw ShapeError("instance loss expects [2N, T, M], got " + shape_str(reps.shape()));
  return contrastive_ce(ad::transpose01(reps), w_ext, temperature);
}

Var soft_temporal_loss(Var reps, const Tensor& w_ext, double temperature) {
  const Shape& s = reps.shape();
  if (s.size() != 3 || s[0] % 2 != 0) throw ShapeError("temporal loss expects [2N, T, M], got " + shape_str(s));
  const std::size_t n = s[0] / 2;
  const Var views[] = {ad::slice(reps, 0, 0, n), ad::slice(reps, 0, n, n)};
  return contrastive_ce(ad::concat(views, 1), w_ext, temperature);
}

double soft_instance_loss(const Tensor& reps, const Tensor& w_ext, double temperature) {
  Tape tape;
  return soft_instance_loss(tape.constant(reps), w_ext, temperature).value().item();
}

double soft_temporal_loss(const Tensor& reps, const Tensor& w_ext, double temperature) {
  Tape tape;
  return soft_temporal_loss(tape.constant(reps), w_ext, temperature).value().item();
}

Tensor p_instance(const Tensor& reps, double temperature) {
  if (reps.rank() != 3) throw ShapeError("p_instance expects [2N, T, M]");
  const std::size_t K = reps.dim(0), T = reps.dim(1), M = reps.dim(2);
  if (K < 2) throw ShapeError("p_instance needs at least 2 embeddings");
  Tensor out(Shape{T, K, K});
  std::vector<double> group(K * M), sims(K);
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t k = 0; k < K; ++k)
      for (std::size_t c = 0; c < M; ++c) group[k * M + c] = reps.at(k, t, c);
    for (std::size_t a = 0; a < K; ++a) row_softmax(group.data(), K, M, a, 1.0 / temperature, sims.data(), &out.at(t, a, 0));
  }
  return out;
}

Tensor p_temporal(const Tensor& reps_i, double temperature) {
  if (reps_i.rank() != 2) throw ShapeError("p_temporal expects [2T, M]");
  const std::size_t K = reps_i.dim(0), M = reps_i.dim(1);
  if (K < 2) throw ShapeError("p_temporal needs at least 2 timestamps");
  Tensor out(Shape{K, K});
  std::vector<double> sims(K);
  for (std::size_t a = 0; a < K; ++a)
    row_softmax(reps_i.data().data(), K, M, a, 1.0 / temperature, sims.data(), &out.at(a, 0));
  return out;
}

JointLoss joint_loss(Var view_a, Var view_b, const DistanceMatrix* batch_dist, const InstanceAssignConfig& icfg,
                     const TemporalAssignConfig& tcfg, const LossOptions& options) {
  options.validate();
  icfg.validate();
  tcfg.validate();
  if (view_a.shape() != view_b.shape())
    throw ShapeError("view representations differ in shape: " + shape_str(view_a.shape()) + " vs " +
                     shape_str(view_b.shape()));
  if (view_a.shape().size() != 3) throw ShapeError("view representations must be [N, T, M]");
  const std::size_t n = view_a.shape()[0];

  const bool use_instance = options.lambda > 0.0;
  const bool use_temporal = options.lambda < 1.0;

  Tensor w_inst;
  if (use_instance) {
    if (options.soft_instance) {
      if (!batch_dist) throw UsageError("soft instance-wise loss needs the batch distance matrix");
      if (batch_dist->size() != n)
        throw DataError("batch distance matrix is " + std::to_string(batch_dist->size()) + "x" +
                        std::to_string(batch_dist->size()) + " but the batch has " + std::to_string(n) + " series");
      w_inst = extend_instance(w_instance(*batch_dist, icfg));
    } else {
      w_inst = hard_assignments(n);
    }
  }

  const Var both[] = {view_a, view_b};
  const Var stacked = ad::concat(both, 0);  // [2N, T, M]
  const auto levels = pool_ladder(stacked, tcfg.pool_kernel);

  JointLoss out;
  out.breakdown.lambda = options.lambda;
  std::vector<Var> level_losses;
  for (std::size_t k = 0; k < levels.size(); ++k) {
    const Var& r = levels[k];
    const std::size_t len = r.shape()[1];
    LevelTerms terms{k, len, 0.0, 0.0};
    std::vector<Var> parts;
    if (use_instance) {
      const Var li = soft_instance_loss(r, w_inst, options.temperature);
      terms.instance = li.value().item();
      parts.push_back(ad::scale(li, options.lambda));
    }
    if (use_temporal) {
      const Tensor w_t = options.soft_temporal ? extend_temporal(w_temporal(len, k, tcfg)) : hard_assignments(len);
      const Var lt = soft_temporal_loss(r, w_t, options.temperature);
      terms.temporal = lt.value().item();
      parts.push_back(ad::scale(lt, 1.0 - options.lambda));
    }
    level_losses.push_back(parts.size() == 1 ? parts[0] : ad::add(parts[0], parts[1]));
    out.breakdown.per_level.push_back(terms);
  }

  const double inv_levels = 1.0 / static_cast<double>(levels.size());
  Var acc = level_losses[0];
  for (std::size_t k = 1; k < level_losses.size(); ++k) acc = ad::add(acc, level_losses[k]);
  out.loss = ad::scale(acc, inv_levels);

  for (const auto& t : out.breakdown.per_level) {
    out.breakdown.instance_term += t.instance * inv_levels;
    out.breakdown.temporal_term += t.temporal * inv_levels;
  }
  out.breakdown.total = out.loss.value().item();
  return out;
}

namespace {

// Z * (KL(q || p) + H(q)) for one anchor row; zero-weight entries contribute 0.
double scaled_kl_row(const double* w, const double* p, std::size_t K, std::size_t a) {
  double z = 0.0;
  for (std::size_t b = 0; b < K; ++b) z += w[b];
  double kl = 0.0, entropy = 0.0;
  for (std::size_t b = 0; b < K; ++b) {
    if (b == a || w[b] == 0.0) continue;
    const double q = w[b] / z;
    kl += q * std::log(q / p[b]);
    entropy -= q * std::log(q);
  }
  return z * (kl + entropy);
}

}  // namespace

KlIdentity kl_identity_check(const Tensor& reps, const Tensor& w_ext, LossFamily which, double temperature) {
  if (reps.rank() != 3 || reps.dim(0) % 2 != 0) throw ShapeError("KL check expects [2N, T, M]");
  KlIdentity out;
  const std::size_t two_n = reps.dim(0), T = reps.dim(1), M = reps.dim(2);
  if (which == LossFamily::Instance) {
    check_weights(w_ext, two_n);
    out.lhs = soft_instance_loss(reps, w_ext, temperature);
    const Tensor p = p_instance(reps, temperature);
    for (std::size_t t = 0; t < T; ++t)
      for (std::size_t a = 0; a < two_n; ++a)
        out.rhs += scaled_kl_row(&w_ext.at(a, 0), &p.at(t, a, 0), two_n, a);
    out.rhs /= static_cast<double>(T * two_n);
  } else {
    const std::size_t n = two_n / 2;
    check_weights(w_ext, 2 * T);
    out.lhs = soft_temporal_loss(reps, w_ext, temperature);
    Tensor stacked(Shape{2 * T, M});
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t t = 0; t < T; ++t)
        for (std::size_t c = 0; c < M; ++c) {
          stacked.at(t, c) = reps.at(i, t, c);
          stacked.at(T + t, c) = reps.at(n + i, t, c);
        }
      const Tensor p = p_temporal(stacked, temperature);
      for (std::size_t a = 0; a < 2 * T; ++a) out.rhs += scaled_kl_row(&w_ext.at(a, 0), &p.at(a, 0), 2 * T, a);
    }
    out.rhs /= static_cast<double>(n * 2 * T);
  }
  return out;
}

}  // namespace softclt
