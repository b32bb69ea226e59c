#include "softclt/assign.hpp"

#include <cmath>

#include "softclt/error.hpp"

namespace softclt {

namespace {

std::string upper(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  for (auto& c : out)
    if (c == '-') c = '_';
  return out;
}

// 2 * sigmoid(-x) written to stay finite for large x.
double twice_sigmoid_neg(double x) { return 2.0 / (1.0 + std::exp(x)); }

}  // namespace

std::string_view kernel_name(InstanceKernel k) {
  switch (k) {
    case InstanceKernel::Sigmoid: return "sigmoid";
    case InstanceKernel::NoKernel: return "no_kernel";
    case InstanceKernel::Gaussian: return "gaussian";
    case InstanceKernel::Laplacian: return "laplacian";
  }
  return "?";
}

std::string_view kernel_name(TemporalKernel k) {
  switch (k) {
    case TemporalKernel::Sigmoid: return "sigmoid";
    case TemporalKernel::Neighbor: return "neighbor";
    case TemporalKernel::Linear: return "linear";
    case TemporalKernel::Gaussian: return "gaussian";
  }
  return "?";
}

InstanceKernel parse_instance_kernel(std::string_view name) {
  const auto s = upper(name);
  if (s == "SIGMOID") return InstanceKernel::Sigmoid;
  if (s == "NO_KERNEL" || s == "NONE") return InstanceKernel::NoKernel;
  if (s == "GAUSSIAN") return InstanceKernel::Gaussian;
  if (s == "LAPLACIAN") return InstanceKernel::Laplacian;
  throw UsageError("unknown instance kernel '" + std::string(name) + "'");
}

TemporalKernel parse_temporal_kernel(std::string_view name) {
  const auto s = upper(name);
  if (s == "SIGMOID") return TemporalKernel::Sigmoid;
  if (s == "NEIGHBOR") return TemporalKernel::Neighbor;
  if (s == "LINEAR") return TemporalKernel::Linear;
  if (s == "GAUSSIAN") return TemporalKernel::Gaussian;
  throw UsageError("unknown temporal kernel '" + std::string(name) + "'");
}

void InstanceAssignConfig::validate() const {
  if (!(tau > 0.0)) throw UsageError("tau_I must be > 0");
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw UsageError("alpha must lie in [0, 1]");
  if (!(sigma > 0.0)) throw UsageError("kernel sigma must be > 0");
}

void TemporalAssignConfig::validate() const {
  if (!(tau_base > 0.0)) throw UsageError("tau_T must be > 0");
  if (pool_kernel < 2) throw UsageError("pool kernel m must be >= 2");
  if (!(neighbor_frac > 0.0 && neighbor_frac <= 1.0)) throw UsageError("neighbor window fraction must lie in (0, 1]");
  if (!(gaussian_std > 0.0)) throw UsageError("temporal Gaussian std must be > 0");
}

double effective_tau(const TemporalAssignConfig& cfg, std::size_t level) {
  if (!cfg.hierarchical) return cfg.tau_base;
  return std::pow(static_cast<double>(cfg.pool_kernel), static_cast<double>(level)) * cfg.tau_base;
}

double instance_weight(double dist, const InstanceAssignConfig& cfg) {
  switch (cfg.kernel) {
    case InstanceKernel::Sigmoid: return cfg.alpha * twice_sigmoid_neg(cfg.tau * dist);
    case InstanceKernel::NoKernel: return 1.0 - dist;
    case InstanceKernel::Gaussian: return std::exp(-dist * dist / (2.0 * cfg.sigma * cfg.sigma));
    case InstanceKernel::Laplacian: return std::exp(-dist / cfg.sigma);
  }
  return 0.0;
}

double temporal_weight(std::size_t gap, std::size_t length, std::size_t level, const TemporalAssignConfig& cfg) {
  const double g = static_cast<double>(gap);
  switch (cfg.kernel) {
    case TemporalKernel::Sigmoid:
      return twice_sigmoid_neg(effective_tau(cfg, level) * g);
    case TemporalKernel::Neighbor: {
      const double window = std::ceil(cfg.neighbor_frac * static_cast<double>(length));
      return g <= window ? 1.0 : 0.0;
    }
    case TemporalKernel::Linear:
      return length <= 1 ? 1.0 : 1.0 - g / static_cast<double>(length - 1);
    case TemporalKernel::Gaussian:
      return std::exp(-g * g / (2.0 * cfg.gaussian_std * cfg.gaussian_std));
  }
  return 0.0;
}

Tensor w_instance(const DistanceMatrix& dist, const InstanceAssignConfig& cfg) {
  cfg.validate();
  if (!dist.normalized()) throw DataError("instance assignments need a min-max normalized distance matrix");
  const std::size_t n = dist.size();
  Tensor w(Shape{n, n});
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) w.at(i, j) = instance_weight(dist.at(i, j), cfg);
  return w;
}

Tensor w_temporal(std::size_t length, std::size_t level, const TemporalAssignConfig& cfg) {
  cfg.validate();
  if (length < 1) throw DataError("temporal assignments need T >= 1");
  Tensor w(Shape{length, length});
  for (std::size_t t = 0; t < length; ++t)
    for (std::size_t s = 0; s < length; ++s)
      w.at(t, s) = temporal_weight(t > s ? t - s : s - t, length, level, cfg);
  return w;
}

Tensor extend_assignments(const Tensor& w) {
  if (w.rank() != 2 || w.dim(0) != w.dim(1)) throw ShapeError("assignments must be square, got " + shape_str(w.shape()));
  const std::size_t k = w.dim(0);
  Tensor out(Shape{2 * k, 2 * k});
  for (std::size_t a = 0; a < 2 * k; ++a)
    for (std::size_t b = 0; b < 2 * k; ++b) {
      if (a == b) continue;
      out.at(a, b) = (a % k == b % k) ? 1.0 : w.at(a % k, b % k);
    }
  return out;
}

Tensor hard_assignments(std::size_t k) { return extend_assignments(Tensor(Shape{k, k})); }

NormalizedAssignments normalize_assignments(const Tensor& w_ext) {
  if (w_ext.rank() != 2 || w_ext.dim(0) != w_ext.dim(1)) throw ShapeError("assignments must be square");
  const std::size_t n = w_ext.dim(0);
  NormalizedAssignments out{Tensor(Shape{n, n}), std::vector<double>(n, 0.0)};
  for (std::size_t a = 0; a < n; ++a) {
    double z = 0.0;
    for (std::size_t b = 0; b < n; ++b) {
      if (w_ext.at(a, b) < 0.0) throw DataError("assignments must be nonnegative");
      z += w_ext.at(a, b);
    }
    if (!(z > 0.0)) throw DataError("assignment row " + std::to_string(a) + " is all zero");
    out.z[a] = z;
    for (std::size_t b = 0; b < n; ++b) out.q.at(a, b) = w_ext.at(a, b) / z;
  }
  return out;
}

}  // namespace softclt
