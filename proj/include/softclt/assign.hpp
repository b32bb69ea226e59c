#pragma once

#include <string_view>
#include <vector>

#include "softclt/distance.hpp"
#include "softclt/tensor.hpp"

namespace softclt {

enum class InstanceKernel { Sigmoid, NoKernel, Gaussian, Laplacian };
enum class TemporalKernel { Sigmoid, Neighbor, Linear, Gaussian };

std::string_view kernel_name(InstanceKernel k);
std::string_view kernel_name(TemporalKernel k);
InstanceKernel parse_instance_kernel(std::string_view name);
TemporalKernel parse_temporal_kernel(std::string_view name);

struct InstanceAssignConfig {
  double tau = 10.0;   // sharpness of the sigmoid kernel
  double alpha = 0.5;  // upper bound of the weight between distinct series
  InstanceKernel kernel = InstanceKernel::Sigmoid;
  double sigma = 0.5;  // bandwidth of the Gaussian and Laplacian kernels

  void validate() const;
  bool operator==(const InstanceAssignConfig&) const = default;
};

struct TemporalAssignConfig {
  double tau_base = 2.0;       // sharpness at pooling level 0
  std::size_t pool_kernel = 2; // m, the max-pool kernel of the hierarchy
  TemporalKernel kernel = TemporalKernel::Sigmoid;
  double neighbor_frac = 0.3;  // Neighbor half window as a fraction of T
  double gaussian_std = 1.0;
  bool hierarchical = true;    // scale sharpness by m^k at level k

  void validate() const;
  bool operator==(const TemporalAssignConfig&) const = default;
};

// Sharpness at pooling level k: m^k * tau_base, or tau_base when the
// hierarchical scaling is switched off.
double effective_tau(const TemporalAssignConfig& cfg, std::size_t level);

double instance_weight(double dist, const InstanceAssignConfig& cfg);
double temporal_weight(std::size_t gap, std::size_t length, std::size_t level, const TemporalAssignConfig& cfg);

// [N, N] weights from a min-max normalized distance matrix.
Tensor w_instance(const DistanceMatrix& dist, const InstanceAssignConfig& cfg);
// [T, T] weights over timestamp gaps at pooling level `level`.
Tensor w_temporal(std::size_t length, std::size_t level, const TemporalAssignConfig& cfg);

// Extend [K, K] weights to the [2K, 2K] index space of two stacked views:
// zero on the diagonal, one for the paired view (k, k + K), otherwise
// w(a mod K, b mod K).
Tensor extend_assignments(const Tensor& w);
inline Tensor extend_instance(const Tensor& w) { return extend_assignments(w); }
inline Tensor extend_temporal(const Tensor& w) { return extend_assignments(w); }

// Extended matrix of hard contrastive learning: only the paired views are 1.
Tensor hard_assignments(std::size_t k);

struct NormalizedAssignments {
  Tensor q;               // rows sum to one
  std::vector<double> z;  // partition function per row
};

NormalizedAssignments normalize_assignments(const Tensor& w_ext);

}  // namespace softclt
