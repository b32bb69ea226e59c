#pragma once

#include <vector>

#include "softclt/assign.hpp"
#include "softclt/autodiff.hpp"
#include "softclt/distance.hpp"
#include "softclt/tensor.hpp"

namespace softclt {

struct LossOptions {
  double lambda = 0.5;        // weight of the instance-wise term
  double temperature = 1.0;   // similarity = dot / temperature
  bool soft_instance = true;  // false: hard instance-wise contrast
  bool soft_temporal = true;  // false: hard temporal contrast

  void validate() const;
  bool operator==(const LossOptions&) const = default;
};

struct LevelTerms {
  std::size_t level = 0;
  std::size_t length = 0;
  double instance = 0.0;
  double temporal = 0.0;
};

// Terms that carry a zero coefficient (lambda = 0 or 1) are not evaluated and
// are reported as 0.
struct LossBreakdown {
  double total = 0.0;
  double instance_term = 0.0;  // mean over levels
  double temporal_term = 0.0;  // mean over levels
  std::vector<LevelTerms> per_level;
  double lambda = 0.5;
};

// Weighted contrastive cross-entropy over groups of K candidates.
// reps: [G, K, M]; w_ext: [K, K] with zero diagonal. For every group g and
// anchor a it evaluates -sum_b w(a,b) log p_g(a,b), where p_g(a,.) is the
// softmax of r_a . r_b / temperature over b != a. Returns the mean over the
// G*K anchors.
Var contrastive_ce(Var reps, const Tensor& w_ext, double temperature = 1.0);

// reps: [2N, T, M] with rows k and k+N holding the two views of series k.
// Instance-wise loss, mean over (i in 2N, t in T).
Var soft_instance_loss(Var reps, const Tensor& w_ext, double temperature = 1.0);
// Temporal loss over the 2T timestamps of both views of each series, mean over
// (i in N, t in 2T). w_ext is [2T, 2T].
Var soft_temporal_loss(Var reps, const Tensor& w_ext, double temperature = 1.0);

double soft_instance_loss(const Tensor& reps, const Tensor& w_ext, double temperature = 1.0);
double soft_temporal_loss(const Tensor& reps, const Tensor& w_ext, double temperature = 1.0);

// [T, 2N, 2N]: probability of candidate j for anchor i at timestamp t; zero on
// the diagonal.
Tensor p_instance(const Tensor& reps, double temperature = 1.0);
// [2T, 2T] for the stacked timestamps of one series, reps_i: [2T, M].
Tensor p_temporal(const Tensor& reps_i, double temperature = 1.0);

struct JointLoss {
  Var loss;
  LossBreakdown breakdown;
};

// view_a, view_b: [N, T, M] representations aligned on the crop overlap.
// batch_dist holds the min-max normalized distances of the N series; it may be
// null when the instance term is hard or switched off (lambda = 0). The
// temporal sharpness at level k is scaled per TemporalAssignConfig.
JointLoss joint_loss(Var view_a, Var view_b, const DistanceMatrix* batch_dist, const InstanceAssignConfig& icfg,
                     const TemporalAssignConfig& tcfg, const LossOptions& options);

enum class LossFamily { Instance, Temporal };

struct KlIdentity {
  double lhs = 0.0;  // loss as the weighted cross-entropy
  double rhs = 0.0;  // Z * (KL(Q || P) + H(Q)), averaged like the loss
};

// Evaluates both sides of the scaled-KL rewriting of the soft losses.
KlIdentity kl_identity_check(const Tensor& reps, const Tensor& w_ext, LossFamily which, double temperature = 1.0);

}  // namespace softclt
