#pragma once

#include <cstddef>
#include <vector>

#include "afford/autodiff.hpp"
#include "afford/core_types.hpp"

namespace afford {

// Raised when a ground-truth mask leaves no active patch cell. The training
// loop treats it as "skip this class's alignment term", not as a failure.
class EmptyRegionError : public Error {
 public:
  using Error::Error;
};

struct LossReport {
  double bce = 0.0;
  double ami = 0.0;
  double omi = 0.0;
  double total = 0.0;
};

struct RegionFeature {
  Tensor vector;  // 1 x D_t
  std::size_t source_class = 0;
  std::size_t patch_count = 0;
};

// cos(a, b) = <a,b> / (|a||b|). Errors on a zero vector.
double cosine_sim(const Tensor& a, const Tensor& b);

// Mean BCE over C (prediction, scaled-target) map pairs; predictions clamped
// to [1e-7, 1 - 1e-7].
double bce_loss(const std::vector<Tensor>& preds, const std::vector<Tensor>& targets);

// Max over non-overlapping patch_size x patch_size windows -> grid the size of
// the patch feature map.
Tensor downsample_mask(const AffordanceMask& m, std::size_t patch_size);

// 1 where strictly positive, else 0.
Tensor binarize(const Tensor& grid);

// Row-major indices of nonzero cells; the link between a mask grid and patch
// feature rows.
std::vector<std::size_t> active_cells(const Tensor& indicator);

// Mean of the patch features at the indicator's active cells. Throws
// EmptyRegionError when no cell is active.
RegionFeature masked_average_pool(const Tensor& patch_grid, const Tensor& indicator,
                                  std::size_t source_class);

// Stable InfoNCE: -log( exp(s_pos/tau) / sum_k exp(s_k/tau) ).
double infonce(const std::vector<double>& sims, std::size_t positive_index, double tau);

// Affordance-level alignment for one class: downsample -> binarize -> pool ->
// cosine sims against every text row -> InfoNCE with the class as positive.
double ami_loss(const TextFeatureSet& class_text, const Tensor& patch_grid,
                const AffordanceMask& gt, double tau1, std::size_t patch_size);
ad::NodePtr ami_loss_node(const ad::NodePtr& class_text, const ad::NodePtr& patch_grid,
                          const AffordanceMask& gt, double tau1, std::size_t patch_size);

// Object-level alignment: cosine sims of the projected summary vector against
// every object text row -> InfoNCE with the sample's object class as positive.
double omi_loss(const TextFeatureSet& object_text, const Tensor& projected_cls,
                std::size_t object_class, double tau2);
ad::NodePtr omi_loss_node(const ad::NodePtr& object_text, const ad::NodePtr& projected_cls,
                          std::size_t object_class, double tau2);

// total = bce + lambda1 * ami + lambda2 * omi, in that summation order.
LossReport total_loss(double bce, double ami, double omi, double lambda1, double lambda2);

}  // namespace afford
