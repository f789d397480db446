#include "afford/losses.hpp"

#include <algorithm>
#include <cmath>

namespace afford {

double cosine_sim(const Tensor& a, const Tensor& b) {
  check(a.numel() == b.numel() && a.numel() > 0, "[cosine_sim] dimension mismatch");
  double dot = 0.0, na2 = 0.0, nb2 = 0.0;
  for (std::size_t i = 0; i < a.numel(); ++i) {
    dot += a[i] * b[i];
    na2 += a[i] * a[i];
    nb2 += b[i] * b[i];
  }
  check(na2 > 0.0 && nb2 > 0.0, "[cosine_sim] zero vector");
  return dot / (std::sqrt(na2) * std::sqrt(nb2));
}

double bce_loss(const std::vector<Tensor>& preds, const std::vector<Tensor>& targets) {
  std::vector<ad::NodePtr> nodes;
  nodes.reserve(preds.size());
  for (const Tensor& p : preds) nodes.push_back(ad::constant(p));
  return ad::bce(nodes, targets)->scalar();
}

Tensor downsample_mask(const AffordanceMask& m, std::size_t patch_size) {
  check(patch_size > 0, "[downsample_mask] patch size must be positive");
  check(m.height % patch_size == 0 && m.width % patch_size == 0,
        "[downsample_mask] mask dimensions must be divisible by the patch size");
  const std::size_t gh = m.height / patch_size, gw = m.width / patch_size;
  Tensor grid(gh, gw);
  for (std::size_t i = 0; i < gh; ++i)
    for (std::size_t j = 0; j < gw; ++j) {
      double mx = m.values.at(i * patch_size, j * patch_size);
      for (std::size_t y = i * patch_size; y < (i + 1) * patch_size; ++y)
        for (std::size_t x = j * patch_size; x < (j + 1) * patch_size; ++x)
          mx = std::max(mx, m.values.at(y, x));
      grid.at(i, j) = mx;
    }
  return grid;
}

Tensor binarize(const Tensor& grid) {
  Tensor out = grid;
  for (double& v : out.data()) v = v > 0.0 ? 1.0 : 0.0;
  return out;
}

std::vector<std::size_t> active_cells(const Tensor& indicator) {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < indicator.numel(); ++i)
    if (indicator[i] != 0.0) idx.push_back(i);
  return idx;
}

RegionFeature masked_average_pool(const Tensor& patch_grid, const Tensor& indicator,
                                  std::size_t source_class) {
  check(patch_grid.ndim() == 2, "[masked_average_pool] patch grid must be N x D");
  check(indicator.numel() == patch_grid.rows(),
        "[masked_average_pool] indicator size does not match the patch count");
  const auto idx = active_cells(indicator);
  if (idx.empty())
    throw EmptyRegionError("[masked_average_pool] indicator has no active cell");
  RegionFeature out;
  out.vector = ad::masked_mean_rows(ad::constant(patch_grid), idx)->value;
  out.source_class = source_class;
  out.patch_count = idx.size();
  return out;
}

double infonce(const std::vector<double>& sims, std::size_t positive_index, double tau) {
  Tensor t(sims.size(), 1);
  for (std::size_t i = 0; i < sims.size(); ++i) t[i] = sims[i];
  return ad::infonce(ad::constant(t), positive_index, tau)->scalar();
}

namespace {

ad::NodePtr alignment_infonce(const ad::NodePtr& text_rows, const ad::NodePtr& probe,
                              std::size_t positive_index, double tau) {
  const std::size_t k = text_rows->value.rows();
  check(positive_index < k, "[alignment] positive class out of range");
  std::vector<ad::NodePtr> sims;
  sims.reserve(k);
  for (std::size_t i = 0; i < k; ++i) sims.push_back(ad::cosine(ad::row(text_rows, i), probe));
  return ad::infonce(ad::concat_rows(sims), positive_index, tau);
}

}  // namespace

ad::NodePtr ami_loss_node(const ad::NodePtr& class_text, const ad::NodePtr& patch_grid,
                          const AffordanceMask& gt, double tau1, std::size_t patch_size) {
  const auto idx = active_cells(binarize(downsample_mask(gt, patch_size)));
  if (idx.empty())
    throw EmptyRegionError("[ami_loss] affordance region is empty after downsampling");
  auto region = ad::masked_mean_rows(patch_grid, idx);
  return alignment_infonce(class_text, region, gt.class_id, tau1);
}

double ami_loss(const TextFeatureSet& class_text, const Tensor& patch_grid,
                const AffordanceMask& gt, double tau1, std::size_t patch_size) {
  return ami_loss_node(ad::constant(class_text.features), ad::constant(patch_grid), gt, tau1,
                       patch_size)
      ->scalar();
}

ad::NodePtr omi_loss_node(const ad::NodePtr& object_text, const ad::NodePtr& projected_cls,
                          std::size_t object_class, double tau2) {
  return alignment_infonce(object_text, projected_cls, object_class, tau2);
}

double omi_loss(const TextFeatureSet& object_text, const Tensor& projected_cls,
                std::size_t object_class, double tau2) {
  return omi_loss_node(ad::constant(object_text.features), ad::constant(projected_cls),
                       object_class, tau2)
      ->scalar();
}

LossReport total_loss(double bce, double ami, double omi, double lambda1, double lambda2) {
  check(lambda1 >= 0.0 && lambda2 >= 0.0, "[total_loss] weights must be nonnegative");
  LossReport r;
  r.bce = bce;
  r.ami = ami;
  r.omi = omi;
  r.total = bce + lambda1 * ami + lambda2 * omi;
  return r;
}

}  // namespace afford
