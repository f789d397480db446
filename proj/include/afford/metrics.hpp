#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "afford/tensor.hpp"

namespace afford {

struct MetricReport {
  double kld = 0.0;
  double sim = 0.0;
  double nss = 0.0;
  std::size_t n_samples = 0;  // pairs submitted for evaluation
  std::size_t n_kld = 0;      // pairs actually scored per metric
  std::size_t n_sim = 0;
  std::size_t n_nss = 0;

  bool operator==(const MetricReport& o) const = default;
};

// Saliency-style divergence: both maps normalized to sum 1, then
// sum_i Q_i * log(Q_i / (P_i + eps) + eps), eps = 1e-12, Q = gt, P = pred.
// Preconditions: both nonnegative, gt not all zero, pred not all zero.
double kld(const Tensor& pred, const Tensor& gt);

// Histogram intersection of the two sum-normalized maps, in [0, 1].
double sim(const Tensor& pred, const Tensor& gt);

// Standardize pred to zero mean / unit population std, binarize gt at > 0,
// return the mean standardized value over positive-gt pixels. A constant pred
// scores 0 by convention.
double nss(const Tensor& pred, const Tensor& gt);

// Per-pair metrics averaged over the set; pairs failing a metric's
// precondition are skipped for that metric and the per-metric counts record
// how many pairs actually scored.
MetricReport evaluate_set(const std::vector<Tensor>& preds, const std::vector<Tensor>& gts);

// Flat key-value lines, values to six decimal places.
std::string report_to_text(const MetricReport& r);
// Machine-readable mirror (JSON).
std::string report_to_json(const MetricReport& r);

}  // namespace afford
