#include "afford/metrics.hpp"

#include <cmath>
#include <cstdio>

#include <json.hpp>

namespace afford {

namespace {

constexpr double kEps = 1e-12;

void require_pair(const Tensor& pred, const Tensor& gt, const char* who,
                  bool pred_nonnegative = true) {
  check(pred.same_shape(gt), std::string("[") + who + "] shape mismatch");
  check(pred.numel() > 0, std::string("[") + who + "] empty maps");
  if (pred_nonnegative)
    for (double v : pred.data())
      check(v >= 0.0, std::string("[") + who + "] negative prediction");
  for (double v : gt.data()) check(v >= 0.0, std::string("[") + who + "] negative ground truth");
}

bool any_positive(const Tensor& t) {
  for (double v : t.data())
    if (v > 0.0) return true;
  return false;
}

}  // namespace

double kld(const Tensor& pred, const Tensor& gt) {
  require_pair(pred, gt, "kld");
  const double ps = pred.sum(), qs = gt.sum();
  check(qs > 0.0, "[kld] ground truth is all zero");
  check(ps > 0.0, "[kld] prediction is all zero");
  double acc = 0.0;
  for (std::size_t i = 0; i < pred.numel(); ++i) {
    const double q = gt[i] / qs;
    if (q == 0.0) continue;
    const double p = pred[i] / ps;
    acc += q * std::log(q / (p + kEps) + kEps);
  }
  return acc;
}

double sim(const Tensor& pred, const Tensor& gt) {
  require_pair(pred, gt, "sim");
  const double ps = pred.sum(), qs = gt.sum();
  check(ps > 0.0 && qs > 0.0, "[sim] all-zero input map");
  double acc = 0.0;
  for (std::size_t i = 0; i < pred.numel(); ++i)
    acc += std::min(pred[i] / ps, gt[i] / qs);
  return acc;
}

double nss(const Tensor& pred, const Tensor& gt) {
  // Standardization absorbs sign and offset, so negative predictions are fine.
  require_pair(pred, gt, "nss", /*pred_nonnegative=*/false);
  check(any_positive(gt), "[nss] ground truth has no positive pixel");
  const std::size_t n = pred.numel();
  double mean = 0.0;
  for (double v : pred.data()) mean += v;
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (double v : pred.data()) var += (v - mean) * (v - mean);
  var /= static_cast<double>(n);
  if (var == 0.0) return 0.0;  // constant prediction convention
  const double sd = std::sqrt(var);
  double acc = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < n; ++i)
    if (gt[i] > 0.0) {
      acc += (pred[i] - mean) / sd;
      ++count;
    }
  return acc / static_cast<double>(count);
}

MetricReport evaluate_set(const std::vector<Tensor>& preds, const std::vector<Tensor>& gts) {
  check(preds.size() == gts.size(), "[evaluate_set] pair count mismatch");
  check(!preds.empty(), "[evaluate_set] empty evaluation set");
  MetricReport r;
  r.n_samples = preds.size();
  double kld_sum = 0.0, sim_sum = 0.0, nss_sum = 0.0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const Tensor& p = preds[i];
    const Tensor& q = gts[i];
    const bool gt_ok = any_positive(q);
    const bool pred_ok = any_positive(p);
    if (gt_ok && pred_ok) {
      kld_sum += kld(p, q);
      ++r.n_kld;
      sim_sum += sim(p, q);
      ++r.n_sim;
    }
    if (gt_ok) {
      nss_sum += nss(p, q);
      ++r.n_nss;
    }
  }
  if (r.n_kld > 0) r.kld = kld_sum / static_cast<double>(r.n_kld);
  if (r.n_sim > 0) r.sim = sim_sum / static_cast<double>(r.n_sim);
  if (r.n_nss > 0) r.nss = nss_sum / static_cast<double>(r.n_nss);
  return r;
}

std::string report_to_text(const MetricReport& r) {
  char buf[256];
  std::snprintf(buf, sizeof(buf),
                "kld %.6f\nsim %.6f\nnss %.6f\nn_samples %zu\n", r.kld, r.sim, r.nss,
                r.n_samples);
  return buf;
}

std::string report_to_json(const MetricReport& r) {
  nlohmann::json j{{"kld", r.kld},     {"sim", r.sim},     {"nss", r.nss},
                   {"n_samples", r.n_samples}, {"n_kld", r.n_kld}, {"n_sim", r.n_sim},
                   {"n_nss", r.n_nss}};
  return j.dump(2) + "\n";
}

}  // namespace afford
