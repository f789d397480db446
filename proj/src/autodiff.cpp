#include "afford/autodiff.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <unordered_set>

namespace afford::ad {

namespace {

constexpr double kBceEps = 1e-7;

NodePtr make_node(Tensor value, std::vector<NodePtr> parents,
                  std::function<void(Node&)> backprop) {
  auto n = std::make_shared<Node>();
  n->value = std::move(value);
  n->parents = std::move(parents);
  for (const auto& p : n->parents)
    if (p->requires_grad) n->requires_grad = true;
  if (n->requires_grad) n->backprop = std::move(backprop);
  return n;
}

void require_2d(const NodePtr& a, const char* who) {
  check(a->value.ndim() == 2, std::string("[ad::") + who + "] operand must be 2-D");
}

}  // namespace

NodePtr constant(Tensor v) {
  auto n = std::make_shared<Node>();
  n->value = std::move(v);
  return n;
}

NodePtr leaf(Tensor v) {
  auto n = std::make_shared<Node>();
  n->value = std::move(v);
  n->requires_grad = true;
  return n;
}

void backward(const NodePtr& root) {
  check(root->value.numel() == 1, "[ad::backward] root must be a scalar");

  // Iterative post-order DFS; ordering is deterministic (parent list order).
  std::vector<Node*> order;
  std::unordered_set<Node*> visited;
  std::vector<std::pair<Node*, std::size_t>> stack;
  stack.emplace_back(root.get(), 0);
  visited.insert(root.get());
  while (!stack.empty()) {
    auto& [node, next_child] = stack.back();
    if (next_child < node->parents.size()) {
      Node* child = node->parents[next_child].get();
      ++next_child;
      if (child->requires_grad && !visited.count(child)) {
        visited.insert(child);
        stack.emplace_back(child, 0);
      }
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  for (Node* n : order) n->grad = Tensor(n->value.shape());
  root->grad[0] = 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (n->backprop) n->backprop(*n);
  }
}

// Gradient accumulation helper: skips parents that carry no gradient storage
// (constants never enter the topological order).
namespace {
inline bool wants_grad(const NodePtr& p) { return p->requires_grad; }
}  // namespace

NodePtr add(const NodePtr& a, const NodePtr& b) {
  check(a->value.same_shape(b->value), "[ad::add] shape mismatch");
  Tensor out = a->value;
  for (std::size_t i = 0; i < out.numel(); ++i) out[i] += b->value[i];
  return make_node(std::move(out), {a, b}, [](Node& self) {
    for (int k = 0; k < 2; ++k) {
      const auto& p = self.parents[k];
      if (!wants_grad(p)) continue;
      for (std::size_t i = 0; i < self.grad.numel(); ++i) p->grad[i] += self.grad[i];
    }
  });
}

NodePtr sub(const NodePtr& a, const NodePtr& b) {
  check(a->value.same_shape(b->value), "[ad::sub] shape mismatch");
  Tensor out = a->value;
  for (std::size_t i = 0; i < out.numel(); ++i) out[i] -= b->value[i];
  return make_node(std::move(out), {a, b}, [](Node& self) {
    const auto& a_ = self.parents[0];
    const auto& b_ = self.parents[1];
    if (wants_grad(a_))
      for (std::size_t i = 0; i < self.grad.numel(); ++i) a_->grad[i] += self.grad[i];
    if (wants_grad(b_))
      for (std::size_t i = 0; i < self.grad.numel(); ++i) b_->grad[i] -= self.grad[i];
  });
}

NodePtr add_rowvec(const NodePtr& a, const NodePtr& b) {
  require_2d(a, "add_rowvec");
  require_2d(b, "add_rowvec");
  check(b->value.rows() == 1 && b->value.cols() == a->value.cols(),
        "[ad::add_rowvec] bias must be 1 x cols(a)");
  const std::size_t n = a->value.rows(), d = a->value.cols();
  Tensor out = a->value;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) out.at(i, j) += b->value[j];
  return make_node(std::move(out), {a, b}, [n, d](Node& self) {
    const auto& a_ = self.parents[0];
    const auto& b_ = self.parents[1];
    if (wants_grad(a_))
      for (std::size_t i = 0; i < self.grad.numel(); ++i) a_->grad[i] += self.grad[i];
    if (wants_grad(b_))
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j) b_->grad[j] += self.grad.at(i, j);
  });
}

NodePtr scale(const NodePtr& a, double s) {
  Tensor out = a->value;
  for (std::size_t i = 0; i < out.numel(); ++i) out[i] *= s;
  return make_node(std::move(out), {a}, [s](Node& self) {
    const auto& a_ = self.parents[0];
    for (std::size_t i = 0; i < self.grad.numel(); ++i) a_->grad[i] += s * self.grad[i];
  });
}

NodePtr sigmoid(const NodePtr& a) {
  // Tail-stable form, clamped into the open interval so saturated logits
  // never round to exactly 0 or 1.
  constexpr double lo = std::numeric_limits<double>::min();
  const double hi = 1.0 - std::numeric_limits<double>::epsilon() / 2.0;
  Tensor out = a->value;
  for (std::size_t i = 0; i < out.numel(); ++i) {
    const double x = out[i];
    const double s = x >= 0.0 ? 1.0 / (1.0 + std::exp(-x))
                              : std::exp(x) / (1.0 + std::exp(x));
    out[i] = std::clamp(s, lo, hi);
  }
  Tensor saved = out;
  return make_node(std::move(out), {a}, [saved](Node& self) {
    const auto& a_ = self.parents[0];
    for (std::size_t i = 0; i < self.grad.numel(); ++i) {
      const double s = saved[i];
      a_->grad[i] += self.grad[i] * s * (1.0 - s);
    }
  });
}

NodePtr gelu(const NodePtr& a) {
  constexpr double inv_sqrt2 = 0.7071067811865475244;
  constexpr double inv_sqrt2pi = 0.3989422804014326779;
  Tensor out = a->value;
  for (std::size_t i = 0; i < out.numel(); ++i) {
    const double x = out[i];
    out[i] = 0.5 * x * (1.0 + std::erf(x * inv_sqrt2));
  }
  Tensor x_saved = a->value;
  return make_node(std::move(out), {a}, [x_saved](Node& self) {
    const auto& a_ = self.parents[0];
    for (std::size_t i = 0; i < self.grad.numel(); ++i) {
      const double x = x_saved[i];
      const double cdf = 0.5 * (1.0 + std::erf(x * inv_sqrt2));
      const double pdf = inv_sqrt2pi * std::exp(-0.5 * x * x);
      a_->grad[i] += self.grad[i] * (cdf + x * pdf);
    }
  });
}

NodePtr matmul(const NodePtr& a, const NodePtr& b) {
  require_2d(a, "matmul");
  require_2d(b, "matmul");
  const std::size_t m = a->value.rows(), k = a->value.cols(), n = b->value.cols();
  check(b->value.rows() == k, "[ad::matmul] inner dimensions disagree");
  Tensor out(m, n);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t l = 0; l < k; ++l) {
      const double av = a->value.at(i, l);
      for (std::size_t j = 0; j < n; ++j) out.at(i, j) += av * b->value.at(l, j);
    }
  return make_node(std::move(out), {a, b}, [m, k, n](Node& self) {
    const auto& a_ = self.parents[0];
    const auto& b_ = self.parents[1];
    if (wants_grad(a_))
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) {
          const double g = self.grad.at(i, j);
          for (std::size_t l = 0; l < k; ++l) a_->grad.at(i, l) += g * b_->value.at(l, j);
        }
    if (wants_grad(b_))
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t l = 0; l < k; ++l) {
          const double av = a_->value.at(i, l);
          for (std::size_t j = 0; j < n; ++j) b_->grad.at(l, j) += av * self.grad.at(i, j);
        }
  });
}

NodePtr matmul_nt(const NodePtr& a, const NodePtr& b) {
  require_2d(a, "matmul_nt");
  require_2d(b, "matmul_nt");
  const std::size_t m = a->value.rows(), k = a->value.cols(), n = b->value.rows();
  check(b->value.cols() == k, "[ad::matmul_nt] inner dimensions disagree");
  Tensor out(m, n);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      double s = 0.0;
      for (std::size_t l = 0; l < k; ++l) s += a->value.at(i, l) * b->value.at(j, l);
      out.at(i, j) = s;
    }
  return make_node(std::move(out), {a, b}, [m, k, n](Node& self) {
    const auto& a_ = self.parents[0];
    const auto& b_ = self.parents[1];
    if (wants_grad(a_))
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) {
          const double g = self.grad.at(i, j);
          for (std::size_t l = 0; l < k; ++l) a_->grad.at(i, l) += g * b_->value.at(j, l);
        }
    if (wants_grad(b_))
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) {
          const double g = self.grad.at(i, j);
          for (std::size_t l = 0; l < k; ++l) b_->grad.at(j, l) += g * a_->value.at(i, l);
        }
  });
}

NodePtr concat_rows(const std::vector<NodePtr>& parts) {
  check(!parts.empty(), "[ad::concat_rows] no parts");
  const std::size_t d = parts[0]->value.cols();
  std::size_t total = 0;
  for (const auto& p : parts) {
    require_2d(p, "concat_rows");
    check(p->value.cols() == d, "[ad::concat_rows] column mismatch");
    total += p->value.rows();
  }
  Tensor out(total, d);
  std::size_t r = 0;
  for (const auto& p : parts) {
    std::copy(p->value.data().begin(), p->value.data().end(), out.data().begin() + r * d);
    r += p->value.rows();
  }
  return make_node(std::move(out), parts, [d](Node& self) {
    std::size_t r = 0;
    for (const auto& p : self.parents) {
      const std::size_t nr = p->value.rows();
      if (wants_grad(p))
        for (std::size_t i = 0; i < nr * d; ++i) p->grad[i] += self.grad[r * d + i];
      r += nr;
    }
  });
}

NodePtr slice_rows(const NodePtr& a, std::size_t r0, std::size_t r1) {
  require_2d(a, "slice_rows");
  check(r0 < r1 && r1 <= a->value.rows(), "[ad::slice_rows] bad row range");
  const std::size_t d = a->value.cols();
  Tensor out(r1 - r0, d);
  std::copy(a->value.data().begin() + r0 * d, a->value.data().begin() + r1 * d,
            out.data().begin());
  return make_node(std::move(out), {a}, [r0, d](Node& self) {
    const auto& a_ = self.parents[0];
    for (std::size_t i = 0; i < self.grad.numel(); ++i) a_->grad[r0 * d + i] += self.grad[i];
  });
}

NodePtr row(const NodePtr& a, std::size_t r) { return slice_rows(a, r, r + 1); }

NodePtr concat_cols(const std::vector<NodePtr>& parts) {
  check(!parts.empty(), "[ad::concat_cols] no parts");
  const std::size_t n = parts[0]->value.rows();
  std::size_t total = 0;
  for (const auto& p : parts) {
    require_2d(p, "concat_cols");
    check(p->value.rows() == n, "[ad::concat_cols] row mismatch");
    total += p->value.cols();
  }
  Tensor out(n, total);
  std::size_t c = 0;
  for (const auto& p : parts) {
    const std::size_t pc = p->value.cols();
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < pc; ++j) out.at(i, c + j) = p->value.at(i, j);
    c += pc;
  }
  return make_node(std::move(out), parts, [n](Node& self) {
    std::size_t c = 0;
    for (const auto& p : self.parents) {
      const std::size_t pc = p->value.cols();
      if (wants_grad(p))
        for (std::size_t i = 0; i < n; ++i)
          for (std::size_t j = 0; j < pc; ++j) p->grad.at(i, j) += self.grad.at(i, c + j);
      c += pc;
    }
  });
}

NodePtr slice_cols(const NodePtr& a, std::size_t c0, std::size_t c1) {
  require_2d(a, "slice_cols");
  check(c0 < c1 && c1 <= a->value.cols(), "[ad::slice_cols] bad column range");
  const std::size_t n = a->value.rows();
  Tensor out(n, c1 - c0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = c0; j < c1; ++j) out.at(i, j - c0) = a->value.at(i, j);
  return make_node(std::move(out), {a}, [n, c0, c1](Node& self) {
    const auto& a_ = self.parents[0];
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = c0; j < c1; ++j) a_->grad.at(i, j) += self.grad.at(i, j - c0);
  });
}

NodePtr reshape(const NodePtr& a, std::vector<std::size_t> shape) {
  Tensor out(shape);
  check(out.numel() == a->value.numel(), "[ad::reshape] element count mismatch");
  out.data() = a->value.data();
  return make_node(std::move(out), {a}, [](Node& self) {
    const auto& a_ = self.parents[0];
    for (std::size_t i = 0; i < self.grad.numel(); ++i) a_->grad[i] += self.grad[i];
  });
}

NodePtr mean_rows(const NodePtr& a) {
  require_2d(a, "mean_rows");
  const std::size_t n = a->value.rows(), d = a->value.cols();
  check(n > 0, "[ad::mean_rows] empty input");
  Tensor out(1, d);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) out[j] += a->value.at(i, j);
  for (std::size_t j = 0; j < d; ++j) out[j] /= static_cast<double>(n);
  return make_node(std::move(out), {a}, [n, d](Node& self) {
    const auto& a_ = self.parents[0];
    const double inv = 1.0 / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < d; ++j) a_->grad.at(i, j) += inv * self.grad[j];
  });
}

NodePtr masked_mean_rows(const NodePtr& a, const std::vector<std::size_t>& active) {
  require_2d(a, "masked_mean_rows");
  check(!active.empty(), "[ad::masked_mean_rows] empty active set");
  const std::size_t d = a->value.cols();
  for (std::size_t r : active)
    check(r < a->value.rows(), "[ad::masked_mean_rows] active index out of range");
  Tensor out(1, d);
  for (std::size_t r : active)
    for (std::size_t j = 0; j < d; ++j) out[j] += a->value.at(r, j);
  const double inv = 1.0 / static_cast<double>(active.size());
  for (std::size_t j = 0; j < d; ++j) out[j] *= inv;
  std::vector<std::size_t> idx = active;
  return make_node(std::move(out), {a}, [idx, d, inv](Node& self) {
    const auto& a_ = self.parents[0];
    for (std::size_t r : idx)
      for (std::size_t j = 0; j < d; ++j) a_->grad.at(r, j) += inv * self.grad[j];
  });
}

NodePtr l2_normalize_rows(const NodePtr& a) {
  require_2d(a, "l2_normalize_rows");
  const std::size_t n = a->value.rows(), d = a->value.cols();
  Tensor out(n, d);
  std::vector<double> norms(n);
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < d; ++j) s += a->value.at(i, j) * a->value.at(i, j);
    const double norm = std::sqrt(s);
    check(norm > 0.0, "[ad::l2_normalize_rows] zero-norm row");
    norms[i] = norm;
    for (std::size_t j = 0; j < d; ++j) out.at(i, j) = a->value.at(i, j) / norm;
  }
  Tensor y_saved = out;
  return make_node(std::move(out), {a}, [n, d, norms, y_saved](Node& self) {
    const auto& a_ = self.parents[0];
    for (std::size_t i = 0; i < n; ++i) {
      double dot = 0.0;
      for (std::size_t j = 0; j < d; ++j) dot += self.grad.at(i, j) * y_saved.at(i, j);
      for (std::size_t j = 0; j < d; ++j)
        a_->grad.at(i, j) += (self.grad.at(i, j) - y_saved.at(i, j) * dot) / norms[i];
    }
  });
}

NodePtr softmax_rows(const NodePtr& a) {
  require_2d(a, "softmax_rows");
  const std::size_t n = a->value.rows(), d = a->value.cols();
  Tensor out(n, d);
  for (std::size_t i = 0; i < n; ++i) {
    double m = a->value.at(i, 0);
    for (std::size_t j = 1; j < d; ++j) m = std::max(m, a->value.at(i, j));
    double z = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      out.at(i, j) = std::exp(a->value.at(i, j) - m);
      z += out.at(i, j);
    }
    for (std::size_t j = 0; j < d; ++j) out.at(i, j) /= z;
  }
  Tensor s_saved = out;
  return make_node(std::move(out), {a}, [n, d, s_saved](Node& self) {
    const auto& a_ = self.parents[0];
    for (std::size_t i = 0; i < n; ++i) {
      double dot = 0.0;
      for (std::size_t j = 0; j < d; ++j) dot += self.grad.at(i, j) * s_saved.at(i, j);
      for (std::size_t j = 0; j < d; ++j)
        a_->grad.at(i, j) += s_saved.at(i, j) * (self.grad.at(i, j) - dot);
    }
  });
}

namespace {

struct Tap {
  std::size_t src;
  double w;
};

// One row/column axis of the knot-preserving map: src = out / (out_len/in_len).
std::vector<std::array<Tap, 2>> axis_taps(std::size_t in_len, std::size_t out_len) {
  std::vector<std::array<Tap, 2>> taps(out_len);
  const double ratio = static_cast<double>(in_len) / static_cast<double>(out_len);
  for (std::size_t o = 0; o < out_len; ++o) {
    double src = static_cast<double>(o) * ratio;
    const double max_src = static_cast<double>(in_len - 1);
    if (src > max_src) src = max_src;
    const std::size_t i0 = static_cast<std::size_t>(src);
    const std::size_t i1 = std::min(i0 + 1, in_len - 1);
    const double t = src - static_cast<double>(i0);
    taps[o] = {Tap{i0, 1.0 - t}, Tap{i1, t}};
  }
  return taps;
}

}  // namespace

NodePtr upsample_bilinear(const NodePtr& a, std::size_t out_h, std::size_t out_w) {
  require_2d(a, "upsample_bilinear");
  const std::size_t in_h = a->value.rows(), in_w = a->value.cols();
  check(in_h > 0 && in_w > 0 && out_h >= in_h && out_w >= in_w,
        "[ad::upsample_bilinear] output must not shrink the input");
  const auto ty = axis_taps(in_h, out_h);
  const auto tx = axis_taps(in_w, out_w);
  Tensor out(out_h, out_w);
  for (std::size_t y = 0; y < out_h; ++y)
    for (std::size_t x = 0; x < out_w; ++x) {
      double v = 0.0;
      for (const Tap& a_y : ty[y])
        for (const Tap& a_x : tx[x])
          v += a_y.w * a_x.w * a->value.at(a_y.src, a_x.src);
      out.at(y, x) = v;
    }
  return make_node(std::move(out), {a}, [ty, tx, out_h, out_w](Node& self) {
    const auto& a_ = self.parents[0];
    for (std::size_t y = 0; y < out_h; ++y)
      for (std::size_t x = 0; x < out_w; ++x) {
        const double g = self.grad.at(y, x);
        for (const Tap& a_y : ty[y])
          for (const Tap& a_x : tx[x])
            a_->grad.at(a_y.src, a_x.src) += a_y.w * a_x.w * g;
      }
  });
}

NodePtr cosine(const NodePtr& a, const NodePtr& b) {
  check(a->value.ndim() == 2 && a->value.rows() == 1, "[ad::cosine] a must be 1 x D");
  check(b->value.ndim() == 2 && b->value.rows() == 1, "[ad::cosine] b must be 1 x D");
  check(a->value.cols() == b->value.cols(), "[ad::cosine] dimension mismatch");
  const std::size_t d = a->value.cols();
  double dot = 0.0, na2 = 0.0, nb2 = 0.0;
  for (std::size_t j = 0; j < d; ++j) {
    dot += a->value[j] * b->value[j];
    na2 += a->value[j] * a->value[j];
    nb2 += b->value[j] * b->value[j];
  }
  check(na2 > 0.0 && nb2 > 0.0, "[ad::cosine] zero vector");
  const double na = std::sqrt(na2), nb = std::sqrt(nb2);
  const double c = dot / (na * nb);
  Tensor out(1, 1);
  out[0] = c;
  return make_node(std::move(out), {a, b}, [d, na, nb, c](Node& self) {
    const auto& a_ = self.parents[0];
    const auto& b_ = self.parents[1];
    const double g = self.grad[0];
    if (wants_grad(a_))
      for (std::size_t j = 0; j < d; ++j)
        a_->grad[j] += g * (b_->value[j] / (na * nb) - c * a_->value[j] / (na * na));
    if (wants_grad(b_))
      for (std::size_t j = 0; j < d; ++j)
        b_->grad[j] += g * (a_->value[j] / (na * nb) - c * b_->value[j] / (nb * nb));
  });
}

NodePtr infonce(const NodePtr& sims, std::size_t positive_index, double tau) {
  check(sims->value.ndim() == 2 && sims->value.cols() == 1,
        "[ad::infonce] similarities must be K x 1");
  const std::size_t k = sims->value.rows();
  check(k >= 1, "[ad::infonce] need at least one similarity");
  check(positive_index < k, "[ad::infonce] positive index out of range");
  check(tau > 0.0, "[ad::infonce] temperature must be positive");
  check(sims->value.all_finite(), "[ad::infonce] non-finite similarity");

  std::vector<double> z(k);
  for (std::size_t i = 0; i < k; ++i) z[i] = sims->value[i] / tau;
  std::size_t arg_max = 0;
  for (std::size_t i = 1; i < k; ++i)
    if (z[i] > z[arg_max]) arg_max = i;
  const double m = z[arg_max];
  double rest = 0.0;  // sum over the non-max slots; the max contributes exactly 1
  for (std::size_t i = 0; i < k; ++i)
    if (i != arg_max) rest += std::exp(z[i] - m);
  const double loss = (m - z[positive_index]) + std::log1p(rest);

  std::vector<double> p(k);  // softmax, reused by backward
  const double denom = 1.0 + rest;
  for (std::size_t i = 0; i < k; ++i)
    p[i] = (i == arg_max) ? 1.0 / denom : std::exp(z[i] - m) / denom;

  Tensor out(1, 1);
  out[0] = loss;
  return make_node(std::move(out), {sims}, [k, p, positive_index, tau](Node& self) {
    const auto& s_ = self.parents[0];
    const double g = self.grad[0];
    for (std::size_t i = 0; i < k; ++i) {
      double d = p[i];
      if (i == positive_index) d -= 1.0;
      s_->grad[i] += g * d / tau;
    }
  });
}

NodePtr bce(const std::vector<NodePtr>& preds, const std::vector<Tensor>& targets) {
  check(!preds.empty(), "[ad::bce] no predictions");
  check(preds.size() == targets.size(), "[ad::bce] prediction/target count mismatch");
  const std::size_t c = preds.size();
  const std::size_t n = preds[0]->value.numel();
  for (std::size_t i = 0; i < c; ++i) {
    check(preds[i]->value.same_shape(targets[i]), "[ad::bce] shape mismatch");
    check(preds[i]->value.numel() == n, "[ad::bce] inconsistent map sizes");
  }
  double acc = 0.0;
  for (std::size_t ci = 0; ci < c; ++ci) {
    double per_map = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double y = targets[ci][i];
      const double p = std::clamp(preds[ci]->value[i], kBceEps, 1.0 - kBceEps);
      per_map += y * std::log(p) + (1.0 - y) * std::log(1.0 - p);
    }
    acc += per_map / static_cast<double>(n);
  }
  Tensor out(1, 1);
  out[0] = -acc / static_cast<double>(c);
  std::vector<Tensor> tgt = targets;
  return make_node(std::move(out), preds, [c, n, tgt](Node& self) {
    const double g = self.grad[0];
    const double norm = 1.0 / (static_cast<double>(c) * static_cast<double>(n));
    for (std::size_t ci = 0; ci < c; ++ci) {
      const auto& p_ = self.parents[ci];
      if (!wants_grad(p_)) continue;
      for (std::size_t i = 0; i < n; ++i) {
        const double raw = p_->value[i];
        if (raw < kBceEps || raw > 1.0 - kBceEps) continue;  // clamped: flat
        const double y = tgt[ci][i];
        p_->grad[i] += g * norm * (-y / raw + (1.0 - y) / (1.0 - raw));
      }
    }
  });
}

}  // namespace afford::ad
