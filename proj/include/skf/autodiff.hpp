// Reverse-mode automatic differentiation over Tensor values.
//
// A Graph is a tape: every operation appends a node holding the forward value
// and the indices of its parents. backward() replays the tape in reverse and
// accumulates adjoints by summation, so a value used twice receives the sum of
// both path contributions. One graph serves one training step; distinct graphs
// are independent.
#pragma once

#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "skf/tensor.hpp"

namespace skf {

struct Var {
  std::uint32_t id = 0;
};

class Graph {
 public:
  // Leaf whose gradient is wanted.
  Var param(Tensor v) {
    v.requires_grad = true;
    return push(Op::kLeaf, {}, std::move(v), true);
  }

  // Leaf treated as a constant.
  Var constant(Tensor v) {
    v.requires_grad = false;
    return push(Op::kLeaf, {}, std::move(v), false);
  }

  // Leaf honoring the tensor's own requires_grad flag.
  Var leaf(Tensor v) {
    const bool rg = v.requires_grad;
    return push(Op::kLeaf, {}, std::move(v), rg);
  }

  Var add(Var a, Var b) { return push(Op::kAdd, {a.id, b.id}, skf::add(val(a), val(b))); }
  Var subtract(Var a, Var b) {
    return push(Op::kSubtract, {a.id, b.id}, skf::subtract(val(a), val(b)));
  }
  Var hadamard(Var a, Var b) {
    return push(Op::kHadamard, {a.id, b.id}, skf::hadamard(val(a), val(b)));
  }
  Var add_rowvec(Var m, Var v) {
    return push(Op::kAddRowvec, {m.id, v.id}, skf::add_rowvec(val(m), val(v)));
  }
  Var matmul(Var a, Var b) { return push(Op::kMatmul, {a.id, b.id}, skf::matmul(val(a), val(b))); }
  Var concat_cols(Var a, Var b) {
    return push(Op::kConcatCols, {a.id, b.id}, skf::concat_cols(val(a), val(b)));
  }
  Var concat_rows(const std::vector<Var>& parts) {
    std::vector<Tensor> values;
    std::vector<std::uint32_t> ids;
    values.reserve(parts.size());
    for (Var p : parts) {
      values.push_back(val(p));
      ids.push_back(p.id);
    }
    return push(Op::kConcatRows, std::move(ids), skf::concat_rows(values));
  }
  Var slice_rows(Var m, std::size_t r0, std::size_t r1) {
    Var v = push(Op::kSliceRows, {m.id}, skf::slice_rows(val(m), r0, r1));
    nodes_[v.id].r0 = r0;
    nodes_[v.id].r1 = r1;
    return v;
  }
  Var sigmoid(Var a) { return push(Op::kSigmoid, {a.id}, skf::sigmoid(val(a))); }
  Var tanh(Var a) { return push(Op::kTanh, {a.id}, skf::tanh(val(a))); }
  Var relu(Var a) { return push(Op::kRelu, {a.id}, skf::relu(val(a))); }
  Var abs_val(Var a) { return push(Op::kAbsVal, {a.id}, skf::abs_val(val(a))); }
  Var pow_scalar(Var a, double alpha) {
    Var v = push(Op::kPowScalar, {a.id}, skf::pow_scalar(val(a), alpha));
    nodes_[v.id].attr = alpha;
    return v;
  }
  Var log_eps(Var a) { return push(Op::kLogEps, {a.id}, skf::log_eps(val(a))); }
  Var sum_all(Var a) { return push(Op::kSumAll, {a.id}, skf::sum_all(val(a))); }
  Var scale(Var a, double factor) {
    Var v = push(Op::kScale, {a.id}, skf::scale(val(a), factor));
    nodes_[v.id].attr = factor;
    return v;
  }

  const Tensor& value(Var v) const { return nodes_.at(v.id).value; }

  // Gradient of the last backward() target with respect to v. Parameters the
  // loss never touched report an all-zero gradient.
  const Tensor& grad(Var v) {
    if (grads_.size() != nodes_.size()) throw std::logic_error("grad before backward");
    Tensor& g = grads_[v.id];
    if (g.data.empty()) {
      const Tensor& val = nodes_[v.id].value;
      g = Tensor::zeros(val.rows, val.cols);
    }
    return g;
  }

  void backward(Var loss) {
    if (!nodes_.at(loss.id).value.is_scalar())
      throw std::invalid_argument("backward requires a scalar loss");
    grads_.assign(nodes_.size(), Tensor());
    grads_[loss.id] = Tensor::scalar(1.0);
    for (std::size_t i = nodes_.size(); i-- > 0;) {
      const Node& n = nodes_[i];
      if (n.op == Op::kLeaf || grads_[i].data.empty() || !n.needs_grad) continue;
      const Tensor& g = grads_[i];
      switch (n.op) {
        case Op::kAdd:
          acc_into(n.parents[0], g);
          acc_into(n.parents[1], g);
          break;
        case Op::kSubtract:
          acc_into(n.parents[0], g);
          acc_scaled(n.parents[1], g, -1.0);
          break;
        case Op::kHadamard:
          acc_product(n.parents[0], g, nodes_[n.parents[1]].value);
          acc_product(n.parents[1], g, nodes_[n.parents[0]].value);
          break;
        case Op::kAddRowvec: {
          acc_into(n.parents[0], g);
          if (wants(n.parents[1])) {
            Tensor& gv = grad_slot(n.parents[1]);
            for (std::size_t r = 0; r < g.rows; ++r)
              for (std::size_t c = 0; c < g.cols; ++c) gv.data[c] += g(r, c);
          }
          break;
        }
        case Op::kMatmul: {
          const Tensor& a = nodes_[n.parents[0]].value;
          const Tensor& b = nodes_[n.parents[1]].value;
          if (wants(n.parents[0])) acc_tensor(n.parents[0], matmul_nt(g, b));
          if (wants(n.parents[1])) acc_tensor(n.parents[1], matmul_tn(a, g));
          break;
        }
        case Op::kConcatCols: {
          const Tensor& a = nodes_[n.parents[0]].value;
          if (wants(n.parents[0])) {
            Tensor& ga = grad_slot(n.parents[0]);
            for (std::size_t r = 0; r < a.rows; ++r)
              for (std::size_t c = 0; c < a.cols; ++c) ga(r, c) += g(r, c);
          }
          if (wants(n.parents[1])) {
            Tensor& gb = grad_slot(n.parents[1]);
            for (std::size_t r = 0; r < gb.rows; ++r)
              for (std::size_t c = 0; c < gb.cols; ++c) gb(r, c) += g(r, a.cols + c);
          }
          break;
        }
        case Op::kConcatRows: {
          std::size_t r0 = 0;
          for (std::uint32_t pid : n.parents) {
            const Tensor& p = nodes_[pid].value;
            if (wants(pid)) {
              Tensor& gp = grad_slot(pid);
              for (std::size_t i2 = 0; i2 < p.data.size(); ++i2)
                gp.data[i2] += g.data[r0 * g.cols + i2];
            }
            r0 += p.rows;
          }
          break;
        }
        case Op::kSliceRows: {
          if (wants(n.parents[0])) {
            Tensor& gp = grad_slot(n.parents[0]);
            for (std::size_t i2 = 0; i2 < g.data.size(); ++i2)
              gp.data[n.r0 * gp.cols + i2] += g.data[i2];
          }
          break;
        }
        case Op::kSigmoid: {
          if (wants(n.parents[0])) {
            Tensor& gp = grad_slot(n.parents[0]);
            for (std::size_t i2 = 0; i2 < g.data.size(); ++i2) {
              const double y = n.value.data[i2];
              gp.data[i2] += g.data[i2] * y * (1.0 - y);
            }
          }
          break;
        }
        case Op::kTanh: {
          if (wants(n.parents[0])) {
            Tensor& gp = grad_slot(n.parents[0]);
            for (std::size_t i2 = 0; i2 < g.data.size(); ++i2) {
              const double y = n.value.data[i2];
              gp.data[i2] += g.data[i2] * (1.0 - y * y);
            }
          }
          break;
        }
        case Op::kRelu: {
          if (wants(n.parents[0])) {
            Tensor& gp = grad_slot(n.parents[0]);
            const Tensor& x = nodes_[n.parents[0]].value;
            for (std::size_t i2 = 0; i2 < g.data.size(); ++i2)
              if (x.data[i2] > 0.0) gp.data[i2] += g.data[i2];
          }
          break;
        }
        case Op::kAbsVal: {
          // Subgradient 0 at x = 0.
          if (wants(n.parents[0])) {
            Tensor& gp = grad_slot(n.parents[0]);
            const Tensor& x = nodes_[n.parents[0]].value;
            for (std::size_t i2 = 0; i2 < g.data.size(); ++i2) {
              const double s = x.data[i2] > 0.0 ? 1.0 : (x.data[i2] < 0.0 ? -1.0 : 0.0);
              gp.data[i2] += g.data[i2] * s;
            }
          }
          break;
        }
        case Op::kPowScalar: {
          if (wants(n.parents[0])) {
            Tensor& gp = grad_slot(n.parents[0]);
            const Tensor& x = nodes_[n.parents[0]].value;
            const double alpha = n.attr;
            for (std::size_t i2 = 0; i2 < g.data.size(); ++i2) {
              const double xv = x.data[i2];
              double d;
              if (xv == 0.0)
                d = (alpha == 1.0) ? 1.0 : 0.0;  // clamped below alpha = 1
              else
                d = alpha * std::pow(xv, alpha - 1.0);
              gp.data[i2] += g.data[i2] * d;
            }
          }
          break;
        }
        case Op::kLogEps: {
          if (wants(n.parents[0])) {
            Tensor& gp = grad_slot(n.parents[0]);
            const Tensor& x = nodes_[n.parents[0]].value;
            for (std::size_t i2 = 0; i2 < g.data.size(); ++i2)
              gp.data[i2] += g.data[i2] / (x.data[i2] + kLogEps);
          }
          break;
        }
        case Op::kSumAll: {
          if (wants(n.parents[0])) {
            Tensor& gp = grad_slot(n.parents[0]);
            const double gs = g.data[0];
            for (double& x : gp.data) x += gs;
          }
          break;
        }
        case Op::kScale:
          acc_scaled(n.parents[0], g, n.attr);
          break;
        case Op::kLeaf:
          break;
      }
    }
    // Untouched parameters still report zeros through grad().
  }

  std::size_t size() const { return nodes_.size(); }

 private:
  enum class Op {
    kLeaf,
    kAdd,
    kSubtract,
    kHadamard,
    kAddRowvec,
    kMatmul,
    kConcatCols,
    kConcatRows,
    kSliceRows,
    kSigmoid,
    kTanh,
    kRelu,
    kAbsVal,
    kPowScalar,
    kLogEps,
    kSumAll,
    kScale,
  };

  struct Node {
    Op op;
    std::vector<std::uint32_t> parents;
    Tensor value;
    double attr = 0.0;
    std::size_t r0 = 0, r1 = 0;
    bool needs_grad = false;
  };

  Var push(Op op, std::vector<std::uint32_t> parents, Tensor value, bool needs_grad = false) {
    if (op != Op::kLeaf) {
      for (std::uint32_t p : parents) needs_grad = needs_grad || nodes_[p].needs_grad;
      if (!all_finite(value)) throw std::runtime_error("non-finite value");
    }
    Node n;
    n.op = op;
    n.parents = std::move(parents);
    n.value = std::move(value);
    n.needs_grad = needs_grad;
    nodes_.push_back(std::move(n));
    return Var{static_cast<std::uint32_t>(nodes_.size() - 1)};
  }

  const Tensor& val(Var v) const { return nodes_.at(v.id).value; }

  bool wants(std::uint32_t id) const { return nodes_[id].needs_grad; }

  Tensor& grad_slot(std::uint32_t id) {
    Tensor& g = grads_[id];
    if (g.data.empty()) {
      const Tensor& v = nodes_[id].value;
      g = Tensor::zeros(v.rows, v.cols);
    }
    return g;
  }

  void acc_into(std::uint32_t id, const Tensor& g) {
    if (!wants(id)) return;
    Tensor& gp = grad_slot(id);
    for (std::size_t i = 0; i < g.data.size(); ++i) gp.data[i] += g.data[i];
  }

  void acc_scaled(std::uint32_t id, const Tensor& g, double f) {
    if (!wants(id)) return;
    Tensor& gp = grad_slot(id);
    for (std::size_t i = 0; i < g.data.size(); ++i) gp.data[i] += g.data[i] * f;
  }

  void acc_product(std::uint32_t id, const Tensor& g, const Tensor& other) {
    if (!wants(id)) return;
    Tensor& gp = grad_slot(id);
    for (std::size_t i = 0; i < g.data.size(); ++i) gp.data[i] += g.data[i] * other.data[i];
  }

  void acc_tensor(std::uint32_t id, const Tensor& contribution) {
    Tensor& gp = grad_slot(id);
    for (std::size_t i = 0; i < contribution.data.size(); ++i)
      gp.data[i] += contribution.data[i];
  }

  std::vector<Node> nodes_;
  std::vector<Tensor> grads_;
};

// Compares analytic gradients against central finite differences.
//
// f must be callable as f(params, grads_out) -> double: it evaluates the loss
// at the given parameter values and, when grads_out is non-null, fills one
// gradient tensor per parameter. Returns the maximum elementwise relative
// error, with denominator max(|analytic|, |numeric|, 1e-8).
template <class F>
double grad_check(F&& f, std::vector<Tensor> params, double eps = 1e-4) {
  if (eps < 1e-7 || eps > 1e-3) throw std::invalid_argument("grad_check: eps out of range");
  std::vector<Tensor> analytic;
  f(params, &analytic);
  if (analytic.size() != params.size()) throw std::logic_error("grad_check: gradient count");
  double max_rel = 0.0;
  for (std::size_t p = 0; p < params.size(); ++p) {
    for (std::size_t i = 0; i < params[p].data.size(); ++i) {
      const double saved = params[p].data[i];
      params[p].data[i] = saved + eps;
      const double fp = f(params, nullptr);
      params[p].data[i] = saved - eps;
      const double fm = f(params, nullptr);
      params[p].data[i] = saved;
      const double numeric = (fp - fm) / (2.0 * eps);
      const double a = analytic[p].data[i];
      const double denom = std::max({std::fabs(a), std::fabs(numeric), 1e-8});
      max_rel = std::max(max_rel, std::fabs(a - numeric) / denom);
    }
  }
  return max_rel;
}

}  // namespace skf
