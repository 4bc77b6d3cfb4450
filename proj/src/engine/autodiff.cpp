#include "fedcy/engine/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>
#include <unordered_set>

namespace fedcy::engine {
namespace {

// ---------------------------------------------------------------------------
// graph traversal

struct Graph {
  std::vector<const Node*> order;  // inputs precede their consumers
  std::unordered_map<const Node*, std::size_t> slot;
};

Graph topological_order(const Node& root) {
  Graph g;
  std::unordered_map<std::string, OpKind> leaf_kinds;
  std::vector<std::pair<const Node*, std::size_t>> stack{{&root, 0}};
  std::unordered_set<const Node*> visiting;
  visiting.insert(&root);
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->inputs.size()) {
      const Node* child = node->inputs[next++].get();
      if (g.slot.count(child)) continue;
      if (!visiting.insert(child).second) throw std::logic_error("expression graph contains a cycle");
      stack.emplace_back(child, 0);
      continue;
    }
    if (node->op == OpKind::Variable || node->op == OpKind::Constant) {
      auto [it, inserted] = leaf_kinds.emplace(node->name, node->op);
      if (!inserted && it->second != node->op) {
        throw BindingError("leaf '" + node->name + "' declared both variable and constant");
      }
    }
    visiting.erase(node);
    g.slot.emplace(node, g.order.size());
    g.order.push_back(node);
    stack.pop_back();
  }
  return g;
}

// ---------------------------------------------------------------------------
// shape helpers

[[noreturn]] void shape_fail(OpKind op, const std::string& detail) {
  throw ShapeError(std::string(op_name(op)) + ": " + detail);
}

bool is_scalar(const Array& a) { return a.rank() == 0; }

void require_rank(OpKind op, const Array& a, std::size_t rank) {
  if (a.rank() != rank) {
    shape_fail(op, "expected rank " + std::to_string(rank) + ", got shape " + shape_string(a.shape()));
  }
}

// Shape of an elementwise binary result; only scalar-with-array broadcasts.
Shape broadcast_shape(OpKind op, const Array& a, const Array& b) {
  if (a.shape() == b.shape()) return a.shape();
  if (is_scalar(a)) return b.shape();
  if (is_scalar(b)) return a.shape();
  shape_fail(op, "incompatible shapes " + shape_string(a.shape()) + " and " + shape_string(b.shape()));
}

// Slices of a rank-1 or rank-2 array along `axis`: count x length with stride.
struct Slices {
  std::size_t count;
  std::size_t length;
  std::size_t stride;
  std::size_t start_step;
  Shape reduced;
};

Slices slices_along(OpKind op, const Array& a, std::size_t axis) {
  if (a.rank() == 1 && axis == 0) return {1, a.shape()[0], 1, 0, Shape{}};
  if (a.rank() == 2 && axis == 1) return {a.shape()[0], a.shape()[1], 1, a.shape()[1], Shape{a.shape()[0]}};
  if (a.rank() == 2 && axis == 0) return {a.shape()[1], a.shape()[0], a.shape()[1], 1, Shape{a.shape()[1]}};
  shape_fail(op, "axis " + std::to_string(axis) + " invalid for shape " + shape_string(a.shape()));
}

double cosine_denominator(double na, double nb) { return std::max(na * nb, kCosineFloor); }

double norm_of(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

// ---------------------------------------------------------------------------
// forward

using Inputs = std::vector<const Array*>;

Array elementwise_binary(OpKind op, const Array& a, const Array& b) {
  Array out(broadcast_shape(op, a, b));
  const bool sa = is_scalar(a) && !is_scalar(b);
  const bool sb = is_scalar(b) && !is_scalar(a);
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double x = sa ? a[0] : a[i];
    const double y = sb ? b[0] : b[i];
    switch (op) {
      case OpKind::Add: out[i] = x + y; break;
      case OpKind::Sub: out[i] = x - y; break;
      case OpKind::Mul: out[i] = x * y; break;
      case OpKind::Div: out[i] = x / y; break;
      default: break;
    }
  }
  return out;
}

Array forward(const Node& n, const Inputs& in, const Bindings& bindings) {
  switch (n.op) {
    case OpKind::Variable:
    case OpKind::Constant: {
      auto it = bindings.find(n.name);
      if (it == bindings.end()) throw BindingError("unbound leaf '" + n.name + "'");
      return it->second;
    }
    case OpKind::Literal:
      return n.value;
    case OpKind::Add:
    case OpKind::Sub:
    case OpKind::Mul:
    case OpKind::Div:
      return elementwise_binary(n.op, *in[0], *in[1]);
    case OpKind::Neg:
    case OpKind::Scale:
    case OpKind::Shift:
    case OpKind::Exp:
    case OpKind::Log:
    case OpKind::Relu:
    case OpKind::ClampMin: {
      Array out = *in[0];
      for (double& v : out.data()) {
        switch (n.op) {
          case OpKind::Neg: v = -v; break;
          case OpKind::Scale: v *= n.scalar; break;
          case OpKind::Shift: v += n.scalar; break;
          case OpKind::Exp: v = std::exp(v); break;
          case OpKind::Log: v = std::log(v); break;
          case OpKind::Relu: v = v > 0.0 ? v : 0.0; break;
          case OpKind::ClampMin: v = std::max(v, n.scalar); break;
          default: break;
        }
      }
      return out;
    }
    case OpKind::Sum:
    case OpKind::Mean: {
      const Array& a = *in[0];
      double s = 0.0;
      for (double v : a.data()) s += v;
      if (n.op == OpKind::Mean) {
        if (a.size() == 0) shape_fail(n.op, "mean of empty array");
        s /= static_cast<double>(a.size());
      }
      return Array::scalar(s);
    }
    case OpKind::Softmax:
    case OpKind::LogSumExp: {
      const Array& a = *in[0];
      const Slices sl = slices_along(n.op, a, n.axis);
      if (sl.length == 0) shape_fail(n.op, "reduction over an empty axis");
      Array out = n.op == OpKind::Softmax ? Array(a.shape()) : Array(sl.reduced);
      for (std::size_t s = 0; s < sl.count; ++s) {
        const std::size_t base = s * sl.start_step;
        double mx = a[base];
        for (std::size_t j = 1; j < sl.length; ++j) mx = std::max(mx, a[base + j * sl.stride]);
        double z = 0.0;
        for (std::size_t j = 0; j < sl.length; ++j) z += std::exp(a[base + j * sl.stride] - mx);
        if (n.op == OpKind::Softmax) {
          for (std::size_t j = 0; j < sl.length; ++j) {
            const std::size_t k = base + j * sl.stride;
            out[k] = std::exp(a[k] - mx) / z;
          }
        } else {
          out[s] = mx + std::log(z);
        }
      }
      return out;
    }
    case OpKind::Dot: {
      const Array& a = *in[0];
      const Array& b = *in[1];
      require_rank(n.op, a, 1);
      if (a.shape() != b.shape()) shape_fail(n.op, "length mismatch");
      double s = 0.0;
      for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
      return Array::scalar(s);
    }
    case OpKind::L2Norm:
      return Array::scalar(norm_of(in[0]->data()));
    case OpKind::Cosine: {
      const Array& a = *in[0];
      const Array& b = *in[1];
      require_rank(n.op, a, 1);
      if (a.shape() != b.shape()) shape_fail(n.op, "length mismatch");
      double s = 0.0;
      for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
      return Array::scalar(s / cosine_denominator(norm_of(a.data()), norm_of(b.data())));
    }
    case OpKind::CosineMatrix:
    case OpKind::NegSqDistMatrix: {
      const Array& a = *in[0];
      const Array& b = *in[1];
      require_rank(n.op, a, 2);
      require_rank(n.op, b, 2);
      if (a.cols() != b.cols()) shape_fail(n.op, "embedding dimension mismatch");
      const std::size_t rn = a.rows(), rm = b.rows(), d = a.cols();
      Array out(Shape{rn, rm});
      std::vector<double> na(rn), nb(rm);
      for (std::size_t i = 0; i < rn; ++i) na[i] = norm_of(a.row(i));
      for (std::size_t j = 0; j < rm; ++j) nb[j] = norm_of(b.row(j));
      for (std::size_t i = 0; i < rn; ++i) {
        for (std::size_t j = 0; j < rm; ++j) {
          double s = 0.0;
          if (n.op == OpKind::CosineMatrix) {
            for (std::size_t c = 0; c < d; ++c) s += a.at(i, c) * b.at(j, c);
            out.at(i, j) = s / cosine_denominator(na[i], nb[j]);
          } else {
            for (std::size_t c = 0; c < d; ++c) {
              const double diff = a.at(i, c) - b.at(j, c);
              s += diff * diff;
            }
            out.at(i, j) = -s;
          }
        }
      }
      return out;
    }
    case OpKind::MatMul: {
      const Array& a = *in[0];
      const Array& b = *in[1];
      require_rank(n.op, a, 2);
      require_rank(n.op, b, 2);
      if (a.cols() != b.rows()) {
        shape_fail(n.op, shape_string(a.shape()) + " x " + shape_string(b.shape()));
      }
      const std::size_t rn = a.rows(), inner = a.cols(), rm = b.cols();
      Array out(Shape{rn, rm});
      for (std::size_t i = 0; i < rn; ++i) {
        for (std::size_t k = 0; k < inner; ++k) {
          const double x = a.at(i, k);
          for (std::size_t j = 0; j < rm; ++j) out.at(i, j) += x * b.at(k, j);
        }
      }
      return out;
    }
    case OpKind::Transpose: {
      const Array& a = *in[0];
      require_rank(n.op, a, 2);
      Array out(Shape{a.cols(), a.rows()});
      for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t j = 0; j < a.cols(); ++j) out.at(j, i) = a.at(i, j);
      }
      return out;
    }
    case OpKind::Affine: {
      const Array& x = *in[0];
      const Array& w = *in[1];
      const Array& b = *in[2];
      require_rank(n.op, x, 2);
      require_rank(n.op, w, 2);
      require_rank(n.op, b, 1);
      if (x.cols() != w.rows() || b.size() != w.cols()) {
        shape_fail(n.op, "x " + shape_string(x.shape()) + ", weight " + shape_string(w.shape()) + ", bias " +
                             shape_string(b.shape()));
      }
      const std::size_t rn = x.rows(), inner = x.cols(), rm = w.cols();
      Array out(Shape{rn, rm});
      for (std::size_t i = 0; i < rn; ++i) {
        for (std::size_t j = 0; j < rm; ++j) out.at(i, j) = b[j];
        for (std::size_t k = 0; k < inner; ++k) {
          const double v = x.at(i, k);
          for (std::size_t j = 0; j < rm; ++j) out.at(i, j) += v * w.at(k, j);
        }
      }
      return out;
    }
    case OpKind::Gather: {
      const Array& a = *in[0];
      Array out(n.out_shape);
      for (std::size_t i = 0; i < n.indices.size(); ++i) {
        if (n.indices[i] >= a.size()) shape_fail(n.op, "index out of range");
        out[i] = a[n.indices[i]];
      }
      return out;
    }
    case OpKind::StackRows: {
      const Shape& first = in[0]->shape();
      if (first.size() > 1) shape_fail(n.op, "inputs must be scalars or vectors");
      for (const Array* a : in) {
        if (a->shape() != first) shape_fail(n.op, "inputs must share one shape");
      }
      const std::size_t width = shape_size(first);
      Shape shape = first.empty() ? Shape{in.size()} : Shape{in.size(), width};
      std::vector<double> data;
      data.reserve(in.size() * width);
      for (const Array* a : in) data.insert(data.end(), a->data().begin(), a->data().end());
      return Array(std::move(shape), std::move(data));
    }
  }
  throw std::logic_error("unhandled op");
}

// ---------------------------------------------------------------------------
// backward: add the contribution of `g` (adjoint of the node output) into the
// adjoints of the inputs. `grads[i]` is null when input i needs no gradient.

void accumulate_broadcast(Array& target, const Array& contribution) {
  if (target.size() == contribution.size()) {
    for (std::size_t i = 0; i < target.size(); ++i) target[i] += contribution[i];
  } else {
    double s = 0.0;
    for (double v : contribution.data()) s += v;
    target[0] += s;
  }
}

void backward(const Node& n, const Inputs& in, const Array& out, const Array& g, std::vector<Array*>& grads) {
  auto want = [&](std::size_t i) { return grads[i] != nullptr; };
  switch (n.op) {
    case OpKind::Variable:
    case OpKind::Constant:
    case OpKind::Literal:
      return;
    case OpKind::Add:
    case OpKind::Sub:
    case OpKind::Mul:
    case OpKind::Div: {
      const Array& a = *in[0];
      const Array& b = *in[1];
      const bool sa = is_scalar(a) && !is_scalar(b);
      const bool sb = is_scalar(b) && !is_scalar(a);
      Array ga(g.shape()), gb(g.shape());
      for (std::size_t i = 0; i < g.size(); ++i) {
        const double x = sa ? a[0] : a[i];
        const double y = sb ? b[0] : b[i];
        switch (n.op) {
          case OpKind::Add: ga[i] = g[i]; gb[i] = g[i]; break;
          case OpKind::Sub: ga[i] = g[i]; gb[i] = -g[i]; break;
          case OpKind::Mul: ga[i] = g[i] * y; gb[i] = g[i] * x; break;
          case OpKind::Div: ga[i] = g[i] / y; gb[i] = -g[i] * x / (y * y); break;
          default: break;
        }
      }
      if (want(0)) accumulate_broadcast(*grads[0], ga);
      if (want(1)) accumulate_broadcast(*grads[1], gb);
      return;
    }
    case OpKind::Neg:
    case OpKind::Scale:
    case OpKind::Shift:
    case OpKind::Exp:
    case OpKind::Log:
    case OpKind::Relu:
    case OpKind::ClampMin: {
      if (!want(0)) return;
      const Array& x = *in[0];
      Array& gx = *grads[0];
      for (std::size_t i = 0; i < x.size(); ++i) {
        double d = 0.0;
        switch (n.op) {
          case OpKind::Neg: d = -1.0; break;
          case OpKind::Scale: d = n.scalar; break;
          case OpKind::Shift: d = 1.0; break;
          case OpKind::Exp: d = out[i]; break;
          case OpKind::Log: d = 1.0 / x[i]; break;
          case OpKind::Relu: d = x[i] > 0.0 ? 1.0 : 0.0; break;
          case OpKind::ClampMin: d = x[i] > n.scalar ? 1.0 : 0.0; break;
          default: break;
        }
        gx[i] += g[i] * d;
      }
      return;
    }
    case OpKind::Sum:
    case OpKind::Mean: {
      if (!want(0)) return;
      const double gs = n.op == OpKind::Mean ? g[0] / static_cast<double>(in[0]->size()) : g[0];
      for (double& v : grads[0]->data()) v += gs;
      return;
    }
    case OpKind::Softmax:
    case OpKind::LogSumExp: {
      if (!want(0)) return;
      const Array& a = *in[0];
      const Slices sl = slices_along(n.op, a, n.axis);
      Array& ga = *grads[0];
      for (std::size_t s = 0; s < sl.count; ++s) {
        const std::size_t base = s * sl.start_step;
        if (n.op == OpKind::Softmax) {
          double inner = 0.0;
          for (std::size_t j = 0; j < sl.length; ++j) {
            const std::size_t k = base + j * sl.stride;
            inner += g[k] * out[k];
          }
          for (std::size_t j = 0; j < sl.length; ++j) {
            const std::size_t k = base + j * sl.stride;
            ga[k] += out[k] * (g[k] - inner);
          }
        } else {
          const double lse = out[s];
          for (std::size_t j = 0; j < sl.length; ++j) {
            const std::size_t k = base + j * sl.stride;
            ga[k] += g[s] * std::exp(a[k] - lse);
          }
        }
      }
      return;
    }
    case OpKind::Dot: {
      const Array& a = *in[0];
      const Array& b = *in[1];
      for (std::size_t i = 0; i < a.size(); ++i) {
        if (want(0)) (*grads[0])[i] += g[0] * b[i];
        if (want(1)) (*grads[1])[i] += g[0] * a[i];
      }
      return;
    }
    case OpKind::L2Norm: {
      if (!want(0) || out[0] == 0.0) return;
      const Array& a = *in[0];
      for (std::size_t i = 0; i < a.size(); ++i) (*grads[0])[i] += g[0] * a[i] / out[0];
      return;
    }
    case OpKind::Cosine: {
      const Array& a = *in[0];
      const Array& b = *in[1];
      const double na = norm_of(a.data()), nb = norm_of(b.data());
      const double den = cosine_denominator(na, nb);
      const bool floored = na * nb <= kCosineFloor;
      const double c = out[0];
      for (std::size_t i = 0; i < a.size(); ++i) {
        if (want(0)) {
          double d = b[i] / den;
          if (!floored) d -= c * a[i] / (na * na);
          (*grads[0])[i] += g[0] * d;
        }
        if (want(1)) {
          double d = a[i] / den;
          if (!floored) d -= c * b[i] / (nb * nb);
          (*grads[1])[i] += g[0] * d;
        }
      }
      return;
    }
    case OpKind::CosineMatrix: {
      const Array& a = *in[0];
      const Array& b = *in[1];
      const std::size_t rn = a.rows(), rm = b.rows(), d = a.cols();
      std::vector<double> na(rn), nb(rm);
      for (std::size_t i = 0; i < rn; ++i) na[i] = norm_of(a.row(i));
      for (std::size_t j = 0; j < rm; ++j) nb[j] = norm_of(b.row(j));
      for (std::size_t i = 0; i < rn; ++i) {
        for (std::size_t j = 0; j < rm; ++j) {
          const double gij = g.at(i, j);
          if (gij == 0.0) continue;
          const double den = cosine_denominator(na[i], nb[j]);
          const bool floored = na[i] * nb[j] <= kCosineFloor;
          const double c = out.at(i, j);
          for (std::size_t k = 0; k < d; ++k) {
            if (want(0)) {
              double dv = b.at(j, k) / den;
              if (!floored) dv -= c * a.at(i, k) / (na[i] * na[i]);
              grads[0]->at(i, k) += gij * dv;
            }
            if (want(1)) {
              double dv = a.at(i, k) / den;
              if (!floored) dv -= c * b.at(j, k) / (nb[j] * nb[j]);
              grads[1]->at(j, k) += gij * dv;
            }
          }
        }
      }
      return;
    }
    case OpKind::NegSqDistMatrix: {
      const Array& a = *in[0];
      const Array& b = *in[1];
      const std::size_t rn = a.rows(), rm = b.rows(), d = a.cols();
      for (std::size_t i = 0; i < rn; ++i) {
        for (std::size_t j = 0; j < rm; ++j) {
          const double gij = g.at(i, j);
          for (std::size_t k = 0; k < d; ++k) {
            const double diff = a.at(i, k) - b.at(j, k);
            if (want(0)) grads[0]->at(i, k) -= 2.0 * gij * diff;
            if (want(1)) grads[1]->at(j, k) += 2.0 * gij * diff;
          }
        }
      }
      return;
    }
    case OpKind::MatMul: {
      const Array& a = *in[0];
      const Array& b = *in[1];
      const std::size_t rn = a.rows(), inner = a.cols(), rm = b.cols();
      for (std::size_t i = 0; i < rn; ++i) {
        for (std::size_t k = 0; k < inner; ++k) {
          double acc = 0.0;
          for (std::size_t j = 0; j < rm; ++j) {
            acc += g.at(i, j) * b.at(k, j);
            if (want(1)) grads[1]->at(k, j) += a.at(i, k) * g.at(i, j);
          }
          if (want(0)) grads[0]->at(i, k) += acc;
        }
      }
      return;
    }
    case OpKind::Transpose: {
      if (!want(0)) return;
      for (std::size_t i = 0; i < g.rows(); ++i) {
        for (std::size_t j = 0; j < g.cols(); ++j) grads[0]->at(j, i) += g.at(i, j);
      }
      return;
    }
    case OpKind::Affine: {
      const Array& x = *in[0];
      const Array& w = *in[1];
      const std::size_t rn = x.rows(), inner = x.cols(), rm = w.cols();
      for (std::size_t i = 0; i < rn; ++i) {
        for (std::size_t k = 0; k < inner; ++k) {
          double acc = 0.0;
          const double xv = x.at(i, k);
          for (std::size_t j = 0; j < rm; ++j) {
            acc += g.at(i, j) * w.at(k, j);
            if (want(1)) grads[1]->at(k, j) += xv * g.at(i, j);
          }
          if (want(0)) grads[0]->at(i, k) += acc;
        }
        if (want(2)) {
          for (std::size_t j = 0; j < rm; ++j) (*grads[2])[j] += g.at(i, j);
        }
      }
      return;
    }
    case OpKind::Gather: {
      if (!want(0)) return;
      for (std::size_t i = 0; i < n.indices.size(); ++i) (*grads[0])[n.indices[i]] += g[i];
      return;
    }
    case OpKind::StackRows: {
      const std::size_t width = in[0]->size();
      for (std::size_t r = 0; r < in.size(); ++r) {
        if (!want(r)) continue;
        for (std::size_t c = 0; c < width; ++c) (*grads[r])[c] += g[r * width + c];
      }
      return;
    }
  }
}

// ---------------------------------------------------------------------------

struct Pass {
  Graph graph;
  std::vector<Array> values;
};

Pass run_forward(const Expr& expr, const Bindings& bindings) {
  Pass pass{topological_order(expr.node()), {}};
  pass.values.reserve(pass.graph.order.size());
  Inputs in;
  for (const Node* node : pass.graph.order) {
    in.clear();
    for (const auto& child : node->inputs) in.push_back(&pass.values[pass.graph.slot.at(child.get())]);
    Array v = forward(*node, in, bindings);
    if (!v.all_finite()) {
      throw NonFiniteError(std::string("non-finite value produced by ") + op_name(node->op) +
                           (node->name.empty() ? "" : " '" + node->name + "'"));
    }
    pass.values.push_back(std::move(v));
  }
  return pass;
}

ValueAndGradient reverse(const Expr& expr, const Bindings& bindings, std::span<const std::string> wrt) {
  Pass pass = run_forward(expr, bindings);
  const Graph& graph = pass.graph;
  const Array& root = pass.values.back();
  if (root.size() != 1) throw ShapeError("gradient requires a scalar root, got shape " + shape_string(root.shape()));

  std::unordered_set<std::string> targets(wrt.begin(), wrt.end());
  for (const Node* node : graph.order) {
    if (node->op == OpKind::Constant && targets.count(node->name)) {
      throw BindingError("cannot differentiate with respect to constant leaf '" + node->name + "'");
    }
  }

  // Only nodes depending on a requested variable carry adjoints.
  const std::size_t count = graph.order.size();
  std::vector<char> needs(count, 0);
  for (std::size_t i = 0; i < count; ++i) {
    const Node* node = graph.order[i];
    if (node->op == OpKind::Variable) {
      needs[i] = targets.count(node->name) ? 1 : 0;
      continue;
    }
    for (const auto& child : node->inputs) {
      if (needs[graph.slot.at(child.get())]) {
        needs[i] = 1;
        break;
      }
    }
  }

  std::vector<Array> adjoints(count);
  for (std::size_t i = 0; i < count; ++i) {
    if (needs[i]) adjoints[i] = Array(pass.values[i].shape(), 0.0);
  }
  if (needs[count - 1]) adjoints[count - 1][0] = 1.0;

  Inputs in;
  std::vector<Array*> grads;
  for (std::size_t i = count; i-- > 0;) {
    if (!needs[i]) continue;
    const Node* node = graph.order[i];
    if (node->inputs.empty()) continue;
    in.clear();
    grads.clear();
    for (const auto& child : node->inputs) {
      const std::size_t s = graph.slot.at(child.get());
      in.push_back(&pass.values[s]);
      grads.push_back(needs[s] ? &adjoints[s] : nullptr);
    }
    backward(*node, in, pass.values[i], adjoints[i], grads);
  }

  ValueAndGradient result;
  result.value = root[0];
  for (const auto& name : wrt) {
    auto bound = bindings.find(name);
    if (bound == bindings.end()) throw BindingError("gradient requested for unbound leaf '" + name + "'");
    result.gradients[name] = Array(bound->second.shape(), 0.0);
  }
  for (std::size_t i = 0; i < count; ++i) {
    const Node* node = graph.order[i];
    if (node->op != OpKind::Variable || !needs[i]) continue;
    Array& acc = result.gradients[node->name];
    for (std::size_t k = 0; k < acc.size(); ++k) acc[k] += adjoints[i][k];
  }
  for (const auto& [name, g] : result.gradients) {
    if (!g.all_finite()) throw NonFiniteError("non-finite gradient for '" + name + "'");
  }
  return result;
}

}  // namespace

Array evaluate(const Expr& expr, const Bindings& bindings) {
  return std::move(run_forward(expr, bindings).values.back());
}

Gradients gradient(const Expr& expr, const Bindings& bindings, std::span<const std::string> wrt) {
  return reverse(expr, bindings, wrt).gradients;
}

ValueAndGradient value_and_gradient(const Expr& expr, const Bindings& bindings, std::span<const std::string> wrt) {
  return reverse(expr, bindings, wrt);
}

Gradients numeric_gradient(const Expr& expr, const Bindings& bindings, std::span<const std::string> wrt,
                           double step) {
  if (!(step > 0.0)) throw std::invalid_argument("numeric_gradient step must be positive");
  const Graph graph = topological_order(expr.node());
  std::unordered_set<std::string> constants;
  for (const Node* node : graph.order) {
    if (node->op == OpKind::Constant) constants.insert(node->name);
  }
  const Array root = evaluate(expr, bindings);
  if (root.size() != 1) throw ShapeError("numeric_gradient requires a scalar root");

  Gradients out;
  Bindings probe = bindings;
  for (const auto& name : wrt) {
    auto it = probe.find(name);
    if (it == probe.end()) throw BindingError("gradient requested for unbound leaf '" + name + "'");
    Array g(it->second.shape(), 0.0);
    if (!constants.count(name)) {
      for (std::size_t i = 0; i < g.size(); ++i) {
        const double original = it->second[i];
        it->second[i] = original + step;
        const double up = evaluate(expr, probe).item();
        it->second[i] = original - step;
        const double down = evaluate(expr, probe).item();
        it->second[i] = original;
        g[i] = (up - down) / (2.0 * step);
      }
    }
    out[name] = std::move(g);
  }
  return out;
}

double relative_error(const Gradients& a, const Gradients& b, double floor) {
  double diff = 0.0, na = 0.0, nb = 0.0;
  for (const auto& [name, ga] : a) {
    auto it = b.find(name);
    if (it == b.end() || it->second.shape() != ga.shape()) {
      throw ShapeError("relative_error: gradient sets differ at '" + name + "'");
    }
    for (std::size_t i = 0; i < ga.size(); ++i) {
      const double x = ga[i], y = it->second[i];
      diff += (x - y) * (x - y);
      na += x * x;
      nb += y * y;
    }
  }
  if (a.size() != b.size()) throw ShapeError("relative_error: gradient sets differ in size");
  return std::sqrt(diff) / std::max({std::sqrt(na), std::sqrt(nb), floor});
}

}  // namespace fedcy::engine
