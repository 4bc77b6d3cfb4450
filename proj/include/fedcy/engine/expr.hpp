#pragma once

#include <cstddef>
#include <memory>
#include <string>
#include <vector>

#include "fedcy/engine/array.hpp"

namespace fedcy::engine {

enum class OpKind {
  Variable,   // named leaf, differentiable
  Constant,   // named leaf, never differentiated
  Literal,    // inline constant value
  Add,
  Sub,
  Mul,
  Div,
  Neg,
  Scale,      // x * c
  Shift,      // x + c
  Exp,
  Log,
  Relu,
  ClampMin,   // max(x, c)
  Sum,
  Mean,
  Softmax,    // along axis
  LogSumExp,  // along axis, max-shifted
  Dot,
  L2Norm,
  Cosine,
  CosineMatrix,     // rows of A vs rows of B
  NegSqDistMatrix,  // -|a_i - b_j|^2
  MatMul,
  Transpose,
  Affine,     // X W + b, b added to every row
  Gather,     // flat indices into the input, reshaped
  StackRows,  // vectors -> matrix
};

const char* op_name(OpKind op) noexcept;

/// Denominator floor used by the cosine-similarity operations.
inline constexpr double kCosineFloor = 1e-12;

struct Node;
using NodePtr = std::shared_ptr<const Node>;

struct Node {
  OpKind op;
  std::vector<NodePtr> inputs;
  std::string name;                  // Variable / Constant
  Array value;                       // Literal
  double scalar = 0.0;               // Scale / Shift / ClampMin
  std::size_t axis = 0;              // Softmax / LogSumExp
  std::vector<std::size_t> indices;  // Gather
  Shape out_shape;                   // Gather
};

/// Immutable handle to a node of an acyclic expression graph. Copies share
/// the underlying node, so an Expr may be reused freely as a sub-expression.
class Expr {
 public:
  static Expr variable(std::string name);
  static Expr constant(std::string name);
  static Expr literal(Array value);

  explicit Expr(NodePtr node) : node_(std::move(node)) {}

  const Node& node() const noexcept { return *node_; }
  const NodePtr& ptr() const noexcept { return node_; }
  OpKind op() const noexcept { return node_->op; }

 private:
  NodePtr node_;
};

Expr add(const Expr& a, const Expr& b);
Expr sub(const Expr& a, const Expr& b);
Expr mul(const Expr& a, const Expr& b);
Expr div(const Expr& a, const Expr& b);
Expr neg(const Expr& a);
Expr scale(const Expr& a, double c);
Expr shift(const Expr& a, double c);
Expr exp(const Expr& a);
Expr log(const Expr& a);
Expr relu(const Expr& a);
Expr clamp_min(const Expr& a, double floor);
Expr square(const Expr& a);
Expr sum(const Expr& a);
Expr mean(const Expr& a);
Expr softmax(const Expr& a, std::size_t axis);
Expr logsumexp(const Expr& a, std::size_t axis);
Expr dot(const Expr& a, const Expr& b);
Expr l2norm(const Expr& a);
Expr cosine(const Expr& a, const Expr& b);
Expr cosine_matrix(const Expr& a, const Expr& b);
Expr neg_sq_dist_matrix(const Expr& a, const Expr& b);
Expr matmul(const Expr& a, const Expr& b);
Expr transpose(const Expr& a);
Expr affine(const Expr& x, const Expr& weight, const Expr& bias);
Expr gather(const Expr& a, std::vector<std::size_t> flat_indices, Shape out_shape);
Expr stack_rows(const std::vector<Expr>& rows);

/// Row r of a matrix as a vector.
Expr row(const Expr& matrix, std::size_t r, std::size_t cols);
/// Element i of a vector as a scalar.
Expr element(const Expr& vector, std::size_t i);

inline Expr operator+(const Expr& a, const Expr& b) { return add(a, b); }
inline Expr operator-(const Expr& a, const Expr& b) { return sub(a, b); }
inline Expr operator*(const Expr& a, const Expr& b) { return mul(a, b); }
inline Expr operator/(const Expr& a, const Expr& b) { return div(a, b); }
inline Expr operator-(const Expr& a) { return neg(a); }
inline Expr operator*(const Expr& a, double c) { return scale(a, c); }
inline Expr operator*(double c, const Expr& a) { return scale(a, c); }
inline Expr operator+(const Expr& a, double c) { return shift(a, c); }
inline Expr operator+(double c, const Expr& a) { return shift(a, c); }

}  // namespace fedcy::engine
