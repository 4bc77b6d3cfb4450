#include "fedcy/engine/expr.hpp"

#include <utility>

namespace fedcy::engine {

const char* op_name(OpKind op) noexcept {
  switch (op) {
    case OpKind::Variable: return "variable";
    case OpKind::Constant: return "constant";
    case OpKind::Literal: return "literal";
    case OpKind::Add: return "add";
    case OpKind::Sub: return "sub";
    case OpKind::Mul: return "mul";
    case OpKind::Div: return "div";
    case OpKind::Neg: return "neg";
    case OpKind::Scale: return "scale";
    case OpKind::Shift: return "shift";
    case OpKind::Exp: return "exp";
    case OpKind::Log: return "log";
    case OpKind::Relu: return "relu";
    case OpKind::ClampMin: return "clamp_min";
    case OpKind::Sum: return "sum";
    case OpKind::Mean: return "mean";
    case OpKind::Softmax: return "softmax";
    case OpKind::LogSumExp: return "logsumexp";
    case OpKind::Dot: return "dot";
    case OpKind::L2Norm: return "l2norm";
    case OpKind::Cosine: return "cosine";
    case OpKind::CosineMatrix: return "cosine_matrix";
    case OpKind::NegSqDistMatrix: return "neg_sq_dist_matrix";
    case OpKind::MatMul: return "matmul";
    case OpKind::Transpose: return "transpose";
    case OpKind::Affine: return "affine";
    case OpKind::Gather: return "gather";
    case OpKind::StackRows: return "stack_rows";
  }
  return "unknown";
}

namespace {

Expr make(OpKind op, std::vector<NodePtr> inputs) {
  auto node = std::make_shared<Node>();
  node->op = op;
  node->inputs = std::move(inputs);
  return Expr(std::move(node));
}

Expr make_scalar_op(OpKind op, const Expr& a, double c) {
  auto node = std::make_shared<Node>();
  node->op = op;
  node->inputs = {a.ptr()};
  node->scalar = c;
  return Expr(std::move(node));
}

Expr make_axis_op(OpKind op, const Expr& a, std::size_t axis) {
  auto node = std::make_shared<Node>();
  node->op = op;
  node->inputs = {a.ptr()};
  node->axis = axis;
  return Expr(std::move(node));
}

Expr make_leaf(OpKind op, std::string name) {
  if (name.empty()) throw BindingError("leaf name must be nonempty");
  auto node = std::make_shared<Node>();
  node->op = op;
  node->name = std::move(name);
  return Expr(std::move(node));
}

}  // namespace

Expr Expr::variable(std::string name) { return make_leaf(OpKind::Variable, std::move(name)); }
Expr Expr::constant(std::string name) { return make_leaf(OpKind::Constant, std::move(name)); }

Expr Expr::literal(Array value) {
  auto node = std::make_shared<Node>();
  node->op = OpKind::Literal;
  node->value = std::move(value);
  return Expr(std::move(node));
}

Expr add(const Expr& a, const Expr& b) { return make(OpKind::Add, {a.ptr(), b.ptr()}); }
Expr sub(const Expr& a, const Expr& b) { return make(OpKind::Sub, {a.ptr(), b.ptr()}); }
Expr mul(const Expr& a, const Expr& b) { return make(OpKind::Mul, {a.ptr(), b.ptr()}); }
Expr div(const Expr& a, const Expr& b) { return make(OpKind::Div, {a.ptr(), b.ptr()}); }
Expr neg(const Expr& a) { return make(OpKind::Neg, {a.ptr()}); }
Expr scale(const Expr& a, double c) { return make_scalar_op(OpKind::Scale, a, c); }
Expr shift(const Expr& a, double c) { return make_scalar_op(OpKind::Shift, a, c); }
Expr exp(const Expr& a) { return make(OpKind::Exp, {a.ptr()}); }
Expr log(const Expr& a) { return make(OpKind::Log, {a.ptr()}); }
Expr relu(const Expr& a) { return make(OpKind::Relu, {a.ptr()}); }
Expr clamp_min(const Expr& a, double floor) { return make_scalar_op(OpKind::ClampMin, a, floor); }
Expr square(const Expr& a) { return mul(a, a); }
Expr sum(const Expr& a) { return make(OpKind::Sum, {a.ptr()}); }
Expr mean(const Expr& a) { return make(OpKind::Mean, {a.ptr()}); }
Expr softmax(const Expr& a, std::size_t axis) { return make_axis_op(OpKind::Softmax, a, axis); }
Expr logsumexp(const Expr& a, std::size_t axis) { return make_axis_op(OpKind::LogSumExp, a, axis); }
Expr dot(const Expr& a, const Expr& b) { return make(OpKind::Dot, {a.ptr(), b.ptr()}); }
Expr l2norm(const Expr& a) { return make(OpKind::L2Norm, {a.ptr()}); }
Expr cosine(const Expr& a, const Expr& b) { return make(OpKind::Cosine, {a.ptr(), b.ptr()}); }
Expr cosine_matrix(const Expr& a, const Expr& b) { return make(OpKind::CosineMatrix, {a.ptr(), b.ptr()}); }
Expr neg_sq_dist_matrix(const Expr& a, const Expr& b) {
  return make(OpKind::NegSqDistMatrix, {a.ptr(), b.ptr()});
}
Expr matmul(const Expr& a, const Expr& b) { return make(OpKind::MatMul, {a.ptr(), b.ptr()}); }
Expr transpose(const Expr& a) { return make(OpKind::Transpose, {a.ptr()}); }
Expr affine(const Expr& x, const Expr& weight, const Expr& bias) {
  return make(OpKind::Affine, {x.ptr(), weight.ptr(), bias.ptr()});
}

Expr gather(const Expr& a, std::vector<std::size_t> flat_indices, Shape out_shape) {
  if (flat_indices.size() != shape_size(out_shape)) {
    throw ShapeError("gather: " + std::to_string(flat_indices.size()) + " indices for output shape " +
                     shape_string(out_shape));
  }
  auto node = std::make_shared<Node>();
  node->op = OpKind::Gather;
  node->inputs = {a.ptr()};
  node->indices = std::move(flat_indices);
  node->out_shape = std::move(out_shape);
  return Expr(std::move(node));
}

Expr stack_rows(const std::vector<Expr>& rows) {
  if (rows.empty()) throw ShapeError("stack_rows of zero rows");
  std::vector<NodePtr> inputs;
  inputs.reserve(rows.size());
  for (const auto& r : rows) inputs.push_back(r.ptr());
  return make(OpKind::StackRows, std::move(inputs));
}

Expr row(const Expr& matrix, std::size_t r, std::size_t cols) {
  std::vector<std::size_t> idx(cols);
  for (std::size_t c = 0; c < cols; ++c) idx[c] = r * cols + c;
  return gather(matrix, std::move(idx), Shape{cols});
}

Expr element(const Expr& vector, std::size_t i) { return gather(vector, {i}, Shape{}); }

}  // namespace fedcy::engine
