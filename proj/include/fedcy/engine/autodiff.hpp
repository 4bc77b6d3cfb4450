#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "fedcy/engine/array.hpp"
#include "fedcy/engine/expr.hpp"

namespace fedcy::engine {

using Bindings = std::map<std::string, Array>;
using Gradients = std::map<std::string, Array>;

/// Value of the root node. Every named leaf must be bound; every
/// intermediate must be finite.
Array evaluate(const Expr& expr, const Bindings& bindings);

struct ValueAndGradient {
  double value = 0.0;
  Gradients gradients;
};

/// Reverse-mode gradient of a scalar root with respect to the named
/// Variable leaves. Names that are bound but unused get a zero array.
Gradients gradient(const Expr& expr, const Bindings& bindings, std::span<const std::string> wrt);

/// Same pass as gradient(), also returning the root value.
ValueAndGradient value_and_gradient(const Expr& expr, const Bindings& bindings,
                                    std::span<const std::string> wrt);

/// Central differences (f(x+h) - f(x-h)) / 2h for every coordinate of each
/// named leaf. Constant leaves yield zero arrays.
Gradients numeric_gradient(const Expr& expr, const Bindings& bindings, std::span<const std::string> wrt,
                           double step);

/// ||a - b|| / max(||a||, ||b||, floor) over all named arrays, using the
/// Euclidean norm of the concatenated entries. The floor turns the measure
/// into an absolute one for vanishing gradients.
double relative_error(const Gradients& a, const Gradients& b, double floor = 1e-7);

}  // namespace fedcy::engine
