#include <cmath>
#include <stdexcept>
#include <string>

#include "fedcy/engine/autodiff.hpp"
#include "fedcy/losses.hpp"

namespace fedcy::losses {

namespace eng = fedcy::engine;
using eng::Shape;

Expr cross_entropy(const Expr& y, const Expr& p) {
  return eng::neg(eng::sum(eng::mul(y, eng::log(eng::clamp_min(p, kProbabilityFloor)))));
}

Expr mean_cross_entropy(const Expr& probabilities, std::span<const int> labels, std::size_t num_phases) {
  std::vector<std::size_t> picks(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 1 || static_cast<std::size_t>(labels[i]) > num_phases) {
      throw std::invalid_argument("label " + std::to_string(labels[i]) + " outside [1, " +
                                  std::to_string(num_phases) + "]");
    }
    picks[i] = i * num_phases + static_cast<std::size_t>(labels[i] - 1);
  }
  const Expr picked = eng::gather(probabilities, std::move(picks), Shape{labels.size()});
  return eng::neg(eng::mean(eng::log(eng::clamp_min(picked, kProbabilityFloor))));
}

Expr labeled_objective(const model::ModelConfig& config, const Array& frames, std::span<const int> labels,
                       const ContrastiveConfig& cfg) {
  if (labels.empty()) throw std::invalid_argument("labeled_objective: empty batch");
  if (frames.rank() != 2 || frames.rows() != labels.size() || frames.cols() != config.input_dim) {
    throw eng::ShapeError("labeled_objective: frames " + eng::shape_string(frames.shape()) + " do not match " +
                          std::to_string(labels.size()) + " labels of input_dim " +
                          std::to_string(config.input_dim));
  }
  const Expr embeddings = model::feature_expr(config, Expr::literal(frames));
  const Expr probs = eng::softmax(model::logits_expr(embeddings), 1);
  const Expr ce = mean_cross_entropy(probs, labels, config.num_phases);
  if (cfg.lambda_c == 0.0) return ce;
  return eng::add(ce, eng::scale(supervised_contrastive_batch(embeddings, labels, cfg), cfg.lambda_c));
}

double cross_entropy(const Array& y, const Array& p) {
  if (y.rank() != 1 || p.shape() != y.shape()) throw eng::ShapeError("cross_entropy: y and p must be equal-length vectors");
  std::size_t ones = 0;
  for (double v : y.data()) {
    if (v == 1.0) {
      ++ones;
    } else if (v != 0.0) {
      throw std::invalid_argument("cross_entropy: y is not one-hot");
    }
  }
  if (ones != 1) throw std::invalid_argument("cross_entropy: y is not one-hot");
  double total = 0.0;
  for (double v : p.data()) {
    if (!(v >= 0.0)) throw std::invalid_argument("cross_entropy: p has a negative entry");
    total += v;
  }
  if (std::abs(total - 1.0) > 1e-9) throw std::invalid_argument("cross_entropy: p does not sum to 1");
  return eng::evaluate(cross_entropy(Expr::literal(y), Expr::literal(p)), {}).item();
}

double labeled_objective(const model::ParameterSet& params, const Array& frames, std::span<const int> labels,
                         const ContrastiveConfig& cfg) {
  cfg.validate();
  return eng::evaluate(labeled_objective(params.config, frames, labels, cfg), model::bindings(params)).item();
}

}  // namespace fedcy::losses
