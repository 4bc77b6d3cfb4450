#include "fedcy/model.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace fedcy::model {

namespace {

std::string layer_name(std::size_t i, const char* what) { return "phi." + std::to_string(i) + "." + what; }

std::vector<std::size_t> layer_widths(const ModelConfig& config) {
  std::vector<std::size_t> widths{config.input_dim};
  widths.insert(widths.end(), config.hidden_dims.begin(), config.hidden_dims.end());
  widths.push_back(config.embed_dim);
  return widths;
}

Array uniform_weight(std::size_t fan_in, std::size_t fan_out, std::mt19937_64& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  std::uniform_real_distribution<double> dist(-bound, bound);
  Array w(engine::Shape{fan_in, fan_out});
  for (double& v : w.data()) v = dist(rng);
  return w;
}

}  // namespace

void ModelConfig::validate() const {
  if (input_dim == 0) throw std::invalid_argument("model.input_dim must be positive");
  if (hidden_dims.empty()) throw std::invalid_argument("model.hidden_dims needs at least one layer");
  for (std::size_t h : hidden_dims) {
    if (h == 0) throw std::invalid_argument("model.hidden_dims entries must be positive");
  }
  if (embed_dim < 2) throw std::invalid_argument("model.embed_dim must be at least 2");
  if (num_phases == 0) throw std::invalid_argument("model.num_phases must be positive");
}

ParameterSet init_params(const ModelConfig& config, std::uint64_t seed) {
  config.validate();
  std::mt19937_64 rng(seed);
  ParameterSet p;
  p.config = config;
  const auto widths = layer_widths(config);
  for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
    p.omega[layer_name(i, "weight")] = uniform_weight(widths[i], widths[i + 1], rng);
    p.omega[layer_name(i, "bias")] = Array(engine::Shape{widths[i + 1]}, 0.0);
  }
  p.theta["head.weight"] = uniform_weight(config.embed_dim, config.num_phases, rng);
  p.theta["head.bias"] = Array(engine::Shape{config.num_phases}, 0.0);
  return p;
}

std::vector<std::string> omega_names(const ModelConfig& config) {
  std::vector<std::string> names;
  const std::size_t layers = config.hidden_dims.size() + 1;
  for (std::size_t i = 0; i < layers; ++i) {
    names.push_back(layer_name(i, "weight"));
    names.push_back(layer_name(i, "bias"));
  }
  return names;
}

std::vector<std::string> theta_names() { return {"head.weight", "head.bias"}; }

engine::Bindings bindings(const ParameterSet& params) {
  engine::Bindings b = params.omega;
  b.insert(params.theta.begin(), params.theta.end());
  return b;
}

Expr feature_expr(const ModelConfig& config, const Expr& frames) {
  Expr h = frames;
  const std::size_t layers = config.hidden_dims.size() + 1;
  for (std::size_t i = 0; i < layers; ++i) {
    h = engine::affine(h, Expr::variable(layer_name(i, "weight")), Expr::variable(layer_name(i, "bias")));
    if (i + 1 < layers) h = engine::relu(h);
  }
  return h;
}

Expr logits_expr(const Expr& embeddings) {
  return engine::affine(embeddings, Expr::variable("head.weight"), Expr::variable("head.bias"));
}

Array extract_features(const ParameterSet& params, const Array& frames) {
  if (frames.rank() != 2 || frames.cols() != params.config.input_dim) {
    throw engine::ShapeError("extract_features: expected frames of shape [batch, " +
                             std::to_string(params.config.input_dim) + "], got " +
                             engine::shape_string(frames.shape()));
  }
  return engine::evaluate(feature_expr(params.config, Expr::literal(frames)), params.omega);
}

Array classify(const ParameterSet& params, const Array& embeddings) {
  if (embeddings.rank() != 2 || embeddings.cols() != params.config.embed_dim) {
    throw engine::ShapeError("classify: expected embeddings of shape [batch, " +
                             std::to_string(params.config.embed_dim) + "], got " +
                             engine::shape_string(embeddings.shape()));
  }
  if (embeddings.rows() == 0) return Array(engine::Shape{0, params.config.num_phases});
  return engine::evaluate(engine::softmax(logits_expr(Expr::literal(embeddings)), 1), params.theta);
}

std::vector<int> predict_phases(const ParameterSet& params, const Array& frames) {
  const Array probs = classify(params, extract_features(params, frames));
  std::vector<int> out(probs.rows());
  for (std::size_t r = 0; r < probs.rows(); ++r) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < probs.cols(); ++c) {
      if (probs.at(r, c) > probs.at(r, best)) best = c;
    }
    out[r] = static_cast<int>(best) + 1;
  }
  return out;
}

}  // namespace fedcy::model
