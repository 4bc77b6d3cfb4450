#include <cmath>
#include <stdexcept>

#include "fedcy/federation.hpp"

namespace fedcy::federation {

AdamConfig adam_config(const FederationConfig& cfg) {
  return AdamConfig{cfg.learning_rate, cfg.weight_decay, cfg.beta1, cfg.beta2, cfg.epsilon};
}

namespace {

void update_group(NamedArrays& params, const engine::Gradients& grads, AdamState& state, const AdamConfig& cfg) {
  const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
  for (auto& [name, p] : params) {
    const auto g = grads.find(name);
    if (g == grads.end()) continue;
    if (g->second.shape() != p.shape()) throw engine::ShapeError("adam_step: gradient shape mismatch for " + name);
    auto [mit, m_new] = state.m.try_emplace(name, p.shape(), 0.0);
    auto [vit, v_new] = state.v.try_emplace(name, p.shape(), 0.0);
    auto m = mit->second.data();
    auto v = vit->second.data();
    auto w = p.data();
    const auto gd = g->second.data();
    for (std::size_t i = 0; i < w.size(); ++i) {
      m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * gd[i];
      v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * gd[i] * gd[i];
      const double m_hat = m[i] / c1;
      const double v_hat = v[i] / c2;
      w[i] -= cfg.learning_rate * (m_hat / (std::sqrt(v_hat) + cfg.epsilon) + cfg.weight_decay * w[i]);
    }
  }
}

}  // namespace

void adam_step(NamedArrays& params, const engine::Gradients& grads, AdamState& state, const AdamConfig& cfg) {
  ++state.step;
  update_group(params, grads, state, cfg);
}

void adam_step(ParameterSet& params, const engine::Gradients& grads, AdamState& state, const AdamConfig& cfg,
               bool include_theta) {
  ++state.step;
  update_group(params.omega, grads, state, cfg);
  if (include_theta) update_group(params.theta, grads, state, cfg);
}

EarlyStopping::EarlyStopping(int min_epochs, int patience) : min_epochs_(min_epochs), patience_(patience) {
  if (min_epochs < 0) throw std::invalid_argument("early stopping: min_epochs must be nonnegative");
  if (patience < 1) throw std::invalid_argument("early stopping: patience must be at least 1");
}

bool EarlyStopping::update(double score) {
  if (stopped_) throw std::logic_error("early stopping: update after stop");
  ++rounds_;
  last_improved_ = rounds_ == 1 || score > best_score_;
  if (last_improved_) {
    best_score_ = score;
    best_round_ = rounds_;
    stale_ = 0;
  } else if (rounds_ > min_epochs_) {
    ++stale_;
  }
  stopped_ = rounds_ >= min_epochs_ && stale_ >= patience_;
  return stopped_;
}

}  // namespace fedcy::federation
