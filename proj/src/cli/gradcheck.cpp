#include <algorithm>
#include <functional>
#include <random>

#include "fedcy/cli.hpp"
#include "fedcy/losses.hpp"
#include "fedcy/rng.hpp"

namespace fedcy::cli {

using engine::Array;
using engine::Bindings;
using engine::Expr;
using Rng = std::mt19937_64;

namespace {

struct Instance {
  Expr loss = Expr::literal(Array());
  Bindings bindings;
  std::vector<std::string> wrt;
};

using Builder = std::function<Instance(Rng&)>;

std::size_t between(std::size_t lo, std::size_t hi, Rng& rng) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

Array gaussian(engine::Shape shape, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Array a(std::move(shape));
  for (double& v : a.data()) v = normal(rng);
  return a;
}

Instance tcc_pair(Rng& rng) {
  const std::size_t n = between(2, 6, rng), m = between(2, 6, rng), d = between(3, 8, rng);
  Instance in;
  in.loss = losses::tcc_pair_loss({Expr::variable("u"), n}, {Expr::variable("v"), m}, losses::TccConfig{});
  in.bindings = {{"u", gaussian({n, d}, rng)}, {"v", gaussian({m, d}, rng)}};
  in.wrt = {"u", "v"};
  return in;
}

Instance tcc_batch(Rng& rng) {
  const std::size_t b = between(2, 3, rng), d = between(3, 8, rng);
  Instance in;
  std::vector<losses::Sequence> clips;
  for (std::size_t i = 0; i < b; ++i) {
    const std::string name = "c" + std::to_string(i);
    const std::size_t len = between(2, 6, rng);
    clips.push_back({Expr::variable(name), len});
    in.bindings[name] = gaussian({len, d}, rng);
    in.wrt.push_back(name);
  }
  in.loss = losses::tcc_batch_objective(clips, losses::TccConfig{});
  return in;
}

Instance ntxent(Rng& rng) {
  const std::size_t negatives = between(1, 5, rng), d = between(3, 8, rng);
  Instance in;
  std::vector<Expr> candidates;
  for (std::size_t i = 0; i <= negatives; ++i) {
    const std::string name = i == 0 ? "positive" : "negative" + std::to_string(i);
    candidates.push_back(Expr::variable(name));
    in.bindings[name] = gaussian({d}, rng);
    in.wrt.push_back(name);
  }
  in.bindings["anchor"] = gaussian({d}, rng);
  in.wrt.push_back("anchor");
  in.loss = losses::ntxent(Expr::variable("anchor"), candidates, losses::ContrastiveConfig{});
  return in;
}

std::vector<int> labels_with_a_pair(std::size_t n, int classes, Rng& rng) {
  std::vector<int> labels(n);
  do {
    for (int& l : labels) l = static_cast<int>(between(1, static_cast<std::size_t>(classes), rng));
  } while (std::all_of(labels.begin(), labels.end(), [&](int l) { return std::count(labels.begin(), labels.end(), l) < 2; }));
  return labels;
}

Instance supcon(Rng& rng) {
  const std::size_t n = between(2, 6, rng), d = between(3, 8, rng);
  const auto labels = labels_with_a_pair(n, 3, rng);
  Instance in;
  in.loss = losses::supervised_contrastive_batch(Expr::variable("e"), labels, losses::ContrastiveConfig{});
  in.bindings = {{"e", gaussian({n, d}, rng)}};
  in.wrt = {"e"};
  return in;
}

Instance cross_entropy(Rng& rng) {
  const std::size_t p = between(2, 6, rng);
  Array y(engine::Shape{p}, 0.0);
  y[between(0, p - 1, rng)] = 1.0;
  Array probs(engine::Shape{p});
  std::uniform_real_distribution<double> unif(0.05, 1.0);
  double total = 0.0;
  for (double& v : probs.data()) total += (v = unif(rng));
  for (double& v : probs.data()) v /= total;
  Instance in;
  in.loss = losses::cross_entropy(Expr::literal(y), Expr::variable("p"));
  in.bindings = {{"p", probs}};
  in.wrt = {"p"};
  return in;
}

Instance labeled_objective(Rng& rng) {
  model::ModelConfig mc;
  mc.input_dim = between(3, 8, rng);
  mc.hidden_dims = {between(3, 6, rng)};
  mc.embed_dim = between(3, 5, rng);
  mc.num_phases = 3;
  const std::size_t n = between(2, 6, rng);
  const auto labels = labels_with_a_pair(n, 3, rng);
  const Array frames = gaussian({n, mc.input_dim}, rng);
  auto params = model::init_params(mc, rng());
  // Nonzero biases keep hidden units away from the rectifier kink.
  for (auto& [name, a] : params.omega) {
    if (name.ends_with("bias")) a = gaussian(a.shape(), rng);
  }
  Instance in;
  in.loss = losses::labeled_objective(mc, frames, labels, losses::ContrastiveConfig{});
  in.bindings = model::bindings(params);
  in.wrt = model::omega_names(mc);
  for (const auto& t : model::theta_names()) in.wrt.push_back(t);
  return in;
}

const std::vector<std::pair<std::string, Builder>>& builders() {
  static const std::vector<std::pair<std::string, Builder>> table{
      {"tcc_pair", tcc_pair}, {"tcc_batch", tcc_batch},         {"ntxent", ntxent},
      {"supcon", supcon},     {"cross_entropy", cross_entropy}, {"labeled_objective", labeled_objective}};
  return table;
}

}  // namespace

std::vector<std::string> gradcheck_components() {
  std::vector<std::string> names;
  for (const auto& [name, b] : builders()) names.push_back(name);
  return names;
}

std::vector<GradcheckResult> run_gradcheck(const GradcheckOptions& opts) {
  const auto names = gradcheck_components();
  if (opts.component != "all" && std::find(names.begin(), names.end(), opts.component) == names.end()) {
    throw std::invalid_argument("unknown gradcheck component '" + opts.component + "'");
  }
  if (opts.instances < 1) throw std::invalid_argument("gradcheck needs at least one instance");
  std::vector<GradcheckResult> results;
  for (std::size_t c = 0; c < builders().size(); ++c) {
    const auto& [name, build] = builders()[c];
    if (opts.component != "all" && opts.component != name) continue;
    GradcheckResult r{name, 0, 0, 0.0};
    for (int i = 0; i < opts.instances; ++i) {
      Rng rng = derive_rng(opts.seed, {c, static_cast<std::uint64_t>(i)});
      const Instance in = build(rng);
      auto analytic = engine::gradient(in.loss, in.bindings, in.wrt);
      if (opts.corrupt) analytic.begin()->second.data()[0] += 1e-2 + 1e-2 * std::abs(analytic.begin()->second.data()[0]);
      const auto numeric = engine::numeric_gradient(in.loss, in.bindings, in.wrt, opts.step);
      const double err = engine::relative_error(analytic, numeric);
      r.max_relative_error = std::max(r.max_relative_error, err);
      ++r.instances;
      if (!(err < opts.tolerance)) ++r.failures;
    }
    results.push_back(r);
  }
  return results;
}

}  // namespace fedcy::cli
