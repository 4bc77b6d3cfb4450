#include "fedcy/model.hpp"

#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

using namespace fedcy;
using engine::Array;
using engine::Expr;

namespace {

model::ModelConfig small_config() {
  model::ModelConfig c;
  c.input_dim = 5;
  c.hidden_dims = {7, 4};
  c.embed_dim = 3;
  c.num_phases = 4;
  return c;
}

Array random_frames(std::size_t n, std::size_t d, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  Array a(engine::Shape{n, d});
  for (double& v : a.data()) v = g(rng);
  return a;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

TEST_CASE("init_params is deterministic and seed-sensitive") {
  const auto c = small_config();
  CHECK(model::init_params(c, 42) == model::init_params(c, 42));
  CHECK_FALSE(model::init_params(c, 42) == model::init_params(c, 43));
}

TEST_CASE("init_params: zero biases, weights within 1/sqrt(fan_in)") {
  const auto c = small_config();
  const auto p = model::init_params(c, 9);
  for (const auto* group : {&p.omega, &p.theta}) {
    for (const auto& [name, a] : *group) {
      if (name.ends_with("bias")) {
        for (double v : a.data()) CHECK(v == 0.0);
      } else {
        const double bound = 1.0 / std::sqrt(static_cast<double>(a.shape()[0]));
        for (double v : a.data()) CHECK(std::abs(v) <= bound);
      }
    }
  }
}

TEST_CASE("parameter names and shapes follow the config") {
  const auto c = small_config();
  const auto p = model::init_params(c, 1);
  const auto names = model::omega_names(c);
  REQUIRE(names.size() == 6);
  CHECK(p.omega.at("phi.0.weight").shape() == engine::Shape{5, 7});
  CHECK(p.omega.at("phi.1.weight").shape() == engine::Shape{7, 4});
  CHECK(p.omega.at("phi.2.weight").shape() == engine::Shape{4, 3});
  CHECK(p.omega.at("phi.2.bias").shape() == engine::Shape{3});
  CHECK(p.theta.at("head.weight").shape() == engine::Shape{3, 4});
  CHECK(p.theta.at("head.bias").shape() == engine::Shape{4});
  for (const auto& n : names) CHECK(p.omega.count(n) == 1);
  CHECK(p.omega.size() == names.size());
}

TEST_CASE("config validation") {
  auto c = small_config();
  c.hidden_dims.clear();
  CHECK_THROWS(c.validate());
  c = small_config();
  c.embed_dim = 1;
  CHECK_THROWS(c.validate());
  c = small_config();
  c.input_dim = 0;
  CHECK_THROWS(c.validate());
}

TEST_CASE("extract_features: empty batch, shape errors, row permutation") {
  const auto c = small_config();
  const auto p = model::init_params(c, 4);
  const Array empty = model::extract_features(p, Array(engine::Shape{0, 5}));
  CHECK(empty.shape() == engine::Shape{0, 3});
  CHECK_THROWS_AS(model::extract_features(p, Array(engine::Shape{2, 4})), engine::ShapeError);

  const Array x = random_frames(6, 5, 2);
  const Array e = model::extract_features(p, x);
  const std::vector<std::size_t> perm{3, 0, 5, 1, 4, 2};
  const Array ep = model::extract_features(p, engine::take_rows(x, perm));
  CHECK(ep == engine::take_rows(e, perm));
}

TEST_CASE("extract_features gradient matches central differences") {
  const auto c = small_config();
  auto p = model::init_params(c, 8);
  std::mt19937_64 rng(8);
  std::normal_distribution<double> g(0.0, 0.5);
  for (auto& [name, a] : p.omega) {
    if (name.ends_with("bias")) for (double& v : a.data()) v = g(rng);
  }
  const Array x = random_frames(4, 5, 3);
  const auto e = engine::sum(engine::mul(model::feature_expr(c, Expr::literal(x)),
                                         Expr::literal(random_frames(4, 3, 5))));
  const auto names = model::omega_names(c);
  const auto b = model::bindings(p);
  CHECK(engine::relative_error(engine::gradient(e, b, names), engine::numeric_gradient(e, b, names, 1e-5)) < 1e-4);
}

TEST_CASE("classify: zero theta is uniform, rows sum to one") {
  const auto c = small_config();
  auto p = model::init_params(c, 5);
  const Array emb = model::extract_features(p, random_frames(5, 5, 1));
  const Array probs = model::classify(p, emb);
  for (std::size_t r = 0; r < 5; ++r) {
    double total = 0.0;
    for (std::size_t k = 0; k < 4; ++k) total += probs.at(r, k);
    CHECK(std::abs(total - 1.0) < 1e-12);
  }
  for (auto& [n, a] : p.theta) for (double& v : a.data()) v = 0.0;
  const Array flat = model::classify(p, emb);
  for (double v : flat.data()) CHECK(v == doctest::Approx(0.25).epsilon(1e-15));
  CHECK_THROWS_AS(model::classify(p, Array(engine::Shape{2, 4})), engine::ShapeError);
}

TEST_CASE("argmax is unchanged when a constant is added to every logit") {
  const auto c = small_config();
  auto p = model::init_params(c, 6);
  const Array x = random_frames(20, 5, 7);
  const auto before = model::predict_phases(p, x);
  for (double& v : p.theta.at("head.bias").data()) v += 3.25;
  CHECK(model::predict_phases(p, x) == before);
  for (int ph : before) CHECK((ph >= 1 && ph <= 4));
}

TEST_CASE("prediction is a pure function of params and frames") {
  const auto c = small_config();
  const auto p = model::init_params(c, 10);
  const Array x = random_frames(9, 5, 11);
  CHECK(model::classify(p, model::extract_features(p, x)) == model::classify(p, model::extract_features(p, x)));
}

TEST_CASE("checkpoint round-trips bit-exactly, save-load-save is byte identical") {
  const auto c = small_config();
  auto p = model::init_params(c, 12);
  p.omega.at("phi.0.bias")[0] = 0.1 + 0.2;  // not representable in short decimal
  p.theta.at("head.bias")[1] = -1.0 / 3.0;
  const nlohmann::json lineage{{"seed", 12}, {"note", "unit"}};

  const auto dir = std::filesystem::temp_directory_path() / "fedcy_test_model";
  std::filesystem::create_directories(dir);
  model::save_checkpoint((dir / "a.json").string(), p, lineage);
  nlohmann::json got_lineage;
  const auto q = model::load_checkpoint((dir / "a.json").string(), &got_lineage);
  CHECK(q == p);
  CHECK(got_lineage == lineage);
  model::save_checkpoint((dir / "b.json").string(), q, got_lineage);
  CHECK(slurp(dir / "a.json") == slurp(dir / "b.json"));
  std::filesystem::remove_all(dir);
}

TEST_CASE("checkpoint rejects foreign or damaged documents") {
  const auto p = model::init_params(small_config(), 1);
  auto j = model::checkpoint_to_json(p, nlohmann::json::object());
  auto bad_kind = j;
  bad_kind["kind"] = "something.else";
  CHECK_THROWS(model::checkpoint_from_json(bad_kind));
  auto bad_version = j;
  bad_version["format_version"] = 99;
  CHECK_THROWS(model::checkpoint_from_json(bad_version));
  CHECK(model::checkpoint_from_json(j) == p);
}

TEST_CASE("checkpoint rejects a missing parameter") {
  const auto p = model::init_params(small_config(), 1);
  auto j = model::checkpoint_to_json(p, nlohmann::json::object());
  j["omega"].erase(0);
  CHECK_THROWS(model::checkpoint_from_json(j));
}
