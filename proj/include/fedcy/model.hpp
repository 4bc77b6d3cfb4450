#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "fedcy/engine/autodiff.hpp"
#include "fedcy/engine/expr.hpp"

namespace fedcy::model {

using engine::Array;
using engine::Expr;
using NamedArrays = std::map<std::string, Array>;

struct ModelConfig {
  std::size_t input_dim = 32;
  std::vector<std::size_t> hidden_dims{64};
  std::size_t embed_dim = 16;
  std::size_t num_phases = 6;

  void validate() const;
  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

/// Feature-extractor weights (omega) and classifier weights (theta). Names
/// and shapes depend only on the config:
///   omega: phi.<i>.weight (in x out), phi.<i>.bias (out), one pair per layer
///   theta: head.weight (embed_dim x num_phases), head.bias (num_phases)
struct ParameterSet {
  ModelConfig config;
  NamedArrays omega;
  NamedArrays theta;

  friend bool operator==(const ParameterSet&, const ParameterSet&) = default;
};

ParameterSet init_params(const ModelConfig& config, std::uint64_t seed);

/// Parameter names in a fixed order.
std::vector<std::string> omega_names(const ModelConfig& config);
std::vector<std::string> theta_names();

/// Every array of the set, keyed by name, ready to bind into an expression.
engine::Bindings bindings(const ParameterSet& params);

/// phi as an expression over Variable leaves named after the omega arrays.
/// Hidden layers use a rectifier; the embedding layer is linear.
Expr feature_expr(const ModelConfig& config, const Expr& frames);

/// Classifier logits over Variable leaves head.weight / head.bias.
Expr logits_expr(const Expr& embeddings);

/// Batch of frames (batch x input_dim) -> embeddings (batch x embed_dim).
Array extract_features(const ParameterSet& params, const Array& frames);

/// Embeddings (batch x embed_dim) -> phase probabilities (batch x num_phases).
Array classify(const ParameterSet& params, const Array& embeddings);

/// 1-based phase ids by argmax of classify(extract_features(frames));
/// ties go to the lowest id.
std::vector<int> predict_phases(const ParameterSet& params, const Array& frames);

// Checkpoint documents ------------------------------------------------------

inline constexpr int kCheckpointFormatVersion = 1;

nlohmann::json to_json(const ModelConfig& config);
ModelConfig model_config_from_json(const nlohmann::json& j);

nlohmann::json array_to_json(const Array& a);
Array array_from_json(const nlohmann::json& j);

/// Self-describing checkpoint: format version, model config, seed lineage
/// (free-form object) and every named array with shape and row-major data.
nlohmann::json checkpoint_to_json(const ParameterSet& params, const nlohmann::json& lineage);
ParameterSet checkpoint_from_json(const nlohmann::json& j, nlohmann::json* lineage = nullptr);

void save_checkpoint(const std::string& path, const ParameterSet& params, const nlohmann::json& lineage);
ParameterSet load_checkpoint(const std::string& path, nlohmann::json* lineage = nullptr);

}  // namespace fedcy::model
