#include <fstream>
#include <stdexcept>

#include "fedcy/model.hpp"

namespace fedcy::model {

using nlohmann::json;

json to_json(const ModelConfig& config) {
  return json{{"input_dim", config.input_dim},
              {"hidden_dims", config.hidden_dims},
              {"embed_dim", config.embed_dim},
              {"num_phases", config.num_phases}};
}

ModelConfig model_config_from_json(const json& j) {
  ModelConfig c;
  c.input_dim = j.at("input_dim").get<std::size_t>();
  c.hidden_dims = j.at("hidden_dims").get<std::vector<std::size_t>>();
  c.embed_dim = j.at("embed_dim").get<std::size_t>();
  c.num_phases = j.at("num_phases").get<std::size_t>();
  c.validate();
  return c;
}

json array_to_json(const Array& a) { return json{{"shape", a.shape()}, {"data", a.values()}}; }

Array array_from_json(const json& j) {
  return Array(j.at("shape").get<engine::Shape>(), j.at("data").get<std::vector<double>>());
}

namespace {

json named_arrays_to_json(const NamedArrays& arrays) {
  json out = json::array();
  for (const auto& [name, a] : arrays) {
    json entry = array_to_json(a);
    entry["name"] = name;
    out.push_back(std::move(entry));
  }
  return out;
}

NamedArrays named_arrays_from_json(const json& j) {
  NamedArrays out;
  for (const auto& entry : j) out[entry.at("name").get<std::string>()] = array_from_json(entry);
  return out;
}

}  // namespace

json checkpoint_to_json(const ParameterSet& params, const json& lineage) {
  return json{{"format_version", kCheckpointFormatVersion},
              {"kind", "fedcy.checkpoint"},
              {"config", to_json(params.config)},
              {"lineage", lineage},
              {"omega", named_arrays_to_json(params.omega)},
              {"theta", named_arrays_to_json(params.theta)}};
}

ParameterSet checkpoint_from_json(const json& j, json* lineage) {
  if (j.value("kind", "") != "fedcy.checkpoint") throw std::runtime_error("not a checkpoint document");
  if (j.at("format_version").get<int>() != kCheckpointFormatVersion) {
    throw std::runtime_error("unsupported checkpoint format version");
  }
  ParameterSet p;
  p.config = model_config_from_json(j.at("config"));
  p.omega = named_arrays_from_json(j.at("omega"));
  p.theta = named_arrays_from_json(j.at("theta"));

  const ParameterSet reference = init_params(p.config, 0);
  auto check = [](const NamedArrays& got, const NamedArrays& want) {
    if (got.size() != want.size()) throw std::runtime_error("checkpoint has unexpected parameter names");
    for (const auto& [name, a] : want) {
      auto it = got.find(name);
      if (it == got.end() || it->second.shape() != a.shape()) {
        throw std::runtime_error("checkpoint parameter '" + name + "' missing or misshapen");
      }
    }
  };
  check(p.omega, reference.omega);
  check(p.theta, reference.theta);
  if (lineage) *lineage = j.value("lineage", json::object());
  return p;
}

void save_checkpoint(const std::string& path, const ParameterSet& params, const json& lineage) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write checkpoint '" + path + "'");
  out << checkpoint_to_json(params, lineage).dump(1) << '\n';
}

ParameterSet load_checkpoint(const std::string& path, json* lineage) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read checkpoint '" + path + "'");
  return checkpoint_from_json(json::parse(in), lineage);
}

}  // namespace fedcy::model
