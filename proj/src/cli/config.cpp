#include <fstream>
#include <set>
#include <sstream>
#include <type_traits>

#include "fedcy/cli.hpp"

namespace fedcy::cli {

using nlohmann::json;

ConfigError::ConfigError(std::string source, std::size_t line, std::string field, const std::string& message)
    : std::runtime_error(source + (line ? ":" + std::to_string(line) : std::string()) +
                         (field.empty() ? "" : ": " + field) + ": " + message),
      source_(std::move(source)),
      line_(line),
      field_(std::move(field)) {}

model::ModelConfig ExperimentConfig::model() const {
  model::ModelConfig m;
  m.input_dim = scenario.input_dim;
  m.num_phases = static_cast<std::size_t>(scenario.workflow.num_phases);
  m.hidden_dims = hidden_dims;
  m.embed_dim = embed_dim;
  return m;
}

void ExperimentConfig::validate() const {
  scenario.validate();
  model().validate();
  federation.validate();
  if (data_dir.empty()) throw std::invalid_argument("paths.data_dir must not be empty");
  if (out_dir.empty()) throw std::invalid_argument("paths.out_dir must not be empty");
}

namespace {

std::string similarity_name(losses::Similarity s) {
  return s == losses::Similarity::cosine ? "cosine" : "negative_squared_distance";
}

std::string variance_name(losses::VarianceMode v) {
  return v == losses::VarianceMode::variance ? "variance" : "squared_variance";
}

json counts_json(const synthdata::SplitCounts& s) {
  return {{"train", s.train}, {"validation", s.validation}, {"test", s.test}};
}

// Line of the key at `path` (dotted), found by walking the quoted names in
// order through the text.
std::size_t line_of(const std::string& text, const std::string& path) {
  std::size_t pos = 0;
  std::stringstream parts(path);
  std::string part;
  bool found = false;
  while (std::getline(parts, part, '.')) {
    const auto at = text.find('"' + part + '"', pos);
    if (at == std::string::npos) break;
    pos = at;
    found = true;
  }
  if (!found) return 0;
  return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(pos), '\n'));
}

struct Context {
  const std::string& text;
  const std::string& source;

  [[noreturn]] void fail(const std::string& field, const std::string& message) const {
    throw ConfigError(source, line_of(text, field), field, message);
  }
};

class Section {
 public:
  Section(const json& obj, std::string path, const Context& ctx) : obj_(obj), path_(std::move(path)), ctx_(ctx) {
    if (!obj_.is_object()) ctx_.fail(path_, "expected an object");
  }

  std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  template <class T>
  void read(const std::string& key, T& target) {
    const auto it = obj_.find(key);
    if (it == obj_.end()) return;
    seen_.insert(key);
    convert(*it, field(key), target);
  }

  std::optional<Section> child(const std::string& key) {
    const auto it = obj_.find(key);
    if (it == obj_.end()) return std::nullopt;
    seen_.insert(key);
    return Section(*it, field(key), ctx_);
  }

  void finish() const {
    for (const auto& [key, value] : obj_.items()) {
      if (!seen_.count(key)) ctx_.fail(field(key), "unknown key");
    }
  }

 private:
  template <class T>
  void convert(const json& v, const std::string& name, T& target) const {
    if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) ctx_.fail(name, "expected true or false");
      target = v.get<bool>();
    } else if constexpr (std::is_integral_v<T> && std::is_unsigned_v<T>) {
      if (!v.is_number_unsigned()) ctx_.fail(name, "expected a nonnegative integer");
      target = v.get<T>();
    } else if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_integer()) ctx_.fail(name, "expected an integer");
      target = v.get<T>();
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!v.is_number()) ctx_.fail(name, "expected a number");
      target = v.get<T>();
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) ctx_.fail(name, "expected a string");
      target = v.get<std::string>();
    } else {
      if (!v.is_array()) ctx_.fail(name, "expected a list");
      T out;
      for (std::size_t i = 0; i < v.size(); ++i) {
        typename T::value_type item{};
        convert(v[i], name + "[" + std::to_string(i) + "]", item);
        out.push_back(item);
      }
      target = std::move(out);
    }
  }

  const json& obj_;
  std::string path_;
  const Context& ctx_;
  std::set<std::string> seen_;
};

template <class E, class F>
void read_enum(Section& s, const std::string& key, E& target, F parse, const Context& ctx) {
  std::string name;
  s.read(key, name);
  if (name.empty()) return;
  try {
    target = parse(name);
  } catch (const std::invalid_argument& e) {
    ctx.fail(s.field(key), e.what());
  }
}

void read_counts(Section& parent, const std::string& key, synthdata::SplitCounts& c) {
  if (auto s = parent.child(key)) {
    s->read("train", c.train);
    s->read("validation", c.validation);
    s->read("test", c.test);
    s->finish();
  }
}

// Field named at the start of a validation message, mapped to its config path.
std::string field_in_message(const std::string& message) {
  const auto space = message.find(' ');
  std::string token = message.substr(0, space);
  if (token.find('.') == std::string::npos) return message.rfind("invalid split", 0) == 0 ? "scenario" : "";
  if (token.rfind("workflow.", 0) == 0) return "scenario." + token;
  if (token.rfind("model.", 0) == 0) return token;
  return token;
}

}  // namespace

json config_to_json(const ExperimentConfig& c) {
  const auto& s = c.scenario;
  const auto& f = c.federation;
  return json{
      {"format_version", kConfigFormatVersion},
      {"kind", "fedcy.experiment"},
      {"scenario",
       {{"seed", c.scenario_seed},
        {"input_dim", s.input_dim},
        {"centroid_spacing", s.centroid_spacing},
        {"noise_sigma", s.noise_sigma},
        {"drift", s.drift},
        {"heterogeneity", s.heterogeneity},
        {"shift_scale", s.shift_scale},
        {"phase_shift_scale", s.phase_shift_scale},
        {"duration_shift_sigma", s.duration_shift_sigma},
        {"shift_rank", s.shift_rank},
        {"num_unlabeled", s.num_unlabeled},
        {"labeled_videos", counts_json(s.labeled_videos)},
        {"unlabeled_videos", counts_json(s.unlabeled_videos)},
        {"held_out_videos", counts_json(s.held_out_videos)},
        {"unlabeled_duration_scales", s.unlabeled_duration_scales},
        {"workflow", synthdata::to_json(s.workflow)}}},
      {"model", {{"hidden_dims", c.hidden_dims}, {"embed_dim", c.embed_dim}}},
      {"federation",
       {{"mode", federation::to_string(f.mode)},
        {"seed", f.master_seed},
        {"rounds_max", f.rounds_max},
        {"min_epochs", f.min_epochs},
        {"patience", f.patience},
        {"learning_rate", f.learning_rate},
        {"weight_decay", f.weight_decay},
        {"beta1", f.beta1},
        {"beta2", f.beta2},
        {"epsilon", f.epsilon},
        {"labeled_batch_size", f.labeled_batch_size},
        {"clip_batch_size", f.clip_batch_size},
        {"pretrain_rounds", f.pretrain_rounds},
        {"parallel", f.parallel}}},
      {"sampler",
       {{"strategy", sampling::to_string(f.sampler.strategy)},
        {"clip_size", f.sampler.clip_size},
        {"stride", f.sampler.stride},
        {"layout", sampling::to_string(f.sampler.layout)}}},
      {"tcc",
       {{"tau", f.tcc.tau},
        {"lambda_sigma", f.tcc.lambda_sigma},
        {"lambda_t", f.tcc.lambda_t},
        {"variance_floor", f.tcc.variance_floor},
        {"similarity", similarity_name(f.tcc.similarity)},
        {"variance_mode", variance_name(f.tcc.variance_mode)}}},
      {"contrastive", {{"tau", f.contrastive.tau}, {"lambda_c", f.contrastive.lambda_c}}},
      {"paths", {{"data_dir", c.data_dir}, {"out_dir", c.out_dir}}}};
}

ExperimentConfig config_from_text(const std::string& text, const std::string& source) {
  const Context ctx{text, source};
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    // Byte offset of the failure -> line.
    const std::size_t upto = std::min(e.byte, text.size());
    const auto line = 1 + static_cast<std::size_t>(
                              std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(upto), '\n'));
    throw ConfigError(source, line, "", "syntax error");
  }

  ExperimentConfig c;
  Section root(doc, "", ctx);
  int version = kConfigFormatVersion;
  root.read("format_version", version);
  if (version != kConfigFormatVersion) ctx.fail("format_version", "unsupported version " + std::to_string(version));
  std::string kind = "fedcy.experiment";
  root.read("kind", kind);
  if (kind != "fedcy.experiment") ctx.fail("kind", "expected fedcy.experiment");

  auto& sc = c.scenario;
  if (auto s = root.child("scenario")) {
    s->read("seed", c.scenario_seed);
    s->read("input_dim", sc.input_dim);
    s->read("centroid_spacing", sc.centroid_spacing);
    s->read("noise_sigma", sc.noise_sigma);
    s->read("drift", sc.drift);
    s->read("heterogeneity", sc.heterogeneity);
    s->read("shift_scale", sc.shift_scale);
    s->read("phase_shift_scale", sc.phase_shift_scale);
    s->read("duration_shift_sigma", sc.duration_shift_sigma);
    s->read("shift_rank", sc.shift_rank);
    s->read("num_unlabeled", sc.num_unlabeled);
    read_counts(*s, "labeled_videos", sc.labeled_videos);
    read_counts(*s, "unlabeled_videos", sc.unlabeled_videos);
    read_counts(*s, "held_out_videos", sc.held_out_videos);
    s->read("unlabeled_duration_scales", sc.unlabeled_duration_scales);
    if (auto w = s->child("workflow")) {
      w->read("num_phases", sc.workflow.num_phases);
      w->read("sequential_prefix", sc.workflow.sequential_prefix);
      w->read("repeatable_phase", sc.workflow.repeatable_phase);
      w->read("repeat_probability", sc.workflow.repeat_probability);
      w->read("mean_durations", sc.workflow.mean_durations);
      w->read("duration_log_sigma", sc.workflow.duration_log_sigma);
      w->finish();
    }
    s->finish();
  }
  if (auto s = root.child("model")) {
    s->read("hidden_dims", c.hidden_dims);
    s->read("embed_dim", c.embed_dim);
    s->finish();
  }
  auto& f = c.federation;
  if (auto s = root.child("federation")) {
    read_enum(*s, "mode", f.mode, federation::mode_from_string, ctx);
    s->read("seed", f.master_seed);
    s->read("rounds_max", f.rounds_max);
    s->read("min_epochs", f.min_epochs);
    s->read("patience", f.patience);
    s->read("learning_rate", f.learning_rate);
    s->read("weight_decay", f.weight_decay);
    s->read("beta1", f.beta1);
    s->read("beta2", f.beta2);
    s->read("epsilon", f.epsilon);
    s->read("labeled_batch_size", f.labeled_batch_size);
    s->read("clip_batch_size", f.clip_batch_size);
    s->read("pretrain_rounds", f.pretrain_rounds);
    s->read("parallel", f.parallel);
    s->finish();
  }
  if (auto s = root.child("sampler")) {
    read_enum(*s, "strategy", f.sampler.strategy, sampling::strategy_from_string, ctx);
    s->read("clip_size", f.sampler.clip_size);
    s->read("stride", f.sampler.stride);
    read_enum(*s, "layout", f.sampler.layout, sampling::layout_from_string, ctx);
    s->finish();
  }
  if (auto s = root.child("tcc")) {
    s->read("tau", f.tcc.tau);
    s->read("lambda_sigma", f.tcc.lambda_sigma);
    s->read("lambda_t", f.tcc.lambda_t);
    s->read("variance_floor", f.tcc.variance_floor);
    read_enum(*s, "similarity", f.tcc.similarity, [](const std::string& n) {
      if (n == "cosine") return losses::Similarity::cosine;
      if (n == "negative_squared_distance") return losses::Similarity::negative_squared_distance;
      throw std::invalid_argument("unknown similarity '" + n + "'");
    }, ctx);
    read_enum(*s, "variance_mode", f.tcc.variance_mode, [](const std::string& n) {
      if (n == "variance") return losses::VarianceMode::variance;
      if (n == "squared_variance") return losses::VarianceMode::squared_variance;
      throw std::invalid_argument("unknown variance mode '" + n + "'");
    }, ctx);
    s->finish();
  }
  if (auto s = root.child("contrastive")) {
    s->read("tau", f.contrastive.tau);
    s->read("lambda_c", f.contrastive.lambda_c);
    s->finish();
  }
  if (auto s = root.child("paths")) {
    s->read("data_dir", c.data_dir);
    s->read("out_dir", c.out_dir);
    s->finish();
  }
  root.finish();

  try {
    c.validate();
  } catch (const std::invalid_argument& e) {
    const std::string field = field_in_message(e.what());
    throw ConfigError(source, field.empty() ? 0 : line_of(text, field), field, e.what());
  }
  return c;
}

ExperimentConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path.string(), 0, "", "cannot open config file");
  std::stringstream buf;
  buf << in.rdbuf();
  return config_from_text(buf.str(), path.string());
}

void write_config(const fs::path& path, const ExperimentConfig& cfg) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << config_to_json(cfg).dump(2) << '\n';
}

}  // namespace fedcy::cli
