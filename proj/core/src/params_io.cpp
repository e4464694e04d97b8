#include "pwsc/params_io.hpp"

#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include <json.hpp>
#include <toml.hpp>

#include "pwsc/error.hpp"

namespace pwsc {

namespace {

using Setter = std::function<void(ModelParams&, double)>;

const std::map<std::string, Setter>& numeric_fields() {
  static const std::map<std::string, Setter> fields = {
      {"g", [](ModelParams& p, double x) { p.g = x; }},
      {"I", [](ModelParams& p, double x) { p.I = x; }},
      {"tau_s", [](ModelParams& p, double x) { p.tau_s = x; }},
      {"tau_w", [](ModelParams& p, double x) { p.tau_w = x; }},
      {"s_jump", [](ModelParams& p, double x) { p.s_jump = x; }},
      {"w_jump", [](ModelParams& p, double x) { p.w_jump = x; }},
      {"e_r", [](ModelParams& p, double x) { p.e_r = x; }},
      {"alpha", [](ModelParams& p, double x) { p.alpha = x; }},
      {"a_quartic", [](ModelParams& p, double x) { p.a_quartic = x; }},
      {"tau_m", [](ModelParams& p, double x) { p.tau_m = x; }},
      {"v_peak", [](ModelParams& p, double x) { p.v_peak = x; }},
      {"v_reset", [](ModelParams& p, double x) { p.v_reset = x; }},
      {"a_adapt", [](ModelParams& p, double x) { p.a_adapt = x; }},
      {"b_adapt", [](ModelParams& p, double x) { p.b_adapt = x; }},
      {"rate_k", [](ModelParams& p, double x) { p.rate_k = x; }},
  };
  return fields;
}

[[noreturn]] void config_error(const std::string& what) {
  throw Error(ErrorCode::ConfigError, what);
}

void set_numeric(ModelParams& p, const std::string& key, double value) {
  const auto& fields = numeric_fields();
  auto it = fields.find(key);
  if (it == fields.end()) config_error("unknown parameter '" + key + "'");
  it->second(p, value);
}

std::string read_file(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) config_error("cannot open parameter file " + file.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace

ModelParams parse_params_toml(std::string_view text) {
  toml::table table;
  try {
    table = toml::parse(text);
  } catch (const toml::parse_error& e) {
    std::ostringstream msg;
    msg << "TOML parse error: " << e.description() << " at line " << e.source().begin.line;
    config_error(msg.str());
  }
  ModelParams p;
  bool have_kind = false;
  for (const auto& [key, node] : table) {
    const std::string name(key.str());
    if (name == "kind") {
      auto kind = node.value<std::string>();
      if (!kind) config_error("'kind' must be a string");
      p.kind = model_kind_from_string(*kind);
      have_kind = true;
      continue;
    }
    auto value = node.value<double>();
    if (!value) config_error("parameter '" + name + "' must be a number");
    set_numeric(p, name, *value);
  }
  if (!have_kind) config_error("parameter file lacks 'kind'");
  p.validate();
  return p;
}

ModelParams parse_params_json(std::string_view text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    config_error(std::string("JSON parse error: ") + e.what());
  }
  if (!doc.is_object()) config_error("parameter file must hold a JSON object");
  ModelParams p;
  bool have_kind = false;
  for (const auto& [name, value] : doc.items()) {
    if (name == "kind") {
      if (!value.is_string()) config_error("'kind' must be a string");
      p.kind = model_kind_from_string(value.get<std::string>());
      have_kind = true;
      continue;
    }
    if (!value.is_number()) config_error("parameter '" + name + "' must be a number");
    set_numeric(p, name, value.get<double>());
  }
  if (!have_kind) config_error("parameter file lacks 'kind'");
  p.validate();
  return p;
}

void set_param(ModelParams& p, std::string_view key, std::string_view value) {
  const std::string name(key);
  if (name == "kind") {
    p.kind = model_kind_from_string(value);
    return;
  }
  const std::string text(value);
  std::size_t used = 0;
  double x = 0.0;
  try {
    x = std::stod(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != text.size()) {
    config_error("parameter '" + name + "' must be a number, got '" + text + "'");
  }
  set_numeric(p, name, x);
}

ModelParams load_params(const std::filesystem::path& file) {
  const auto ext = file.extension().string();
  if (ext == ".toml") return parse_params_toml(read_file(file));
  if (ext == ".json") return parse_params_json(read_file(file));
  config_error("unsupported parameter file extension '" + ext + "' (expected .toml or .json)");
}

std::filesystem::path preset_path(std::string_view name) {
  return std::filesystem::path(PWSC_PRESET_DIR) / (std::string(name) + ".toml");
}

ModelParams load_preset(std::string_view name) { return load_params(preset_path(name)); }

std::string params_to_json(const ModelParams& p) {
  nlohmann::ordered_json j;
  j["kind"] = std::string(to_string(p.kind));
  j["g"] = p.g;
  j["I"] = p.I;
  j["tau_s"] = p.tau_s;
  j["tau_w"] = p.tau_w;
  j["s_jump"] = p.s_jump;
  j["w_jump"] = p.w_jump;
  j["e_r"] = p.e_r;
  j["alpha"] = p.alpha;
  j["a_quartic"] = p.a_quartic;
  j["tau_m"] = p.tau_m;
  j["v_peak"] = p.v_peak;
  j["v_reset"] = p.v_reset;
  j["a_adapt"] = p.a_adapt;
  j["b_adapt"] = p.b_adapt;
  j["rate_k"] = p.rate_k;
  return j.dump(2);
}

}  // namespace pwsc
