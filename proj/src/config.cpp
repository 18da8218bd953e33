#include "tpn2f/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <vector>

#include "tpn2f/error.hpp"

namespace tpn2f {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::size_t to_size(const std::string& key, const std::string& v) {
  std::size_t out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) {
    throw ConfigError("config key '" + key + "' expects a non-negative integer, got '" + v + "'");
  }
  return out;
}

double to_double(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  double out = 0;
  try {
    out = std::stod(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != v.size()) throw ConfigError("config key '" + key + "' expects a number, got '" + v + "'");
  return out;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError("config key '" + key + "' expects true or false, got '" + v + "'");
}

std::string json_scalar_text(const nlohmann::json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_null()) return "none";
  return v.dump();
}

}  // namespace

RunConfig preset_config(const std::string& name) {
  RunConfig c;
  c.preset = name;
  c.dims.n_fillers = 150;
  c.dims.n_roles = 50;
  c.dims.filler_dim = 30;
  c.dims.pos_dim = 5;
  c.train.learning_rate = 0.00115;
  if (name == "mathqa") {
    c.dialect = Dialect::MathQA;
    c.dims.role_dim = 20;
    c.dims.rel_dim = 20;
    c.dims.arg_dim = 10;
    c.dims.positions = 2;
    c.train.epochs = 60;
  } else if (name == "algolisp") {
    c.dialect = Dialect::AlgoLisp;
    c.dims.role_dim = 30;
    c.dims.rel_dim = 30;
    c.dims.arg_dim = 20;
    c.dims.positions = 3;
    c.train.epochs = 50;
  } else {
    throw ConfigError("unknown preset '" + name + "' (expected mathqa or algolisp)");
  }
  return c;
}

void apply_setting(RunConfig& c, const std::string& key, const std::string& value) {
  const std::string v = trim(value);
  auto kind = [&](auto a, auto b, const char* an, const char* bn) {
    if (v == an) return a;
    if (v == bn) return b;
    throw ConfigError("config key '" + key + "' expects " + an + " or " + bn + ", got '" + v + "'");
  };
  if (key == "preset") c = preset_config(v);
  else if (key == "dialect") c.dialect = dialect_from_string(v);
  else if (key == "n_F") c.dims.n_fillers = to_size(key, v);
  else if (key == "n_R") c.dims.n_roles = to_size(key, v);
  else if (key == "d_F") c.dims.filler_dim = to_size(key, v);
  else if (key == "d_R") c.dims.role_dim = to_size(key, v);
  else if (key == "d_Rel") c.dims.rel_dim = to_size(key, v);
  else if (key == "d_Arg") c.dims.arg_dim = to_size(key, v);
  else if (key == "d_Pos") c.dims.pos_dim = to_size(key, v);
  else if (key == "embed_dim") c.dims.embed_dim = to_size(key, v);
  else if (key == "lstm_hidden") c.dims.lstm_hidden = to_size(key, v);
  else if (key == "positions") c.dims.positions = to_size(key, v);
  else if (key == "encoder") c.variant.encoder = kind(EncoderKind::Tpr, EncoderKind::Lstm, "tpr", "lstm");
  else if (key == "decoder") c.variant.decoder = kind(DecoderKind::Tpr, DecoderKind::Lstm, "tpr", "lstm");
  else if (key == "pooling") c.variant.pooling = kind(Pooling::SumTprs, Pooling::LastState, "sum_tprs", "last_state");
  else if (key == "reasoning_layers") c.variant.reasoning_layers = to_size(key, v);
  else if (key == "relation_linear") c.variant.relation_linear = to_bool(key, v);
  else if (key == "attention_tanh") c.variant.attention_tanh = to_bool(key, v);
  else if (key == "temperature") c.temperature = to_double(key, v);
  else if (key == "epochs") c.train.epochs = to_size(key, v);
  else if (key == "lr") c.train.learning_rate = to_double(key, v);
  else if (key == "batch_size") c.train.batch_size = to_size(key, v);
  else if (key == "seed") c.train.seed = to_size(key, v);
  else if (key == "max_decode_len") c.train.max_decode_len = to_size(key, v);
  else if (key == "shuffle") c.train.shuffle = to_bool(key, v);
  else if (key == "grad_clip") {
    if (v == "none" || v.empty()) c.train.grad_clip.reset();
    else c.train.grad_clip = to_double(key, v);
  } else if (key == "rewrite_table") c.rewrite_table = v;
  else throw ConfigError("unknown config key '" + key + "'");
}

RunConfig parse_config(const std::string& text) {
  const std::string t = trim(text);
  if (!t.empty() && t.front() == '{') {
    try {
      return config_from_json(nlohmann::json::parse(t));
    } catch (const nlohmann::json::parse_error& e) {
      throw ConfigError(std::string("malformed JSON config: ") + e.what());
    }
  }
  std::vector<std::pair<std::string, std::string>> entries;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(line_no) + " is not key=value: '" + trim(line) + "'");
    }
    entries.emplace_back(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  RunConfig c = preset_config("mathqa");
  for (const auto& [k, v] : entries)
    if (k == "preset") apply_setting(c, k, v);
  for (const auto& [k, v] : entries)
    if (k != "preset") apply_setting(c, k, v);
  return c;
}

RunConfig config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("JSON config must be an object");
  RunConfig c = preset_config("mathqa");
  if (j.contains("preset")) apply_setting(c, "preset", json_scalar_text(j["preset"]));
  for (const auto& [k, v] : j.items())
    if (k != "preset") apply_setting(c, k, json_scalar_text(v));
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("config file not found: '" + path.string() + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str());
}

nlohmann::json RunConfig::to_json() const {
  return {{"preset", preset},
          {"dialect", to_string(dialect)},
          {"n_F", dims.n_fillers},
          {"n_R", dims.n_roles},
          {"d_F", dims.filler_dim},
          {"d_R", dims.role_dim},
          {"d_Rel", dims.rel_dim},
          {"d_Arg", dims.arg_dim},
          {"d_Pos", dims.pos_dim},
          {"embed_dim", dims.embed_dim},
          {"lstm_hidden", dims.lstm_hidden},
          {"positions", dims.positions},
          {"encoder", to_string(variant.encoder)},
          {"decoder", to_string(variant.decoder)},
          {"pooling", to_string(variant.pooling)},
          {"reasoning_layers", variant.reasoning_layers},
          {"relation_linear", variant.relation_linear},
          {"attention_tanh", variant.attention_tanh},
          {"temperature", temperature},
          {"epochs", train.epochs},
          {"lr", train.learning_rate},
          {"batch_size", train.batch_size},
          {"seed", train.seed},
          {"max_decode_len", train.max_decode_len},
          {"shuffle", train.shuffle},
          {"grad_clip", train.grad_clip ? nlohmann::json(*train.grad_clip) : nlohmann::json(nullptr)},
          {"rewrite_table", rewrite_table}};
}

std::string RunConfig::to_text() const {
  // preset first so that reloading applies it before the explicit values
  const nlohmann::json j = to_json();
  std::string out = "preset = " + preset + "\n";
  for (const auto& [k, v] : j.items()) {
    if (k == "preset") continue;
    out += k + " = " + json_scalar_text(v) + "\n";
  }
  return out;
}

ModelConfig RunConfig::model_config(const VocabSizes& vocab) const {
  ModelConfig m;
  m.dims = dims;
  m.variant = variant;
  m.vocab = vocab;
  m.temperature = temperature;
  m.validate();
  return m;
}

}  // namespace tpn2f
