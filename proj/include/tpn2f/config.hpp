#pragma once

#include <filesystem>
#include <string>

#include "json.hpp"
#include "tpn2f/metrics.hpp"
#include "tpn2f/model.hpp"
#include "tpn2f/training.hpp"

namespace tpn2f {

/// Everything a run needs besides data paths: dialect, model shape and
/// training schedule.
struct RunConfig {
  std::string preset = "mathqa";
  Dialect dialect = Dialect::MathQA;
  ModelDims dims;
  ModelVariant variant;
  double temperature = 0.1;
  TrainConfig train;
  std::string rewrite_table;  // path to a JSON rewrite table; empty = built-in

  /// key=value text accepted by load_config, one key per line.
  std::string to_text() const;
  nlohmann::json to_json() const;

  ModelConfig model_config(const VocabSizes& vocab) const;
};

/// "mathqa" or "algolisp" hyperparameters. Throws ConfigError otherwise.
RunConfig preset_config(const std::string& name);

/// Sets one key from its text form. Unknown keys and malformed values raise
/// ConfigError naming the key. Setting "preset" resets every other key.
void apply_setting(RunConfig& config, const std::string& key, const std::string& value);

/// Parses key=value text ('#' starts a comment) or a JSON object. A preset
/// key is applied before the others wherever it appears.
RunConfig parse_config(const std::string& text);
RunConfig config_from_json(const nlohmann::json& j);

/// Reads a config file. A missing file raises IoError.
RunConfig load_config(const std::filesystem::path& path);

}  // namespace tpn2f
