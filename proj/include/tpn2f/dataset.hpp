#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "tpn2f/metrics.hpp"
#include "tpn2f/tuple.hpp"

namespace tpn2f {

struct Sample {
  std::string id;
  std::vector<std::string> tokens;
  Program program;
  std::vector<double> numbers;
  std::vector<double> options;
  std::optional<std::size_t> correct;
  std::optional<double> answer;
  std::vector<IoTest> tests;

  GoldRecord gold() const;
};

/// Reads JSON-lines or a single JSON array. Record fields:
///   text          string or token list (required)
///   program       tuple-sequence string or list of [rel, args...] lists
///   program_tree  s-expression string, flattened post-order (AlgoLisp)
///   numbers       explicit number list; otherwise MathQA text is linked
///   options       list of numbers or "a ) 12 , b ) 14 ..." string
///   correct       option index or letter
///   answer        number
///   tests         [{"input": {...}, "output": ...}]
///   id            optional, defaults to the record index
/// Malformed JSON reports the line; a missing field raises SchemaError
/// naming it.
std::vector<Sample> load_dataset(const std::filesystem::path& path, Dialect dialect);
std::vector<Sample> parse_dataset(std::string_view content, Dialect dialect,
                                  const std::string& source = "<memory>");

/// The "program" or "program_tree" field of a record, as parsed by
/// sample_from_json. Throws SchemaError when neither is present.
Program program_from_record(const nlohmann::json& record);

Sample sample_from_json(const nlohmann::json& record, Dialect dialect, std::size_t index);

/// Round-trips through sample_from_json: tokens are written as a list,
/// the program as a tuple-sequence string, numbers explicitly.
nlohmann::json sample_to_json(const Sample& sample);

/// Writes one sample per line.
void save_dataset(const std::filesystem::path& path, const std::vector<Sample>& samples);

}  // namespace tpn2f
