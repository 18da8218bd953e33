#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "tpn2f/metrics.hpp"
#include "tpn2f/tuple.hpp"

namespace tpn2f {

struct LinkedText {
  std::vector<double> numbers;
  std::vector<std::string> tokens;  // numerals replaced by n0, n1, ...
};

/// Pulls decimal literals out left to right. Trailing punctuation and '%'
/// become their own tokens, thousands separators are accepted ("3,888").
LinkedText link_numbers(const std::vector<std::string>& tokens);
LinkedText link_numbers(std::string_view text);

std::vector<std::string> split_whitespace(std::string_view text);

/// op -> binary template. Template arguments "$1".."$3" name the original
/// arguments, "@k" the result of template step k; the last step produces the
/// value of the replaced tuple.
class RewriteTable {
 public:
  static RewriteTable mathqa_defaults();
  static RewriteTable from_json(const nlohmann::json& j);

  void add(const std::string& op, Program steps);
  const Program* find(const std::string& op) const;
  bool empty() const { return rules_.empty(); }
  nlohmann::json to_json() const;

 private:
  std::map<std::string, Program> rules_;
};

/// Replaces each tuple with three live arguments by its template and
/// renumbers later #i references. Throws PreprocessError listing the
/// ternary ops the table does not cover.
Program rewrite_ternary_ops(const Program& program, const RewriteTable& table);

/// Pads every tuple to exactly `arity` arguments with PAD. Throws
/// PreprocessError for a tuple with more live arguments.
Program pad_arguments(const Program& program, std::size_t arity);

/// Full transform used by `prepare`: constant normalization (MathQA),
/// ternary rewriting when arity is 2, then padding. Idempotent.
Program preprocess_program(const Program& program, Dialect dialect, std::size_t arity,
                           const RewriteTable& table);

}  // namespace tpn2f
