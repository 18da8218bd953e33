#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace tpn2f {

inline constexpr std::string_view kPadSymbol = "PAD";

/// (relation, arg1, arg2[, arg3]) in symbolic form.
struct RelationalTuple {
  std::string relation;
  std::vector<std::string> args;

  bool operator==(const RelationalTuple&) const = default;
  /// Arguments that are not PAD.
  std::vector<std::string> live_args() const;
  std::string str() const;  // "(rel,a1,a2)"
};

using Program = std::vector<RelationalTuple>;

/// Parses "(rel,a,b) (rel a b) ...". Commas and whitespace both separate
/// symbols; each tuple holds a relation and one to three arguments. Tuples
/// with a single argument are padded to two with PAD. Throws ParseError with
/// the byte offset of the problem.
Program parse_tuple_sequence(std::string_view text);

/// Space-separated "(rel,a1,a2)" tuples.
std::string format_program(const Program& program);

/// Index i for "#i", or -1 when `symbol` is not a result reference.
long result_index(std::string_view symbol);

}  // namespace tpn2f
