#pragma once

#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tpn2f/tuple.hpp"

namespace tpn2f::mathqa {

struct Operator {
  std::size_t arity = 2;
  std::function<double(std::span<const double>)> fn;
};

/// Name -> operator. The default table covers the arithmetic and geometry
/// operators used by the bundled fixtures; callers may register more.
class OperatorTable {
 public:
  static OperatorTable defaults();

  void add(std::string name, std::size_t arity, std::function<double(std::span<const double>)> fn);
  const Operator* find(const std::string& name) const;
  bool contains(const std::string& name) const { return find(name) != nullptr; }
  std::vector<std::string> names() const;

 private:
  std::map<std::string, Operator> ops_;
};

struct ProgramEnv {
  std::vector<double> numbers;  // n0, n1, ...
  std::vector<double> results;  // #0, #1, ... filled during execution
};

/// "const-100", "const_100" -> "const100"; other symbols unchanged.
std::string normalize_constant(const std::string& symbol);

/// Numeric value of a constant symbol ("const100", "const0.2778", "const_pi"),
/// or nullopt when `symbol` is not a constant.
std::optional<double> constant_value(const std::string& symbol);

/// Rejects any #i that does not refer to an earlier step, before anything
/// runs. Throws ExecError(DanglingReference).
void check_references(const Program& program);

/// Executes the straight-line program and returns the last result. The
/// per-step values are left in env.results.
double execute(const Program& program, ProgramEnv& env,
               const OperatorTable& table = OperatorTable::defaults());

}  // namespace tpn2f::mathqa
