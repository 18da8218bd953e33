#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "json.hpp"
#include "tpn2f/tuple.hpp"

namespace tpn2f::algolisp {

struct Function;

/// Tagged runtime value. Integers and reals are kept apart so that `/`
/// can truncate on integer operands.
struct Value {
  enum class Kind { Int, Real, Boolean, String, List, Function };

  Kind kind = Kind::Int;
  std::int64_t integer = 0;
  double real = 0.0;
  bool boolean = false;
  std::string string;
  std::shared_ptr<const std::vector<Value>> list;
  std::shared_ptr<const Function> function;

  static Value make_int(std::int64_t v);
  static Value make_real(double v);
  static Value make_bool(bool v);
  static Value make_string(std::string v);
  static Value make_list(std::vector<Value> items);
  static Value make_function(std::shared_ptr<const Function> fn);

  bool is_number() const { return kind == Kind::Int || kind == Kind::Real; }
  double as_double() const { return kind == Kind::Int ? static_cast<double>(integer) : real; }
  const std::vector<Value>& items() const;
  std::string str() const;
};

/// Structural equality; numbers compare by value with a 1e-6 relative
/// tolerance when either side is real. Functions are never equal.
bool values_equal(const Value& a, const Value& b);

Value value_from_json(const nlohmann::json& j);
nlohmann::json value_to_json(const Value& v);

using Bindings = std::map<std::string, Value>;

struct Options {
  std::size_t max_depth = 10000;  // nested closure invocations
};

/// Demand-driven evaluation of the last step. Steps are evaluated lazily and
/// memoised per invocation frame; a lambda body is the subgraph reachable
/// from the lambda's #i argument, with arg1/arg2 bound to the innermost
/// invocation. Runs on a thread with a large stack so that deep recursion
/// hits the depth limit rather than the native stack.
Value execute(const Program& program, const Bindings& inputs, const Options& options = {});

/// True if `name` is a builtin or special form.
bool is_builtin(const std::string& name);

}  // namespace tpn2f::algolisp
