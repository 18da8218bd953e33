#include "tpn2f/mathqa.hpp"

#include <charconv>
#include <cmath>
#include <numbers>

#include "tpn2f/error.hpp"

namespace tpn2f::mathqa {

namespace {

double require_nonzero(double v) {
  if (v == 0.0) throw ExecError(ExecErrorCode::DivisionByZero, "divisor is zero");
  return v;
}

double require_nonnegative(double v, const char* op) {
  if (v < 0.0) throw ExecError(ExecErrorCode::DomainError, std::string(op) + " of negative value");
  return v;
}

std::optional<double> parse_number(std::string_view s) {
  if (s.empty()) return std::nullopt;
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

}  // namespace

OperatorTable OperatorTable::defaults() {
  using Args = std::span<const double>;
  const double pi = std::numbers::pi;
  OperatorTable t;
  t.add("add", 2, [](Args a) { return a[0] + a[1]; });
  t.add("subtract", 2, [](Args a) { return a[0] - a[1]; });
  t.add("multiply", 2, [](Args a) { return a[0] * a[1]; });
  t.add("divide", 2, [](Args a) { return a[0] / require_nonzero(a[1]); });
  t.add("power", 2, [](Args a) { return std::pow(a[0], a[1]); });
  t.add("sqrt", 1, [](Args a) { return std::sqrt(require_nonnegative(a[0], "sqrt")); });
  t.add("floor", 1, [](Args a) { return std::floor(a[0]); });
  t.add("negate", 1, [](Args a) { return -a[0]; });
  t.add("inverse", 1, [](Args a) { return 1.0 / require_nonzero(a[0]); });
  t.add("log", 1, [](Args a) {
    if (a[0] <= 0.0) throw ExecError(ExecErrorCode::DomainError, "log of non-positive value");
    return std::log(a[0]);
  });
  t.add("min", 2, [](Args a) { return std::min(a[0], a[1]); });
  t.add("max", 2, [](Args a) { return std::max(a[0], a[1]); });
  t.add("square_area", 1, [](Args a) { return a[0] * a[0]; });
  t.add("square_perimeter", 1, [](Args a) { return 4.0 * a[0]; });
  t.add("rectangle_area", 2, [](Args a) { return a[0] * a[1]; });
  t.add("rectangle_perimeter", 2, [](Args a) { return 2.0 * (a[0] + a[1]); });
  t.add("circle_area", 1, [pi](Args a) { return pi * a[0] * a[0]; });
  t.add("circumface", 1, [pi](Args a) { return 2.0 * pi * a[0]; });
  t.add("volume_cube", 1, [](Args a) { return a[0] * a[0] * a[0]; });
  t.add("volume_rectangular_prism", 3, [](Args a) { return a[0] * a[1] * a[2]; });
  return t;
}

void OperatorTable::add(std::string name, std::size_t arity,
                        std::function<double(std::span<const double>)> fn) {
  ops_[std::move(name)] = Operator{arity, std::move(fn)};
}

const Operator* OperatorTable::find(const std::string& name) const {
  auto it = ops_.find(name);
  return it == ops_.end() ? nullptr : &it->second;
}

std::vector<std::string> OperatorTable::names() const {
  std::vector<std::string> out;
  for (const auto& [name, op] : ops_) out.push_back(name);
  return out;
}

std::string normalize_constant(const std::string& symbol) {
  if (!symbol.starts_with("const")) return symbol;
  std::string rest = symbol.substr(5);
  if (!rest.empty() && (rest[0] == '-' || rest[0] == '_')) rest.erase(0, 1);
  return "const" + rest;
}

std::optional<double> constant_value(const std::string& symbol) {
  const std::string s = normalize_constant(symbol);
  if (!s.starts_with("const") || s.size() == 5) return std::nullopt;
  std::string rest = s.substr(5);
  if (rest == "pi") return std::numbers::pi;
  // MathQA spells decimals with underscores: const_0_25 -> 0.25.
  for (char& c : rest)
    if (c == '_') c = '.';
  return parse_number(rest);
}

void check_references(const Program& program) {
  for (std::size_t i = 0; i < program.size(); ++i) {
    for (const auto& a : program[i].args) {
      const long r = result_index(a);
      if (r >= 0 && static_cast<std::size_t>(r) >= i) {
        throw ExecError(ExecErrorCode::DanglingReference,
                        "step " + std::to_string(i) + " refers to " + a + " which is not an earlier result");
      }
    }
  }
}

double execute(const Program& program, ProgramEnv& env, const OperatorTable& table) {
  if (program.empty()) throw ExecError(ExecErrorCode::ArityError, "empty program");
  check_references(program);
  env.results.clear();
  auto resolve = [&](const std::string& sym) -> double {
    if (const long r = result_index(sym); r >= 0) return env.results[static_cast<std::size_t>(r)];
    if (sym.size() > 1 && sym[0] == 'n') {
      if (auto idx = parse_number(std::string_view(sym).substr(1))) {
        const auto i = static_cast<std::size_t>(*idx);
        if (*idx < 0 || *idx != std::floor(*idx) || i >= env.numbers.size()) {
          throw ExecError(ExecErrorCode::DanglingReference,
                          sym + " but the problem has " + std::to_string(env.numbers.size()) + " numbers");
        }
        return env.numbers[i];
      }
    }
    if (auto c = constant_value(sym)) return *c;
    if (auto v = parse_number(sym)) return *v;
    throw ExecError(ExecErrorCode::UnknownSymbol, "cannot resolve argument '" + sym + "'");
  };
  for (const auto& step : program) {
    const Operator* op = table.find(step.relation);
    if (op == nullptr) throw ExecError(ExecErrorCode::UnknownOperator, "'" + step.relation + "'");
    const auto args = step.live_args();
    if (args.size() != op->arity) {
      throw ExecError(ExecErrorCode::ArityError, step.relation + " takes " + std::to_string(op->arity) +
                                                     " arguments, got " + std::to_string(args.size()));
    }
    std::vector<double> values;
    for (const auto& a : args) values.push_back(resolve(a));
    const double v = op->fn(values);
    if (!std::isfinite(v)) throw ExecError(ExecErrorCode::DomainError, step.str() + " is not finite");
    env.results.push_back(v);
  }
  return env.results.back();
}

}  // namespace tpn2f::mathqa
