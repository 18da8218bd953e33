#include "tpn2f/algolisp.hpp"

#include <pthread.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <exception>
#include <functional>
#include <optional>
#include <set>

#include "tpn2f/error.hpp"
#include "tpn2f/mathqa.hpp"

namespace tpn2f::algolisp {

struct Function {
  enum class Kind { Builtin, Lambda, Partial };
  Kind kind = Kind::Builtin;
  std::string name;         // builtin name
  std::size_t arity = 1;
  std::size_t body = 0;     // lambda body step
  Value bound;              // partial: first operand
  std::shared_ptr<const Function> inner;  // partial: wrapped function
};

Value Value::make_int(std::int64_t v) {
  Value out;
  out.kind = Kind::Int;
  out.integer = v;
  return out;
}

Value Value::make_real(double v) {
  Value out;
  out.kind = Kind::Real;
  out.real = v;
  return out;
}

Value Value::make_bool(bool v) {
  Value out;
  out.kind = Kind::Boolean;
  out.boolean = v;
  return out;
}

Value Value::make_string(std::string v) {
  Value out;
  out.kind = Kind::String;
  out.string = std::move(v);
  return out;
}

Value Value::make_list(std::vector<Value> items) {
  Value out;
  out.kind = Kind::List;
  out.list = std::make_shared<const std::vector<Value>>(std::move(items));
  return out;
}

Value Value::make_function(std::shared_ptr<const Function> fn) {
  Value out;
  out.kind = Kind::Function;
  out.function = std::move(fn);
  return out;
}

const std::vector<Value>& Value::items() const {
  if (kind != Kind::List) throw ExecError(ExecErrorCode::TypeError, "expected a list, got " + str());
  return *list;
}

std::string Value::str() const {
  switch (kind) {
    case Kind::Int: return std::to_string(integer);
    case Kind::Real: {
      char buf[32];
      auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, real);
      return std::string(buf, ptr);
    }
    case Kind::Boolean: return boolean ? "true" : "false";
    case Kind::String: return "\"" + string + "\"";
    case Kind::List: {
      std::string out = "[";
      for (std::size_t i = 0; i < list->size(); ++i) {
        if (i) out += ", ";
        out += (*list)[i].str();
      }
      return out + "]";
    }
    case Kind::Function:
      return function->kind == Function::Kind::Builtin ? "<builtin " + function->name + ">" : "<closure>";
  }
  return "?";
}

bool values_equal(const Value& a, const Value& b) {
  if (a.is_number() && b.is_number()) {
    if (a.kind == Value::Kind::Int && b.kind == Value::Kind::Int) return a.integer == b.integer;
    const double x = a.as_double(), y = b.as_double();
    return std::abs(x - y) <= 1e-6 * std::max({1.0, std::abs(x), std::abs(y)});
  }
  if (a.kind != b.kind) return false;
  switch (a.kind) {
    case Value::Kind::Boolean: return a.boolean == b.boolean;
    case Value::Kind::String: return a.string == b.string;
    case Value::Kind::List: {
      if (a.list->size() != b.list->size()) return false;
      for (std::size_t i = 0; i < a.list->size(); ++i)
        if (!values_equal((*a.list)[i], (*b.list)[i])) return false;
      return true;
    }
    default: return false;
  }
}

Value value_from_json(const nlohmann::json& j) {
  if (j.is_boolean()) return Value::make_bool(j.get<bool>());
  if (j.is_number_integer()) return Value::make_int(j.get<std::int64_t>());
  if (j.is_number()) return Value::make_real(j.get<double>());
  if (j.is_string()) return Value::make_string(j.get<std::string>());
  if (j.is_array()) {
    std::vector<Value> items;
    for (const auto& e : j) items.push_back(value_from_json(e));
    return Value::make_list(std::move(items));
  }
  throw SchemaError("unsupported value in test case: " + j.dump());
}

nlohmann::json value_to_json(const Value& v) {
  switch (v.kind) {
    case Value::Kind::Int: return v.integer;
    case Value::Kind::Real: return v.real;
    case Value::Kind::Boolean: return v.boolean;
    case Value::Kind::String: return v.string;
    case Value::Kind::List: {
      nlohmann::json arr = nlohmann::json::array();
      for (const auto& e : *v.list) arr.push_back(value_to_json(e));
      return arr;
    }
    case Value::Kind::Function: return v.str();
  }
  return nullptr;
}

namespace {

using Args = std::vector<Value>;

struct Frame {
  std::vector<std::optional<Value>> memo;
  std::vector<Value> args;                  // empty at top level
  std::shared_ptr<const Function> self;     // innermost lambda, null at top level
};

const std::set<std::string>& special_forms() {
  static const std::set<std::string> forms{"lambda1", "lambda2", "if", "self"};
  return forms;
}

// Arity of each eager builtin.
const std::map<std::string, std::size_t>& builtin_arity() {
  static const std::map<std::string, std::size_t> table{
      {"+", 2},       {"-", 2},     {"*", 2},      {"/", 2},       {"%", 2},      {"--", 2},
      {"<=", 2},      {"<", 2},     {">", 2},      {">=", 2},      {"==", 2},     {"!=", 2},
      {"min", 2},     {"max", 2},   {"and", 2},    {"or", 2},      {"not", 1},    {"map", 2},
      {"filter", 2},  {"reduce", 3}, {"partial", 2}, {"partial1", 2}, {"invoke1", 2}, {"range", 2},
      {"sort", 1},    {"len", 1},   {"deref", 2},  {"digits", 1},  {"reverse", 1}, {"floor", 1},
      {"sqrt", 1},    {"head", 1},  {"square", 1},
  };
  return table;
}

std::int64_t require_int(const Value& v, const char* op) {
  if (v.kind == Value::Kind::Int) return v.integer;
  if (v.kind == Value::Kind::Real && v.real == std::floor(v.real)) return static_cast<std::int64_t>(v.real);
  throw ExecError(ExecErrorCode::TypeError, std::string(op) + " expects an integer, got " + v.str());
}

void require_number(const Value& v, const char* op) {
  if (!v.is_number()) throw ExecError(ExecErrorCode::TypeError, std::string(op) + " expects a number, got " + v.str());
}

Value arithmetic(const std::string& op, const Value& a, const Value& b) {
  if (op == "+" && a.kind == Value::Kind::List && b.kind == Value::Kind::List) {
    std::vector<Value> out = *a.list;
    out.insert(out.end(), b.list->begin(), b.list->end());
    return Value::make_list(std::move(out));
  }
  if (op == "+" && a.kind == Value::Kind::String && b.kind == Value::Kind::String) {
    return Value::make_string(a.string + b.string);
  }
  require_number(a, op.c_str());
  require_number(b, op.c_str());
  const bool ints = a.kind == Value::Kind::Int && b.kind == Value::Kind::Int;
  if (op == "/" || op == "%") {
    if (b.as_double() == 0.0) throw ExecError(ExecErrorCode::DivisionByZero, a.str() + " " + op + " 0");
    if (ints) return Value::make_int(op == "/" ? a.integer / b.integer : a.integer % b.integer);
    return Value::make_real(op == "/" ? a.as_double() / b.as_double() : std::fmod(a.as_double(), b.as_double()));
  }
  if (ints) {
    if (op == "+") return Value::make_int(a.integer + b.integer);
    if (op == "-") return Value::make_int(a.integer - b.integer);
    if (op == "--") return Value::make_int(b.integer - a.integer);
    if (op == "*") return Value::make_int(a.integer * b.integer);
    if (op == "min") return Value::make_int(std::min(a.integer, b.integer));
    if (op == "max") return Value::make_int(std::max(a.integer, b.integer));
  }
  const double x = a.as_double(), y = b.as_double();
  if (op == "+") return Value::make_real(x + y);
  if (op == "-") return Value::make_real(x - y);
  if (op == "--") return Value::make_real(y - x);
  if (op == "*") return Value::make_real(x * y);
  if (op == "min") return Value::make_real(std::min(x, y));
  return Value::make_real(std::max(x, y));
}

bool less_than(const Value& a, const Value& b) {
  if (a.is_number() && b.is_number()) return a.as_double() < b.as_double();
  if (a.kind == Value::Kind::String && b.kind == Value::Kind::String) return a.string < b.string;
  throw ExecError(ExecErrorCode::TypeError, "cannot order " + a.str() + " and " + b.str());
}

Value comparison(const std::string& op, const Value& a, const Value& b) {
  if (op == "==") return Value::make_bool(values_equal(a, b));
  if (op == "!=") return Value::make_bool(!values_equal(a, b));
  if (op == "<") return Value::make_bool(less_than(a, b));
  if (op == ">") return Value::make_bool(less_than(b, a));
  if (op == "<=") return Value::make_bool(!less_than(b, a));
  return Value::make_bool(!less_than(a, b));  // >=
}

bool truthy(const Value& v) {
  if (v.kind == Value::Kind::Boolean) return v.boolean;
  if (v.is_number()) return v.as_double() != 0.0;
  throw ExecError(ExecErrorCode::TypeError, "condition is not boolean: " + v.str());
}

std::optional<Value> parse_literal(const std::string& s) {
  if (s == "true") return Value::make_bool(true);
  if (s == "false") return Value::make_bool(false);
  if (s.empty()) return std::nullopt;
  std::int64_t i = 0;
  auto [p1, e1] = std::from_chars(s.data(), s.data() + s.size(), i);
  if (e1 == std::errc() && p1 == s.data() + s.size()) return Value::make_int(i);
  double d = 0.0;
  auto [p2, e2] = std::from_chars(s.data(), s.data() + s.size(), d);
  if (e2 == std::errc() && p2 == s.data() + s.size()) return Value::make_real(d);
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') return Value::make_string(s.substr(1, s.size() - 2));
  return std::nullopt;
}

class Interpreter {
 public:
  Interpreter(const Program& program, const Bindings& inputs, const Options& options)
      : program_(program), inputs_(inputs), options_(options) {}

  Value run() {
    if (program_.empty()) throw ExecError(ExecErrorCode::ArityError, "empty program");
    mathqa::check_references(program_);
    Frame top;
    top.memo.resize(program_.size());
    return eval(program_.size() - 1, top);
  }

 private:
  Value eval(std::size_t step, Frame& frame) {
    if (frame.memo[step]) return *frame.memo[step];
    Value v = compute(step, frame);
    frame.memo[step] = v;
    return v;
  }

  Value symbol(const std::string& s, Frame& frame) {
    if (const long r = result_index(s); r >= 0) return eval(static_cast<std::size_t>(r), frame);
    if (s == "arg1" || s == "arg2") {
      const std::size_t i = s == "arg1" ? 0 : 1;
      if (i >= frame.args.size()) {
        throw ExecError(ExecErrorCode::UnknownSymbol, s + " used outside a lambda of that arity");
      }
      return frame.args[i];
    }
    if (auto it = inputs_.find(s); it != inputs_.end()) return it->second;
    if (auto lit = parse_literal(s)) return *lit;
    if (builtin_arity().count(s)) {
      auto fn = std::make_shared<Function>();
      fn->kind = Function::Kind::Builtin;
      fn->name = s;
      fn->arity = builtin_arity().at(s);
      return Value::make_function(fn);
    }
    throw ExecError(ExecErrorCode::UnknownSymbol, "'" + s + "'");
  }

  Value compute(std::size_t step, Frame& frame) {
    const RelationalTuple& t = program_[step];
    const std::vector<std::string> args = t.live_args();
    const std::string& op = t.relation;
    auto expect = [&](std::size_t n) {
      if (args.size() != n) {
        throw ExecError(ExecErrorCode::ArityError, op + " takes " + std::to_string(n) + " arguments, got " +
                                                       std::to_string(args.size()) + " in " + t.str());
      }
    };
    if (op == "lambda1" || op == "lambda2") {
      expect(1);
      const long body = result_index(args[0]);
      if (body < 0) throw ExecError(ExecErrorCode::TypeError, op + " body must be a #i reference");
      auto fn = std::make_shared<Function>();
      fn->kind = Function::Kind::Lambda;
      fn->arity = op == "lambda1" ? 1 : 2;
      fn->body = static_cast<std::size_t>(body);
      return Value::make_function(fn);
    }
    if (op == "if") {
      expect(3);
      return truthy(symbol(args[0], frame)) ? symbol(args[1], frame) : symbol(args[2], frame);
    }
    if (op == "self") {
      if (!frame.self) throw ExecError(ExecErrorCode::SelfOutsideLambda, t.str());
      Args values;
      for (const auto& a : args) values.push_back(symbol(a, frame));
      return call(frame.self, values);
    }
    auto arity = builtin_arity().find(op);
    if (arity == builtin_arity().end()) throw ExecError(ExecErrorCode::UnknownOperator, "'" + op + "'");
    expect(arity->second);
    Args values;
    for (const auto& a : args) values.push_back(symbol(a, frame));
    return apply(op, values);
  }

  const std::shared_ptr<const Function>& require_function(const Value& v, const std::string& op) {
    if (v.kind != Value::Kind::Function) {
      throw ExecError(ExecErrorCode::TypeError, op + " expects a function, got " + v.str());
    }
    return v.function;
  }

  Value call(const std::shared_ptr<const Function>& fn, const Args& args) {
    if (args.size() != fn->arity) {
      throw ExecError(ExecErrorCode::ArityError, "function of arity " + std::to_string(fn->arity) +
                                                     " called with " + std::to_string(args.size()));
    }
    switch (fn->kind) {
      case Function::Kind::Builtin: return apply(fn->name, args);
      case Function::Kind::Partial: return call(fn->inner, {fn->bound, args[0]});
      case Function::Kind::Lambda: {
        if (depth_ >= options_.max_depth) {
          throw ExecError(ExecErrorCode::RecursionLimit,
                          "more than " + std::to_string(options_.max_depth) + " nested calls");
        }
        ++depth_;
        Frame frame;
        frame.memo.resize(program_.size());
        frame.args = args;
        frame.self = fn;
        Value v = eval(fn->body, frame);
        --depth_;
        return v;
      }
    }
    return {};
  }

  Value apply(const std::string& op, const Args& a) {
    static const std::set<std::string> arith{"+", "-", "*", "/", "%", "--", "min", "max"};
    static const std::set<std::string> compare{"<=", "<", ">", ">=", "==", "!="};
    if (arith.count(op)) return arithmetic(op, a[0], a[1]);
    if (compare.count(op)) return comparison(op, a[0], a[1]);
    if (op == "and") return Value::make_bool(truthy(a[0]) && truthy(a[1]));
    if (op == "or") return Value::make_bool(truthy(a[0]) || truthy(a[1]));
    if (op == "not") return Value::make_bool(!truthy(a[0]));
    if (op == "map" || op == "filter") {
      const auto& fn = require_function(a[1], op);
      std::vector<Value> out;
      for (const auto& x : a[0].items()) {
        Value y = call(fn, {x});
        if (op == "map") {
          out.push_back(std::move(y));
        } else if (truthy(y)) {
          out.push_back(x);
        }
      }
      return Value::make_list(std::move(out));
    }
    if (op == "reduce") {
      const auto& fn = require_function(a[2], op);
      Value acc = a[1];
      for (const auto& x : a[0].items()) acc = call(fn, {acc, x});
      return acc;
    }
    if (op == "partial" || op == "partial1") {
      const auto& inner = require_function(a[1], op);
      if (inner->arity != 2) throw ExecError(ExecErrorCode::ArityError, op + " needs a binary function");
      auto fn = std::make_shared<Function>();
      fn->kind = Function::Kind::Partial;
      fn->arity = 1;
      fn->bound = a[0];
      fn->inner = inner;
      return Value::make_function(fn);
    }
    if (op == "invoke1") return call(require_function(a[0], op), {a[1]});
    if (op == "range") {
      const std::int64_t lo = require_int(a[0], "range"), hi = require_int(a[1], "range");
      std::vector<Value> out;
      for (std::int64_t i = lo; i < hi; ++i) out.push_back(Value::make_int(i));
      return Value::make_list(std::move(out));
    }
    if (op == "sort") {
      std::vector<Value> out = a[0].items();
      std::stable_sort(out.begin(), out.end(), less_than);
      return Value::make_list(std::move(out));
    }
    if (op == "reverse") {
      if (a[0].kind == Value::Kind::String) return Value::make_string({a[0].string.rbegin(), a[0].string.rend()});
      std::vector<Value> out = a[0].items();
      std::reverse(out.begin(), out.end());
      return Value::make_list(std::move(out));
    }
    if (op == "len") {
      if (a[0].kind == Value::Kind::String) return Value::make_int(static_cast<std::int64_t>(a[0].string.size()));
      return Value::make_int(static_cast<std::int64_t>(a[0].items().size()));
    }
    if (op == "head") {
      const auto& items = a[0].items();
      if (items.empty()) throw ExecError(ExecErrorCode::DomainError, "head of empty list");
      return items.front();
    }
    if (op == "deref") {
      const std::int64_t i = require_int(a[1], "deref");
      if (a[0].kind == Value::Kind::String) {
        if (i < 0 || static_cast<std::size_t>(i) >= a[0].string.size()) {
          throw ExecError(ExecErrorCode::DomainError, "deref index " + std::to_string(i) + " out of range");
        }
        return Value::make_string(std::string(1, a[0].string[static_cast<std::size_t>(i)]));
      }
      const auto& items = a[0].items();
      if (i < 0 || static_cast<std::size_t>(i) >= items.size()) {
        throw ExecError(ExecErrorCode::DomainError, "deref index " + std::to_string(i) + " out of range for " +
                                                        std::to_string(items.size()) + " items");
      }
      return items[static_cast<std::size_t>(i)];
    }
    if (op == "digits") {
      std::int64_t n = require_int(a[0], "digits");
      if (n < 0) n = -n;
      std::vector<Value> out;
      do {
        out.push_back(Value::make_int(n % 10));
        n /= 10;
      } while (n > 0);
      std::reverse(out.begin(), out.end());
      return Value::make_list(std::move(out));
    }
    if (op == "floor") {
      require_number(a[0], "floor");
      return Value::make_int(static_cast<std::int64_t>(std::floor(a[0].as_double())));
    }
    if (op == "sqrt") {
      require_number(a[0], "sqrt");
      if (a[0].as_double() < 0) throw ExecError(ExecErrorCode::DomainError, "sqrt of " + a[0].str());
      return Value::make_real(std::sqrt(a[0].as_double()));
    }
    if (op == "square") return arithmetic("*", a[0], a[0]);
    throw ExecError(ExecErrorCode::UnknownOperator, "'" + op + "'");
  }

  const Program& program_;
  const Bindings& inputs_;
  const Options& options_;
  std::size_t depth_ = 0;
};

// Runs `fn` on a thread with a 1 GiB stack (reserved lazily by the OS).
void run_with_large_stack(const std::function<void()>& fn) {
  struct Job {
    const std::function<void()>* fn;
    std::exception_ptr error;
  } job{&fn, nullptr};
  pthread_attr_t attr;
  pthread_attr_init(&attr);
  pthread_attr_setstacksize(&attr, std::size_t{1} << 30);
  pthread_t thread;
  auto entry = [](void* p) -> void* {
    auto* j = static_cast<Job*>(p);
    try {
      (*j->fn)();
    } catch (...) {
      j->error = std::current_exception();
    }
    return nullptr;
  };
  const int rc = pthread_create(&thread, &attr, entry, &job);
  pthread_attr_destroy(&attr);
  if (rc != 0) {
    fn();  // fall back to the calling thread
    return;
  }
  pthread_join(thread, nullptr);
  if (job.error) std::rethrow_exception(job.error);
}

}  // namespace

bool is_builtin(const std::string& name) {
  return builtin_arity().count(name) > 0 || special_forms().count(name) > 0;
}

Value execute(const Program& program, const Bindings& inputs, const Options& options) {
  Value result;
  run_with_large_stack([&] { result = Interpreter(program, inputs, options).run(); });
  return result;
}

}  // namespace tpn2f::algolisp
