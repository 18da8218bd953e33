#include "tpn2f/preprocess.hpp"

#include <regex>
#include <set>

#include "tpn2f/error.hpp"
#include "tpn2f/mathqa.hpp"

namespace tpn2f {

namespace {

bool is_number_literal(const std::string& s) {
  static const std::regex pattern(R"((\d{1,3}(,\d{3})+|\d+)(\.\d+)?|\.\d+)");
  return std::regex_match(s, pattern);
}

double literal_value(std::string s) {
  std::erase(s, ',');
  return std::stod(s);
}

constexpr std::string_view kLeading = "\"'($";
constexpr std::string_view kTrailing = ".,;:?!)\"'%";

}  // namespace

std::vector<std::string> split_whitespace(std::string_view text) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    const std::size_t start = i;
    while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    if (i > start) out.emplace_back(text.substr(start, i - start));
  }
  return out;
}

LinkedText link_numbers(const std::vector<std::string>& tokens) {
  LinkedText out;
  for (const auto& token : tokens) {
    std::size_t lo = 0, hi = token.size();
    while (lo < hi && kLeading.find(token[lo]) != std::string_view::npos) ++lo;
    while (hi > lo && kTrailing.find(token[hi - 1]) != std::string_view::npos) --hi;
    for (std::size_t k = 0; k < lo; ++k) out.tokens.emplace_back(1, token[k]);
    if (hi > lo) {
      std::string core = token.substr(lo, hi - lo);
      if (is_number_literal(core)) {
        out.tokens.push_back("n" + std::to_string(out.numbers.size()));
        out.numbers.push_back(literal_value(core));
      } else {
        out.tokens.push_back(std::move(core));
      }
    }
    for (std::size_t k = hi; k < token.size(); ++k) out.tokens.emplace_back(1, token[k]);
  }
  return out;
}

LinkedText link_numbers(std::string_view text) { return link_numbers(split_whitespace(text)); }

RewriteTable RewriteTable::mathqa_defaults() {
  RewriteTable t;
  t.add("volume_rectangular_prism", parse_tuple_sequence("(multiply,$1,$2) (multiply,@0,$3)"));
  return t;
}

RewriteTable RewriteTable::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("rewrite table must be a JSON object {op: template}");
  RewriteTable t;
  for (const auto& [op, tmpl] : j.items()) {
    Program steps;
    if (tmpl.is_string()) {
      steps = parse_tuple_sequence(tmpl.get<std::string>());
    } else if (tmpl.is_array()) {
      for (const auto& step : tmpl) {
        if (!step.is_array() || step.size() < 2) {
          throw ConfigError("rewrite template for '" + op + "' needs [rel, args...] steps");
        }
        RelationalTuple tuple{step[0].get<std::string>(), {}};
        for (std::size_t k = 1; k < step.size(); ++k) tuple.args.push_back(step[k].get<std::string>());
        steps.push_back(std::move(tuple));
      }
    } else {
      throw ConfigError("rewrite template for '" + op + "' must be a string or a list");
    }
    t.add(op, std::move(steps));
  }
  return t;
}

void RewriteTable::add(const std::string& op, Program steps) {
  if (steps.empty()) throw ConfigError("rewrite template for '" + op + "' is empty");
  for (std::size_t s = 0; s < steps.size(); ++s) {
    if (steps[s].live_args().size() > 2) {
      throw ConfigError("rewrite template for '" + op + "' has a step with more than two arguments");
    }
    for (const auto& a : steps[s].args) {
      if (a.size() > 1 && a[0] == '@' && std::stoul(a.substr(1)) >= s) {
        throw ConfigError("rewrite template for '" + op + "' refers forward with " + a);
      }
    }
  }
  rules_[op] = std::move(steps);
}

const Program* RewriteTable::find(const std::string& op) const {
  auto it = rules_.find(op);
  return it == rules_.end() ? nullptr : &it->second;
}

nlohmann::json RewriteTable::to_json() const {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [op, steps] : rules_) j[op] = format_program(steps);
  return j;
}

Program rewrite_ternary_ops(const Program& program, const RewriteTable& table) {
  std::set<std::string> missing;
  for (const auto& t : program) {
    if (t.live_args().size() > 2 && !table.find(t.relation)) missing.insert(t.relation);
  }
  if (!missing.empty()) {
    std::string list;
    for (const auto& op : missing) list += (list.empty() ? "" : ", ") + op;
    throw PreprocessError("no rewrite rule for ternary operator(s): " + list);
  }

  Program out;
  std::vector<std::size_t> new_index(program.size());
  auto remap = [&](const std::string& arg, std::size_t step) {
    const long ref = result_index(arg);
    if (ref < 0) return arg;
    if (static_cast<std::size_t>(ref) >= step) {
      throw PreprocessError("reference " + arg + " at step " + std::to_string(step) + " is not backward");
    }
    return "#" + std::to_string(new_index[static_cast<std::size_t>(ref)]);
  };

  for (std::size_t i = 0; i < program.size(); ++i) {
    const auto& t = program[i];
    const auto live = t.live_args();
    if (live.size() <= 2) {
      RelationalTuple copy{t.relation, {}};
      for (const auto& a : t.args) copy.args.push_back(remap(a, i));
      out.push_back(std::move(copy));
    } else {
      const Program& steps = *table.find(t.relation);
      const std::size_t base = out.size();
      for (const auto& step : steps) {
        RelationalTuple expanded{step.relation, {}};
        for (const auto& a : step.args) {
          if (a.size() > 1 && a[0] == '$') {
            const std::size_t k = std::stoul(a.substr(1));
            if (k == 0 || k > live.size()) {
              throw PreprocessError("template for '" + t.relation + "' uses " + a + " but the tuple has " +
                                    std::to_string(live.size()) + " arguments");
            }
            expanded.args.push_back(remap(live[k - 1], i));
          } else if (a.size() > 1 && a[0] == '@') {
            expanded.args.push_back("#" + std::to_string(base + std::stoul(a.substr(1))));
          } else {
            expanded.args.push_back(a);
          }
        }
        out.push_back(std::move(expanded));
      }
    }
    new_index[i] = out.size() - 1;
  }
  return out;
}

Program pad_arguments(const Program& program, std::size_t arity) {
  Program out;
  out.reserve(program.size());
  for (const auto& t : program) {
    auto live = t.live_args();
    if (live.size() > arity) {
      throw PreprocessError("tuple " + t.str() + " has more than " + std::to_string(arity) + " arguments");
    }
    live.resize(arity, std::string(kPadSymbol));
    out.push_back({t.relation, std::move(live)});
  }
  return out;
}

Program preprocess_program(const Program& program, Dialect dialect, std::size_t arity,
                           const RewriteTable& table) {
  Program p = program;
  if (dialect == Dialect::MathQA) {
    for (auto& t : p)
      for (auto& a : t.args) a = mathqa::normalize_constant(a);
  }
  if (arity == 2) p = rewrite_ternary_ops(p, table);
  return pad_arguments(p, arity);
}

}  // namespace tpn2f
