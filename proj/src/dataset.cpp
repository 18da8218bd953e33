#include "tpn2f/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <regex>
#include <sstream>

#include "tpn2f/error.hpp"
#include "tpn2f/preprocess.hpp"
#include "tpn2f/sexpr.hpp"

namespace tpn2f {

using nlohmann::json;

GoldRecord Sample::gold() const { return GoldRecord{program, numbers, options, correct, answer, tests}; }

namespace {

std::vector<double> parse_options_string(const std::string& text) {
  static const std::regex label(R"((^|[\s,])[a-eA-E]\s*\))");
  static const std::regex number(R"(-?\d+(,\d{3})*(\.\d+)?|-?\.\d+)");
  std::vector<std::size_t> starts;
  for (auto it = std::sregex_iterator(text.begin(), text.end(), label); it != std::sregex_iterator(); ++it) {
    starts.push_back(static_cast<std::size_t>(it->position() + it->length()));
  }
  std::vector<double> out;
  for (std::size_t k = 0; k < starts.size(); ++k) {
    const std::size_t end = k + 1 < starts.size() ? starts[k + 1] : text.size();
    const std::string chunk = text.substr(starts[k], end - starts[k]);
    std::smatch m;
    if (std::regex_search(chunk, m, number)) {
      std::string s = m.str();
      std::erase(s, ',');
      out.push_back(std::stod(s));
    } else {
      out.push_back(std::nan(""));
    }
  }
  return out;
}

Program program_from_json(const json& j) {
  if (j.is_string()) return parse_tuple_sequence(j.get<std::string>());
  if (!j.is_array()) throw SchemaError("field 'program' must be a string or a list of tuples");
  Program p;
  for (const auto& step : j) {
    if (!step.is_array() || step.size() < 2) throw SchemaError("field 'program' has a tuple without arguments");
    RelationalTuple t{step[0].get<std::string>(), {}};
    for (std::size_t k = 1; k < step.size(); ++k) t.args.push_back(step[k].get<std::string>());
    if (t.args.size() == 1) t.args.emplace_back(kPadSymbol);
    p.push_back(std::move(t));
  }
  return p;
}

Sexpr sexpr_from_json(const json& j) {
  if (j.is_string()) return Sexpr::make_atom(j.get<std::string>());
  if (j.is_number()) return Sexpr::make_atom(j.dump());
  if (!j.is_array()) throw SchemaError("field 'program_tree' holds a non-string atom");
  std::vector<Sexpr> items;
  for (const auto& item : j) items.push_back(sexpr_from_json(item));
  return Sexpr::make_list(std::move(items));
}

std::size_t option_index(const json& j, std::size_t n_options) {
  std::size_t idx = 0;
  if (j.is_string()) {
    const std::string s = j.get<std::string>();
    if (s.size() != 1 || !std::isalpha(static_cast<unsigned char>(s[0]))) {
      throw SchemaError("field 'correct' must be an index or an option letter");
    }
    idx = static_cast<std::size_t>(std::tolower(static_cast<unsigned char>(s[0])) - 'a');
  } else {
    idx = j.get<std::size_t>();
  }
  if (idx >= n_options) throw SchemaError("field 'correct' points past the options");
  return idx;
}

}  // namespace

Program program_from_record(const json& r) {
  if (r.contains("program")) return program_from_json(r["program"]);
  if (r.contains("program_tree")) {
    const auto& tree = r["program_tree"];
    return tree.is_string() ? flatten_program_tree(tree.get<std::string>())
                            : flatten_program_tree(sexpr_from_json(tree));
  }
  throw SchemaError("missing field 'program'");
}

Sample sample_from_json(const json& r, Dialect dialect, std::size_t index) {
  if (!r.is_object()) throw SchemaError("record is not a JSON object");
  try {
    Sample s;
    s.id = r.contains("id") ? (r["id"].is_string() ? r["id"].get<std::string>() : r["id"].dump())
                            : std::to_string(index);
    if (!r.contains("text")) throw SchemaError("missing field 'text'");
    std::vector<std::string> raw = r["text"].is_string() ? split_whitespace(r["text"].get<std::string>())
                                                         : r["text"].get<std::vector<std::string>>();
    if (r.contains("numbers")) {
      s.numbers = r["numbers"].get<std::vector<double>>();
      s.tokens = std::move(raw);
    } else if (dialect == Dialect::MathQA) {
      auto linked = link_numbers(raw);
      s.numbers = std::move(linked.numbers);
      s.tokens = std::move(linked.tokens);
    } else {
      s.tokens = std::move(raw);
    }

    s.program = program_from_record(r);

    if (r.contains("options")) {
      if (r["options"].is_string()) {
        s.options = parse_options_string(r["options"].get<std::string>());
      } else {
        // null marks an option without a numeric value
        for (const auto& o : r["options"]) s.options.push_back(o.is_null() ? std::nan("") : o.get<double>());
      }
    }
    if (r.contains("correct") && !r["correct"].is_null()) s.correct = option_index(r["correct"], s.options.size());
    if (r.contains("answer") && !r["answer"].is_null()) s.answer = r["answer"].get<double>();
    if (r.contains("tests")) {
      for (const auto& t : r["tests"]) {
        if (!t.contains("input")) throw SchemaError("missing field 'tests[].input'");
        if (!t.contains("output")) throw SchemaError("missing field 'tests[].output'");
        IoTest test;
        for (const auto& [name, v] : t["input"].items()) test.inputs[name] = algolisp::value_from_json(v);
        test.expected = algolisp::value_from_json(t["output"]);
        s.tests.push_back(std::move(test));
      }
    }

    if (dialect == Dialect::MathQA) {
      for (const auto& t : s.program) {
        for (const auto& a : t.args) {
          if (a.size() > 1 && a[0] == 'n' && std::all_of(a.begin() + 1, a.end(), ::isdigit) &&
              std::stoul(a.substr(1)) >= s.numbers.size()) {
            throw SchemaError("program uses " + a + " but the text has " + std::to_string(s.numbers.size()) +
                              " numbers");
          }
        }
      }
    }
    return s;
  } catch (const json::exception& e) {
    throw SchemaError(std::string("wrong field type: ") + e.what());
  }
}

std::vector<Sample> parse_dataset(std::string_view content, Dialect dialect, const std::string& source) {
  std::vector<Sample> samples;
  const auto first = content.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return samples;

  auto wrap = [&](std::size_t line, const std::string& what) { return source + ":" + std::to_string(line) + ": " + what; };

  if (content[first] == '[') {
    json array;
    try {
      array = json::parse(content);
    } catch (const json::parse_error& e) {
      throw InputError(wrap(1, std::string("malformed JSON: ") + e.what()));
    }
    for (std::size_t i = 0; i < array.size(); ++i) {
      try {
        samples.push_back(sample_from_json(array[i], dialect, i));
      } catch (const Error& e) {
        throw SchemaError(source + ": record " + std::to_string(i) + ": " + e.what());
      }
    }
    return samples;
  }

  std::size_t line_no = 0, pos = 0;
  while (pos <= content.size()) {
    auto end = content.find('\n', pos);
    if (end == std::string_view::npos) end = content.size();
    const std::string_view line = content.substr(pos, end - pos);
    ++line_no;
    pos = end + 1;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    json record;
    try {
      record = json::parse(line);
    } catch (const json::parse_error& e) {
      throw InputError(wrap(line_no, std::string("malformed record: ") + e.what()));
    }
    try {
      samples.push_back(sample_from_json(record, dialect, samples.size()));
    } catch (const ParseError& e) {
      throw InputError(wrap(line_no, e.what()));
    } catch (const SchemaError& e) {
      throw SchemaError(wrap(line_no, e.what()));
    } catch (const Error& e) {
      throw InputError(wrap(line_no, e.what()));
    }
  }
  return samples;
}

std::vector<Sample> load_dataset(const std::filesystem::path& path, Dialect dialect) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open dataset '" + path.string() + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_dataset(buffer.str(), dialect, path.string());
}

json sample_to_json(const Sample& s) {
  json j{{"id", s.id}, {"text", s.tokens}, {"program", format_program(s.program)}, {"numbers", s.numbers}};
  if (!s.options.empty()) j["options"] = s.options;
  if (s.correct) j["correct"] = *s.correct;
  if (s.answer) j["answer"] = *s.answer;
  if (!s.tests.empty()) {
    json tests = json::array();
    for (const auto& t : s.tests) {
      json input = json::object();
      for (const auto& [name, v] : t.inputs) input[name] = algolisp::value_to_json(v);
      tests.push_back({{"input", input}, {"output", algolisp::value_to_json(t.expected)}});
    }
    j["tests"] = std::move(tests);
  }
  return j;
}

void save_dataset(const std::filesystem::path& path, const std::vector<Sample>& samples) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write dataset '" + path.string() + "'");
  for (const auto& s : samples) out << sample_to_json(s).dump() << '\n';
  if (!out) throw IoError("failed writing dataset '" + path.string() + "'");
}

}  // namespace tpn2f
