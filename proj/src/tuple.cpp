#include "tpn2f/tuple.hpp"

#include <cctype>
#include <charconv>

#include "tpn2f/error.hpp"

namespace tpn2f {

std::vector<std::string> RelationalTuple::live_args() const {
  std::vector<std::string> out;
  for (const auto& a : args)
    if (a != kPadSymbol) out.push_back(a);
  return out;
}

std::string RelationalTuple::str() const {
  std::string out = "(" + relation;
  for (const auto& a : args) out += "," + a;
  return out + ")";
}

namespace {

bool is_separator(char c) { return c == ',' || std::isspace(static_cast<unsigned char>(c)); }

}  // namespace

Program parse_tuple_sequence(std::string_view text) {
  Program program;
  std::size_t pos = 0;
  auto skip_space = [&] {
    while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
  };
  while (true) {
    skip_space();
    if (pos == text.size()) break;
    if (text[pos] != '(') throw ParseError("expected '(' ", pos);
    const std::size_t open = pos++;
    std::vector<std::string> symbols;
    while (true) {
      while (pos < text.size() && is_separator(text[pos])) ++pos;
      if (pos == text.size()) throw ParseError("unterminated tuple opened at offset " + std::to_string(open), pos);
      if (text[pos] == ')') {
        ++pos;
        break;
      }
      if (text[pos] == '(') throw ParseError("nested '(' inside a tuple", pos);
      const std::size_t start = pos;
      while (pos < text.size() && !is_separator(text[pos]) && text[pos] != '(' && text[pos] != ')') ++pos;
      symbols.emplace_back(text.substr(start, pos - start));
    }
    if (symbols.empty()) throw ParseError("empty tuple", open);
    if (symbols.size() < 2) throw ParseError("tuple '" + symbols[0] + "' has no arguments", open);
    if (symbols.size() > 4) {
      throw ParseError("tuple has " + std::to_string(symbols.size() - 1) + " arguments, at most 3 allowed", open);
    }
    RelationalTuple t;
    t.relation = symbols[0];
    t.args.assign(symbols.begin() + 1, symbols.end());
    if (t.args.size() == 1) t.args.emplace_back(kPadSymbol);
    program.push_back(std::move(t));
  }
  return program;
}

std::string format_program(const Program& program) {
  std::string out;
  for (const auto& t : program) {
    if (!out.empty()) out += ' ';
    out += t.str();
  }
  return out;
}

long result_index(std::string_view symbol) {
  if (symbol.size() < 2 || symbol[0] != '#') return -1;
  long value = 0;
  auto [ptr, ec] = std::from_chars(symbol.data() + 1, symbol.data() + symbol.size(), value);
  if (ec != std::errc() || ptr != symbol.data() + symbol.size() || value < 0) return -1;
  return value;
}

}  // namespace tpn2f
