#include "tpn2f/sexpr.hpp"

#include <algorithm>
#include <cctype>

#include "tpn2f/error.hpp"

namespace tpn2f {

Sexpr Sexpr::make_atom(std::string s) {
  Sexpr e;
  e.atom = std::move(s);
  return e;
}

Sexpr Sexpr::make_list(std::vector<Sexpr> items) {
  Sexpr e;
  e.items = std::move(items);
  e.is_list = true;
  return e;
}

std::string Sexpr::str() const {
  if (!is_list) return atom;
  std::string out = "(";
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += ' ';
    out += items[i].str();
  }
  return out + ")";
}

std::size_t Sexpr::depth() const {
  if (!is_list) return 0;
  std::size_t d = 0;
  for (const auto& c : items) d = std::max(d, c.depth());
  return d + 1;
}

namespace {

class SexprParser {
 public:
  explicit SexprParser(std::string_view text) : text_(text) {}

  Sexpr parse_all() {
    skip();
    if (pos_ == text_.size()) throw ParseError("empty s-expression", pos_);
    Sexpr e = parse();
    skip();
    if (pos_ != text_.size()) throw ParseError("trailing input after s-expression", pos_);
    return e;
  }

 private:
  void skip() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  Sexpr parse() {
    skip();
    if (pos_ == text_.size()) throw ParseError("unexpected end of input", pos_);
    if (text_[pos_] == ')') throw ParseError("unexpected ')'", pos_);
    if (text_[pos_] == '(') {
      const std::size_t open = pos_++;
      std::vector<Sexpr> items;
      while (true) {
        skip();
        if (pos_ == text_.size()) throw ParseError("unbalanced '(' at offset " + std::to_string(open), pos_);
        if (text_[pos_] == ')') {
          ++pos_;
          return Sexpr::make_list(std::move(items));
        }
        items.push_back(parse());
      }
    }
    const std::size_t start = pos_;
    while (pos_ < text_.size() && !std::isspace(static_cast<unsigned char>(text_[pos_])) &&
           text_[pos_] != '(' && text_[pos_] != ')')
      ++pos_;
    return Sexpr::make_atom(std::string(text_.substr(start, pos_ - start)));
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

void flatten_into(const Sexpr& node, Program& out, std::vector<std::string>& ref) {
  if (node.items.empty()) throw ParseError("empty application '()'", 0);
  if (node.items[0].is_list) throw ParseError("application head must be an atom: " + node.str(), 0);
  RelationalTuple t;
  t.relation = node.items[0].atom;
  for (std::size_t i = 1; i < node.items.size(); ++i) {
    const Sexpr& child = node.items[i];
    if (child.is_list) {
      flatten_into(child, out, ref);
      t.args.push_back(ref.back());
      ref.pop_back();
    } else {
      t.args.push_back(child.atom);
    }
  }
  ref.push_back("#" + std::to_string(out.size()));
  out.push_back(std::move(t));
}

Sexpr rebuild_step(const Program& program, std::size_t index, std::size_t depth) {
  if (depth > program.size()) throw ConsistencyError("cyclic #i references in program");
  const RelationalTuple& t = program[index];
  std::vector<Sexpr> items{Sexpr::make_atom(t.relation)};
  for (const auto& a : t.args) {
    if (a == kPadSymbol) continue;
    const long r = result_index(a);
    if (r >= 0) {
      if (static_cast<std::size_t>(r) >= index) {
        throw ConsistencyError("step " + std::to_string(index) + " references " + a);
      }
      items.push_back(rebuild_step(program, static_cast<std::size_t>(r), depth + 1));
    } else {
      items.push_back(Sexpr::make_atom(a));
    }
  }
  return Sexpr::make_list(std::move(items));
}

}  // namespace

Sexpr parse_sexpr(std::string_view text) { return SexprParser(text).parse_all(); }

Program flatten_program_tree(const Sexpr& tree) {
  if (!tree.is_list) {
    throw ParseError("program must have at least one application, got atom '" + tree.atom + "'", 0);
  }
  Program out;
  std::vector<std::string> ref;
  flatten_into(tree, out, ref);
  return out;
}

Program flatten_program_tree(std::string_view text) { return flatten_program_tree(parse_sexpr(text)); }

Sexpr rebuild_program_tree(const Program& program) {
  if (program.empty()) throw ConsistencyError("cannot rebuild an empty program");
  return rebuild_step(program, program.size() - 1, 0);
}

}  // namespace tpn2f
