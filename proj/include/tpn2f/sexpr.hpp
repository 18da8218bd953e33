#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "tpn2f/tuple.hpp"

namespace tpn2f {

/// Atom or list node of an s-expression program tree.
struct Sexpr {
  std::string atom;            // set for atoms
  std::vector<Sexpr> items;    // set for lists
  bool is_list = false;

  static Sexpr make_atom(std::string s);
  static Sexpr make_list(std::vector<Sexpr> items);

  bool operator==(const Sexpr&) const = default;
  std::string str() const;  // "(map a (partial1 b --))"
  std::size_t depth() const;
};

/// Parses exactly one s-expression. Throws ParseError with an offset.
Sexpr parse_sexpr(std::string_view text);

/// Post-order flattening: every list becomes one tuple whose list-valued
/// children are replaced by #i references, numbered left to right. The tree
/// must be a list whose first item is an atom, recursively.
Program flatten_program_tree(const Sexpr& tree);
Program flatten_program_tree(std::string_view text);

/// Inverse of flatten: expands #i references from the last tuple. PAD
/// arguments are dropped.
Sexpr rebuild_program_tree(const Program& program);

}  // namespace tpn2f
