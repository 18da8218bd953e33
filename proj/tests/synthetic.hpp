#pragma once

// Small text -> program corpus built from copy and arithmetic templates.
// Every text maps to exactly one program, so a correct model can fit it.

#include <set>
#include <string>
#include <vector>

#include "tpn2f/dataset.hpp"
#include "tpn2f/model.hpp"
#include "tpn2f/preprocess.hpp"
#include "tpn2f/random.hpp"
#include "tpn2f/tuple.hpp"

namespace testing_data {

inline std::vector<tpn2f::Sample> micro_dataset(std::size_t count = 50, std::uint64_t seed = 3) {
  using tpn2f::parse_tuple_sequence;
  tpn2f::Rng rng(seed);
  std::vector<tpn2f::Sample> out;
  std::set<std::string> seen;
  auto n = [](std::size_t i) { return "n" + std::to_string(i); };
  std::size_t attempts = 0;
  while (out.size() < count) {
    if (++attempts > 100000) throw std::runtime_error("micro_dataset: template space exhausted");
    const std::size_t i = rng.index(4), j = rng.index(4), k = rng.index(4);
    std::string text, program;
    switch (rng.index(8)) {
      case 0:
        text = "add " + n(i) + " and " + n(j);
        program = "(add," + n(i) + "," + n(j) + ")";
        break;
      case 1:
        text = "subtract " + n(j) + " from " + n(i);
        program = "(subtract," + n(i) + "," + n(j) + ")";
        break;
      case 2:
        text = "multiply " + n(i) + " by " + n(j);
        program = "(multiply," + n(i) + "," + n(j) + ")";
        break;
      case 3:
        text = "divide " + n(i) + " by " + n(j);
        program = "(divide," + n(i) + "," + n(j) + ")";
        break;
      case 4:
        text = "copy " + n(i);
        program = "(copy," + n(i) + ")";
        break;
      case 5:
        text = "square root of " + n(i);
        program = "(sqrt," + n(i) + ")";
        break;
      case 6:
        text = "add " + n(i) + " and " + n(j) + " then multiply by " + n(k);
        program = "(add," + n(i) + "," + n(j) + ") (multiply,#0," + n(k) + ")";
        break;
      default:
        text = "copy " + n(i) + " then divide it by " + n(j);
        program = "(copy," + n(i) + ") (divide,#0," + n(j) + ")";
        break;
    }
    if (!seen.insert(text).second) continue;
    tpn2f::Sample s;
    s.id = std::to_string(out.size());
    s.tokens = tpn2f::split_whitespace(text);
    s.program = tpn2f::pad_arguments(parse_tuple_sequence(program), 2);
    s.numbers = {2, 3, 5, 7};
    out.push_back(std::move(s));
  }
  return out;
}

/// Reduced dimensions used for fast training checks.
inline tpn2f::ModelDims micro_dims() {
  tpn2f::ModelDims d;
  d.filler_dim = 10;
  d.role_dim = 8;
  d.rel_dim = 8;
  d.arg_dim = 6;
  d.pos_dim = 5;
  return d;
}

}  // namespace testing_data
