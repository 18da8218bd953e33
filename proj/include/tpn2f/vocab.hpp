#pragma once

#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "json.hpp"
#include "tpn2f/tuple.hpp"

namespace tpn2f {

inline constexpr int kTokenPad = 0;
inline constexpr int kTokenUnk = 1;
inline constexpr int kRelationGo = 0;
inline constexpr int kRelationEos = 1;
inline constexpr int kArgumentPad = 0;
inline constexpr int kArgumentUnk = 1;

/// Symbol <-> id table. When `unknown` is set, lookups of unseen symbols map
/// to it; otherwise they throw VocabError.
class Vocabulary {
 public:
  Vocabulary() = default;
  Vocabulary(std::vector<std::string> symbols, std::optional<int> unknown);

  /// Specials first, then symbols by descending count, ties lexicographic.
  static Vocabulary build(std::span<const std::string> specials,
                          const std::unordered_map<std::string, std::size_t>& counts,
                          std::optional<int> unknown);

  int id(const std::string& symbol) const;
  bool contains(const std::string& symbol) const { return index_.count(symbol) > 0; }
  const std::string& symbol(int id) const;
  std::size_t size() const { return symbols_.size(); }
  const std::vector<std::string>& symbols() const { return symbols_; }

  nlohmann::json to_json() const;
  static Vocabulary from_json(const nlohmann::json& j);

  bool operator==(const Vocabulary& other) const {
    return symbols_ == other.symbols_ && unknown_ == other.unknown_;
  }

 private:
  std::vector<std::string> symbols_;
  std::unordered_map<std::string, int> index_;
  std::optional<int> unknown_;
};

struct Vocabularies {
  Vocabulary tokens;     // PAD, UNK, ...
  Vocabulary relations;  // GO, EOS, ...
  Vocabulary arguments;  // PAD, UNK, ...

  nlohmann::json to_json() const;
  static Vocabularies from_json(const nlohmann::json& j);
};

struct Sample;

/// Throws InputError on an empty corpus.
Vocabularies build_vocabularies(std::span<const Sample> samples);

}  // namespace tpn2f
