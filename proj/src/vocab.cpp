#include "tpn2f/vocab.hpp"

#include <algorithm>

#include "tpn2f/dataset.hpp"
#include "tpn2f/error.hpp"

namespace tpn2f {

Vocabulary::Vocabulary(std::vector<std::string> symbols, std::optional<int> unknown)
    : symbols_(std::move(symbols)), unknown_(unknown) {
  for (std::size_t i = 0; i < symbols_.size(); ++i) {
    if (!index_.emplace(symbols_[i], static_cast<int>(i)).second) {
      throw VocabError("duplicate vocabulary symbol '" + symbols_[i] + "'");
    }
  }
  if (unknown_ && (*unknown_ < 0 || static_cast<std::size_t>(*unknown_) >= symbols_.size())) {
    throw VocabError("unknown-symbol id out of range");
  }
}

Vocabulary Vocabulary::build(std::span<const std::string> specials,
                             const std::unordered_map<std::string, std::size_t>& counts,
                             std::optional<int> unknown) {
  std::vector<std::pair<std::string, std::size_t>> entries;
  for (const auto& [symbol, count] : counts) {
    if (std::find(specials.begin(), specials.end(), symbol) == specials.end()) entries.emplace_back(symbol, count);
  }
  std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  std::vector<std::string> symbols(specials.begin(), specials.end());
  for (auto& e : entries) symbols.push_back(std::move(e.first));
  return Vocabulary(std::move(symbols), unknown);
}

int Vocabulary::id(const std::string& symbol) const {
  auto it = index_.find(symbol);
  if (it != index_.end()) return it->second;
  if (unknown_) return *unknown_;
  throw VocabError("symbol '" + symbol + "' is not in the vocabulary");
}

const std::string& Vocabulary::symbol(int id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= symbols_.size()) {
    throw VocabError("id " + std::to_string(id) + " outside vocabulary of size " + std::to_string(symbols_.size()));
  }
  return symbols_[static_cast<std::size_t>(id)];
}

nlohmann::json Vocabulary::to_json() const {
  nlohmann::json j{{"symbols", symbols_}};
  j["unknown"] = unknown_ ? nlohmann::json(*unknown_) : nlohmann::json(nullptr);
  return j;
}

Vocabulary Vocabulary::from_json(const nlohmann::json& j) {
  std::optional<int> unknown;
  if (!j.at("unknown").is_null()) unknown = j.at("unknown").get<int>();
  return Vocabulary(j.at("symbols").get<std::vector<std::string>>(), unknown);
}

nlohmann::json Vocabularies::to_json() const {
  return {{"tokens", tokens.to_json()}, {"relations", relations.to_json()}, {"arguments", arguments.to_json()}};
}

Vocabularies Vocabularies::from_json(const nlohmann::json& j) {
  return {Vocabulary::from_json(j.at("tokens")), Vocabulary::from_json(j.at("relations")),
          Vocabulary::from_json(j.at("arguments"))};
}

Vocabularies build_vocabularies(std::span<const Sample> samples) {
  if (samples.empty()) throw InputError("cannot build vocabularies from an empty corpus");
  std::unordered_map<std::string, std::size_t> tokens, relations, arguments;
  for (const auto& s : samples) {
    for (const auto& t : s.tokens) ++tokens[t];
    for (const auto& tuple : s.program) {
      ++relations[tuple.relation];
      for (const auto& a : tuple.args) ++arguments[a];
    }
  }
  const std::vector<std::string> token_specials{"PAD", "UNK"};
  const std::vector<std::string> relation_specials{"GO", "EOS"};
  const std::vector<std::string> argument_specials{std::string(kPadSymbol), "UNK"};
  return {Vocabulary::build(token_specials, tokens, kTokenUnk),
          Vocabulary::build(relation_specials, relations, std::nullopt),
          Vocabulary::build(argument_specials, arguments, kArgumentUnk)};
}

}  // namespace tpn2f
