// Closed word-level vocabulary shared across languages.
#pragma once

#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "babel/common.hpp"

namespace babel {

using TokenId = std::int32_t;

class Vocabulary {
 public:
  static constexpr const char* kBos = "<bos>";
  static constexpr const char* kEos = "<eos>";
  static constexpr const char* kPad = "<pad>";

  Vocabulary() {
    add(kPad);
    add(kBos);
    add(kEos);
  }

  TokenId add(const std::string& tok) {
    auto it = ids_.find(tok);
    if (it != ids_.end()) return it->second;
    TokenId id = (TokenId)tokens_.size();
    tokens_.push_back(tok);
    ids_.emplace(tok, id);
    return id;
  }

  bool contains(const std::string& tok) const { return ids_.count(tok) > 0; }

  TokenId id(const std::string& tok) const {
    auto it = ids_.find(tok);
    if (it == ids_.end()) throw Error("vocabulary: unknown token '" + tok + "'");
    return it->second;
  }

  const std::string& token(TokenId id) const {
    if (id < 0 || id >= (TokenId)tokens_.size())
      throw Error("vocabulary: token id out of range");
    return tokens_[(std::size_t)id];
  }

  int size() const { return (int)tokens_.size(); }
  TokenId bos() const { return id(kBos); }
  TokenId eos() const { return id(kEos); }
  TokenId pad() const { return id(kPad); }

  // Stable content hash over the ordered token list.
  std::uint32_t hash32() const {
    std::string joined;
    for (const auto& t : tokens_) {
      joined += t;
      joined.push_back('\n');
    }
    return (std::uint32_t)(fnv1a64(joined) & 0xffffffffu);
  }

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    for (TokenId i = 0; i < (TokenId)tokens_.size(); ++i)
      j[tokens_[(std::size_t)i]] = i;
    return j;
  }

  static Vocabulary from_json(const nlohmann::json& j) {
    std::map<TokenId, std::string> by_id;
    for (auto it = j.begin(); it != j.end(); ++it)
      by_id[it.value().get<TokenId>()] = it.key();
    Vocabulary v;
    v.tokens_.clear();
    v.ids_.clear();
    TokenId expect = 0;
    for (auto& [id, tok] : by_id) {
      if (id != expect++) throw Error("vocabulary json: ids not contiguous");
      v.tokens_.push_back(tok);
      v.ids_.emplace(tok, id);
    }
    if (!v.contains(kBos) || !v.contains(kEos) || !v.contains(kPad))
      throw Error("vocabulary json: missing special tokens");
    return v;
  }

  void save(const std::string& path) const {
    std::ofstream f(path);
    if (!f) throw Error("cannot write vocabulary: " + path);
    f << to_json().dump(2) << "\n";
  }

  static Vocabulary load(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw Error("cannot read vocabulary: " + path);
    nlohmann::json j;
    f >> j;
    return from_json(j);
  }

 private:
  std::vector<std::string> tokens_;
  std::map<std::string, TokenId> ids_;
};

}  // namespace babel
