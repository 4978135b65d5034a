// Multi-language token mixtures with deterministic interleaving.
#pragma once

#include <cstdint>
#include <map>
#include <numeric>

#include "babel/toylang/generate.hpp"

namespace babel::toylang {

struct MixtureSpec {
  std::map<std::string, std::uint64_t> entries;  // language -> token count
  std::string schedule = "block-shuffle";

  std::uint64_t total() const {
    std::uint64_t s = 0;
    for (const auto& [k, v] : entries) s += v;
    return s;
  }

  void validate() const {
    if (total() == 0) throw Error("mixture spec: all token counts are zero");
  }

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    j["entries"] = entries;
    j["schedule"] = schedule;
    return j;
  }

  static MixtureSpec from_json(const nlohmann::json& j) {
    MixtureSpec m;
    m.entries = j.at("entries").get<std::map<std::string, std::uint64_t>>();
    m.schedule = j.value("schedule", "block-shuffle");
    m.validate();
    return m;
  }
};

// A mixed training stream that remembers which language each token
// came from, so trained-token counts stay exact.
struct MixedStream {
  std::vector<TokenId> tokens;
  std::vector<std::uint8_t> lang;  // index into lang_names, parallel to tokens
  std::vector<std::string> lang_names;

  std::size_t size() const { return tokens.size(); }
};

// Interleaves per-language streams as shuffled fixed-size blocks.
// Deterministic given (streams, seed).
inline MixedStream mix_streams(
    const std::map<std::string, std::vector<TokenId>>& streams,
    std::uint64_t seed, std::size_t block_size = 256) {
  if (streams.empty()) throw Error("mix_streams: no streams");
  MixedStream out;
  struct Block {
    std::uint8_t lang;
    std::size_t begin, end;
  };
  std::vector<Block> blocks;
  std::vector<const std::vector<TokenId>*> srcs;
  for (const auto& [name, toks] : streams) {
    std::uint8_t li = (std::uint8_t)out.lang_names.size();
    out.lang_names.push_back(name);
    srcs.push_back(&toks);
    for (std::size_t b = 0; b < toks.size(); b += block_size)
      blocks.push_back({li, b, std::min(b + block_size, toks.size())});
  }
  if (blocks.empty()) throw Error("mix_streams: empty streams");
  Rng rng = make_rng(derive_seed(seed, 0x6d6978ull));
  std::shuffle(blocks.begin(), blocks.end(), rng);
  for (const auto& bl : blocks) {
    const auto& src = *srcs[bl.lang];
    for (std::size_t i = bl.begin; i < bl.end; ++i) {
      out.tokens.push_back(src[i]);
      out.lang.push_back(bl.lang);
    }
  }
  return out;
}

inline MixedStream single_stream(const std::string& lang,
                                 std::vector<TokenId> tokens) {
  MixedStream s;
  s.lang_names = {lang};
  s.lang.assign(tokens.size(), 0);
  s.tokens = std::move(tokens);
  return s;
}

}  // namespace babel::toylang
