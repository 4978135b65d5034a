// Seeded program sampling and corpus materialization.
#pragma once

#include <cstdio>
#include <fstream>
#include <optional>

#include "babel/toylang/text.hpp"

namespace babel::toylang {

struct GeneratorConfig {
  int max_depth = 5;
  double grow_prob = 0.45;       // chance an int slot becomes a call
  double list_root_prob = 0.2;   // chance a document's root is list-typed
  double range_prob = 0.25;      // chance a list slot is RANGE(...) when allowed
  int max_list_len = (int)kMaxListLen;
  ExclusivityPolicy exclusivity;
};

namespace detail {

inline ExprPtr sample_int_expr(Rng& rng, const GeneratorConfig& cfg,
                               const std::string& lang, int depth);

inline ExprPtr sample_list_expr(Rng& rng, const GeneratorConfig& cfg,
                                const std::string& lang, int depth) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  if (depth > 0 && cfg.exclusivity.allowed(Op::Range, lang) &&
      u(rng) < cfg.range_prob) {
    return Expr::call(Op::Range, {sample_int_expr(rng, cfg, lang, depth - 1)});
  }
  std::uniform_int_distribution<int> len(0, cfg.max_list_len);
  int n = len(rng);
  std::vector<ExprPtr> elems;
  elems.reserve((std::size_t)n);
  for (int i = 0; i < n; ++i) {
    // list elements stay shallow so documents don't blow up
    elems.push_back(sample_int_expr(rng, cfg, lang, std::min(depth, 1)));
  }
  return Expr::list_lit(std::move(elems));
}

inline ExprPtr sample_int_expr(Rng& rng, const GeneratorConfig& cfg,
                               const std::string& lang, int depth) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  if (depth <= 0 || u(rng) >= cfg.grow_prob) {
    std::uniform_int_distribution<std::int64_t> lit(0, kModulus - 1);
    return Expr::int_lit(lit(rng));
  }
  std::vector<Op> candidates;
  for (const auto& i : op_table())
    if (i.ret == Ty::Int && cfg.exclusivity.allowed(i.op, lang))
      candidates.push_back(i.op);
  std::uniform_int_distribution<std::size_t> pick(0, candidates.size() - 1);
  Op op = candidates[pick(rng)];
  const OpInfo& info = op_info(op);
  std::vector<ExprPtr> args;
  for (Ty t : info.args)
    args.push_back(t == Ty::Int
                       ? sample_int_expr(rng, cfg, lang, depth - 1)
                       : sample_list_expr(rng, cfg, lang, depth - 1));
  return Expr::call(op, std::move(args));
}

}  // namespace detail

// A program together with its interpreted value; resamples until the
// interpreter accepts (e.g. avoids HEAD of an empty list).
inline Document sample_document(Rng& rng, const GeneratorConfig& cfg,
                                const std::string& lang) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int attempt = 0; attempt < 1000; ++attempt) {
    ExprPtr e = u(rng) < cfg.list_root_prob
                    ? detail::sample_list_expr(rng, cfg, lang, cfg.max_depth)
                    : detail::sample_int_expr(rng, cfg, lang, cfg.max_depth);
    try {
      Value v = interpret(e);
      return Document{e, v};
    } catch (const EvalError&) {
      continue;
    }
  }
  throw Error("sample_document: could not sample an interpretable program");
}

struct Corpus {
  std::string language;
  std::uint64_t seed = 0;
  std::uint32_t vocab_hash = 0;
  std::vector<TokenId> tokens;

  std::size_t token_count() const { return tokens.size(); }
};

// Streams whole documents until the budget is reached; total size is
// within one document of the budget.
inline Corpus generate_corpus(const LanguageSpec& spec, const Vocabulary& vocab,
                              std::uint64_t seed, std::size_t token_budget,
                              const GeneratorConfig& cfg = GeneratorConfig{}) {
  if (token_budget < 1000)
    throw Error("generate_corpus: token budget below 1000");
  Corpus c;
  c.language = spec.id;
  c.seed = seed;
  c.vocab_hash = vocab.hash32();
  c.tokens.reserve(token_budget + 64);
  Rng rng = make_rng(derive_seed(seed, fnv1a64(spec.id)));
  while (c.tokens.size() < token_budget) {
    Document d = sample_document(rng, cfg, spec.id);
    Tokens toks = render_document(d.expr, d.value, spec);
    for (const auto& t : toks) c.tokens.push_back(vocab.id(t));
  }
  return c;
}

// Binary corpus file: 16-byte header (magic, version, vocab hash, count),
// then little-endian 32-bit token ids.
constexpr std::uint32_t kCorpusMagic = 0x42544331;  // "BTC1"
constexpr std::uint32_t kCorpusVersion = 1;

namespace detail {
inline void put_u32(std::ostream& os, std::uint32_t v) {
  unsigned char b[4] = {(unsigned char)(v), (unsigned char)(v >> 8),
                        (unsigned char)(v >> 16), (unsigned char)(v >> 24)};
  os.write((const char*)b, 4);
}
inline std::uint32_t get_u32(std::istream& is) {
  unsigned char b[4];
  is.read((char*)b, 4);
  if (!is) throw Error("corpus file: truncated");
  return (std::uint32_t)b[0] | ((std::uint32_t)b[1] << 8) |
         ((std::uint32_t)b[2] << 16) | ((std::uint32_t)b[3] << 24);
}
}  // namespace detail

inline void save_corpus(const Corpus& c, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot write corpus: " + path);
  detail::put_u32(f, kCorpusMagic);
  detail::put_u32(f, kCorpusVersion);
  detail::put_u32(f, c.vocab_hash);
  detail::put_u32(f, (std::uint32_t)c.tokens.size());
  for (TokenId t : c.tokens) detail::put_u32(f, (std::uint32_t)t);
}

inline std::vector<TokenId> load_corpus_tokens(const std::string& path,
                                               const Vocabulary& vocab) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error("cannot read corpus: " + path);
  if (detail::get_u32(f) != kCorpusMagic) throw Error("corpus file: bad magic");
  if (detail::get_u32(f) != kCorpusVersion)
    throw Error("corpus file: bad version");
  std::uint32_t vh = detail::get_u32(f);
  if (vh != vocab.hash32()) throw Error("corpus file: vocabulary mismatch");
  std::uint32_t n = detail::get_u32(f);
  std::vector<TokenId> toks;
  toks.reserve(n);
  for (std::uint32_t i = 0; i < n; ++i)
    toks.push_back((TokenId)detail::get_u32(f));
  return toks;
}

}  // namespace babel::toylang
