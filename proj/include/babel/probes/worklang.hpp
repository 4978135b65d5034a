// Working-language detection: which language's identifier tokens show up
// in intermediate-layer lens predictions while generating one language.
#pragma once

#include "babel/model/decode.hpp"
#include "babel/probes/logit_lens.hpp"
#include "babel/toylang/generate.hpp"
#include "babel/toylang/text.hpp"

namespace babel::probes {

struct IdentifierEntry {
  std::string elicit_language;                  // language being generated
  std::string identifier;                       // surface in elicit language
  std::map<std::string, std::string> equivalents;  // language -> surface
};

struct IdentifierTable {
  std::vector<IdentifierEntry> entries;

  nlohmann::ordered_json to_json() const {
    auto arr = nlohmann::ordered_json::array();
    for (const auto& e : entries)
      arr.push_back({{"elicit_language", e.elicit_language},
                     {"identifier", e.identifier},
                     {"equivalents", e.equivalents}});
    return arr;
  }

  static IdentifierTable from_json(const nlohmann::json& j) {
    IdentifierTable t;
    for (const auto& ej : j) {
      IdentifierEntry e;
      e.elicit_language = ej.at("elicit_language");
      e.identifier = ej.at("identifier");
      e.equivalents =
          ej.at("equivalents").get<std::map<std::string, std::string>>();
      t.entries.push_back(std::move(e));
    }
    return t;
  }

  void save(const std::string& path) const {
    std::ofstream f(path);
    if (!f) throw Error("cannot write identifier table: " + path);
    f << to_json().dump(2) << "\n";
  }

  static IdentifierTable load(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw Error("cannot read identifier table: " + path);
    nlohmann::json j;
    f >> j;
    return from_json(j);
  }

  // Ops whose surfaces are pairwise distinct across all languages become
  // identifier entries for the elicit language.
  static IdentifierTable build(const std::vector<toylang::LanguageSpec>& specs,
                               const std::string& elicit_language,
                               int min_entries = 5) {
    IdentifierTable t;
    for (const auto& i : toylang::op_table()) {
      std::set<std::string> surfaces;
      for (const auto& s : specs) surfaces.insert(s.keyword(i.op));
      if (surfaces.size() != specs.size()) continue;  // shared surface
      IdentifierEntry e;
      e.elicit_language = elicit_language;
      for (const auto& s : specs) {
        e.equivalents[s.id] = s.keyword(i.op);
        if (s.id == elicit_language) e.identifier = s.keyword(i.op);
      }
      if (e.identifier.empty())
        throw Error("identifier table: elicit language not in specs");
      t.entries.push_back(std::move(e));
    }
    if ((int)t.entries.size() < min_entries)
      throw Error("identifier table: fewer than " +
                  std::to_string(min_entries) + " identifiers");
    return t;
  }

  void validate(const Vocabulary& vocab) const {
    for (const auto& e : entries) {
      std::set<TokenId> ids;
      for (const auto& [lang, kw] : e.equivalents) {
        if (!vocab.contains(kw))
          throw Error("identifier table: '" + kw + "' not in vocabulary");
        if (!ids.insert(vocab.id(kw)).second)
          throw Error("identifier table: equivalents share a token id");
      }
    }
  }

  // token id -> language, over every entry's equivalents
  std::map<TokenId, std::string> attribution_map(const Vocabulary& v) const {
    std::map<TokenId, std::string> m;
    for (const auto& e : entries)
      for (const auto& [lang, kw] : e.equivalents) m[v.id(kw)] = lang;
    return m;
  }

  std::set<TokenId> target_tokens(const Vocabulary& v) const {
    std::set<TokenId> s;
    for (const auto& e : entries) s.insert(v.id(e.identifier));
    return s;
  }
};

struct WorkLangReport {
  std::vector<std::string> languages;
  std::map<std::string, std::int64_t> counts;       // epsilon_i
  std::map<std::string, double> proportions;        // R_i
  bool defined = false;                             // sum epsilon > 0
  int excluded_top_layers = 0;
  int probed_layers = 0;
  std::int64_t probed_steps = 0;  // decode steps that hit a target identifier
  // layer -> language -> count
  std::map<int, std::map<std::string, std::int64_t>> per_layer;

  void finalize() {
    std::int64_t total = 0;
    for (const auto& [lang, c] : counts) total += c;
    defined = total > 0;
    for (const auto& lang : languages)
      proportions[lang] = defined ? (double)counts[lang] / total : 0.0;
  }

  double proportion(const std::string& lang) const {
    auto it = proportions.find(lang);
    if (it == proportions.end()) throw Error("worklang: unknown language " + lang);
    if (!defined) throw Error("worklang: proportions undefined (no attributed tokens)");
    return it->second;
  }

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    j["schema_version"] = 1;
    j["languages"] = languages;
    j["counts"] = counts;
    j["proportions"] = proportions;
    j["defined"] = defined;
    j["excluded_top_layers"] = excluded_top_layers;
    j["probed_layers"] = probed_layers;
    j["probed_steps"] = probed_steps;
    nlohmann::ordered_json pl;
    for (const auto& [layer, m] : per_layer) pl[std::to_string(layer)] = m;
    j["per_layer"] = pl;
    return j;
  }

  static WorkLangReport from_json(const nlohmann::json& j) {
    WorkLangReport r;
    r.languages = j.at("languages").get<std::vector<std::string>>();
    r.counts = j.at("counts").get<std::map<std::string, std::int64_t>>();
    r.proportions = j.at("proportions").get<std::map<std::string, double>>();
    r.defined = j.at("defined");
    r.excluded_top_layers = j.at("excluded_top_layers");
    r.probed_layers = j.at("probed_layers");
    r.probed_steps = j.at("probed_steps");
    for (auto it = j.at("per_layer").begin(); it != j.at("per_layer").end(); ++it)
      r.per_layer[std::stoi(it.key())] =
          it.value().get<std::map<std::string, std::int64_t>>();
    return r;
  }
};

inline int default_exclude_top_k(int n_layers) {
  int k = (int)std::lround(n_layers * 5.0 / 24.0);
  return std::max(1, k);
}

// Decode greedily from each prompt; whenever the final output token is a
// target identifier, attribute the lens argmax of every probed
// intermediate layer. Unattributable tokens are dropped.
// Decoding is ancestral sampling (seeded): probed steps are exactly the
// decode steps whose sampled output token is a target identifier, and at
// ambiguous positions greedy argmax would almost never emit a keyword.
inline WorkLangReport worklang_proportion(
    const model::Checkpoint& ckpt,
    const std::vector<std::vector<TokenId>>& probe_prompts,
    const IdentifierTable& table, const Vocabulary& vocab, int exclude_top_k,
    std::uint64_t seed, int max_new = 8) {
  int L = ckpt.config.n_layers;
  if (exclude_top_k < 0 || exclude_top_k >= L)
    throw Error("worklang: exclude_top_k out of range");
  table.validate(vocab);

  WorkLangReport rep;
  {
    std::set<std::string> langs;
    for (const auto& e : table.entries)
      for (const auto& [lang, kw] : e.equivalents) langs.insert(lang);
    rep.languages.assign(langs.begin(), langs.end());
    for (const auto& l : rep.languages) rep.counts[l] = 0;
  }
  rep.excluded_top_layers = exclude_top_k;
  rep.probed_layers = L - exclude_top_k;

  auto attribution = table.attribution_map(vocab);
  auto targets = table.target_tokens(vocab);

  model::DecodeHooks hooks;
  hooks.flags.residuals = true;
  hooks.on_token = [&](const model::ForwardResult& out, int pos,
                       TokenId emitted) {
    if (!targets.count(emitted)) return;
    ++rep.probed_steps;
    for (int layer = 0; layer < L - exclude_top_k; ++layer) {
      TokenId lt = logit_lens(ckpt, out.capture, layer, pos);
      auto it = attribution.find(lt);
      if (it == attribution.end()) continue;
      ++rep.counts[it->second];
      ++rep.per_layer[layer + 1][it->second];  // 1-based for reporting
    }
  };
  Rng rng = make_rng(derive_seed(seed, fnv1a64("worklang-decode")));
  for (const auto& prompt : probe_prompts)
    model::sample_decode(ckpt, prompt, max_new, vocab.eos(), rng,
                         vocab.id(";"), hooks);
  rep.finalize();
  return rep;
}

// Prompts that set up an occurrence of each identifier: programs containing
// the identifier's op, truncated right before the keyword. At least
// `per_identifier` prompts per table entry.
inline std::vector<std::vector<TokenId>> make_probe_prompts(
    const toylang::LanguageSpec& lang, const IdentifierTable& table,
    const Vocabulary& vocab, std::uint64_t seed, int per_identifier = 10,
    const toylang::GeneratorConfig& gen = toylang::GeneratorConfig{},
    int max_prompt_tokens = 24) {
  using namespace toylang;
  std::vector<std::vector<TokenId>> prompts;
  Rng rng = make_rng(derive_seed(seed, fnv1a64("probe:" + lang.id)));
  auto kws = lang.reverse_map();
  for (const auto& e : table.entries) {
    if (e.elicit_language != lang.id)
      throw Error("make_probe_prompts: table elicits a different language");
    auto it = kws.find(e.identifier);
    if (it == kws.end())
      throw Error("make_probe_prompts: identifier not in language");
    Op op = it->second;
    int made = 0;
    for (int attempt = 0; made < per_identifier; ++attempt) {
      if (attempt > 20000)
        throw Error("make_probe_prompts: cannot elicit " + e.identifier);
      Document d = sample_document(rng, gen, lang.id);
      std::set<Op> used;
      collect_ops(d.expr, used);
      if (!used.count(op)) continue;
      Tokens toks = render_document(d.expr, d.value, lang);
      // truncate before the first occurrence past position 1
      std::size_t cut = 0;
      for (std::size_t i = 2; i < toks.size(); ++i)
        if (toks[i] == e.identifier) {
          cut = i;
          break;
        }
      if (cut == 0 || (int)cut > max_prompt_tokens) continue;
      Tokens prefix(toks.begin(), toks.begin() + (std::ptrdiff_t)cut);
      prompts.push_back(to_ids(prefix, vocab));
      ++made;
    }
  }
  return prompts;
}

}  // namespace babel::probes
