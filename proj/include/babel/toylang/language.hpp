// Synthetic language family: shared semantics, per-language surface keywords.
#pragma once

#include <array>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "babel/common.hpp"
#include "babel/vocab.hpp"

namespace babel::toylang {

enum class Op {
  Add, Sub, Mul, Neg,
  Len, Sum, Max, Min, Head, Last,
  Range, IfPos,
};

constexpr int kNumOps = 12;

enum class Ty { Int, List };

struct OpInfo {
  Op op;
  const char* name;  // abstract name, language independent
  Ty ret;
  std::vector<Ty> args;
};

inline const std::vector<OpInfo>& op_table() {
  static const std::vector<OpInfo> t = {
      {Op::Add, "ADD", Ty::Int, {Ty::Int, Ty::Int}},
      {Op::Sub, "SUB", Ty::Int, {Ty::Int, Ty::Int}},
      {Op::Mul, "MUL", Ty::Int, {Ty::Int, Ty::Int}},
      {Op::Neg, "NEG", Ty::Int, {Ty::Int}},
      {Op::Len, "LEN", Ty::Int, {Ty::List}},
      {Op::Sum, "SUM", Ty::Int, {Ty::List}},
      {Op::Max, "MAX", Ty::Int, {Ty::List}},
      {Op::Min, "MIN", Ty::Int, {Ty::List}},
      {Op::Head, "HEAD", Ty::Int, {Ty::List}},
      {Op::Last, "LAST", Ty::Int, {Ty::List}},
      {Op::Range, "RANGE", Ty::List, {Ty::Int}},
      {Op::IfPos, "IFPOS", Ty::Int, {Ty::Int, Ty::Int, Ty::Int}},
  };
  return t;
}

inline const OpInfo& op_info(Op op) { return op_table()[(std::size_t)op]; }

inline Op op_from_name(const std::string& name) {
  for (const auto& i : op_table())
    if (name == i.name) return i.op;
  throw Error("unknown abstract op: " + name);
}

// Shared surface inventory across all languages.
inline const std::vector<std::string>& structural_tokens() {
  static const std::vector<std::string> t = {"(", ")", "[", "]", ",", ";", "->"};
  return t;
}

inline const std::vector<std::string>& digit_tokens() {
  static const std::vector<std::string> t = {"0", "1", "2", "3", "4",
                                             "5", "6", "7", "8", "9"};
  return t;
}

struct LanguageSpec {
  std::string id;
  std::map<Op, std::string> keyword_map;
  std::vector<std::string> structural = structural_tokens();
  std::vector<std::string> literal_alphabet = digit_tokens();

  const std::string& keyword(Op op) const {
    auto it = keyword_map.find(op);
    if (it == keyword_map.end())
      throw Error("language " + id + ": no keyword for op " +
                  op_info(op).name);
    return it->second;
  }

  // surface string -> op, for parsing
  std::map<std::string, Op> reverse_map() const {
    std::map<std::string, Op> r;
    for (const auto& [op, kw] : keyword_map) r.emplace(kw, op);
    return r;
  }

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    j["id"] = id;
    nlohmann::ordered_json kws;
    for (const auto& i : op_table()) kws[i.name] = keyword(i.op);
    j["keywords"] = kws;
    j["structural_tokens"] = structural;
    j["literal_alphabet"] = literal_alphabet;
    return j;
  }

  static LanguageSpec from_json(const nlohmann::json& j) {
    LanguageSpec s;
    s.id = j.at("id").get<std::string>();
    for (auto it = j.at("keywords").begin(); it != j.at("keywords").end(); ++it)
      s.keyword_map[op_from_name(it.key())] = it.value().get<std::string>();
    if (j.contains("structural_tokens"))
      s.structural = j["structural_tokens"].get<std::vector<std::string>>();
    if (j.contains("literal_alphabet"))
      s.literal_alphabet = j["literal_alphabet"].get<std::vector<std::string>>();
    validate(s);
    return s;
  }

  static LanguageSpec load(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw Error("cannot read language spec: " + path);
    nlohmann::json j;
    f >> j;
    return from_json(j);
  }

  static void validate(const LanguageSpec& s) {
    if (s.id.empty()) throw Error("language spec: empty id");
    std::set<std::string> seen;
    for (const auto& i : op_table()) {
      const std::string& kw = s.keyword(i.op);
      if (kw.empty()) throw Error("language " + s.id + ": empty keyword");
      if (kw.find_first_of(" \t\n") != std::string::npos)
        throw Error("language " + s.id + ": keyword contains whitespace");
      if (!seen.insert(kw).second)
        throw Error("language " + s.id + ": keyword collision on '" + kw + "'");
      for (const auto& st : s.structural)
        if (kw == st)
          throw Error("language " + s.id + ": keyword shadows structural '" +
                      kw + "'");
      for (const auto& d : s.literal_alphabet)
        if (kw == d)
          throw Error("language " + s.id + ": keyword shadows digit '" + kw +
                      "'");
    }
  }
};

// Ops whose corpus documents belong to exactly one language; other
// languages' generators never emit them, so any task needing them
// requires knowledge carried only by the owner's corpus.
struct ExclusivityPolicy {
  std::map<Op, std::string> owner;  // op -> owning language id

  bool allowed(Op op, const std::string& lang) const {
    auto it = owner.find(op);
    return it == owner.end() || it->second == lang;
  }

  std::set<Op> owned_by(const std::string& lang) const {
    std::set<Op> r;
    for (const auto& [op, o] : owner)
      if (o == lang) r.insert(op);
    return r;
  }
};

// Built-in language family. alpha is the dominant language; max/min/range
// share one surface across languages so their knowledge can transfer
// through a single token id.
inline LanguageSpec builtin_spec(const std::string& id) {
  LanguageSpec s;
  s.id = id;
  auto set = [&](Op op, const char* kw) { s.keyword_map[op] = kw; };
  if (id == "alpha") {
    set(Op::Add, "add");   set(Op::Sub, "sub");    set(Op::Mul, "mul");
    set(Op::Neg, "neg");   set(Op::Len, "len");    set(Op::Sum, "sum");
    set(Op::Max, "max");   set(Op::Min, "min");    set(Op::Head, "head");
    set(Op::Last, "last"); set(Op::Range, "range"); set(Op::IfPos, "ifpos");
  } else if (id == "beta") {
    set(Op::Add, "plus");   set(Op::Sub, "minus");  set(Op::Mul, "times");
    set(Op::Neg, "flip");   set(Op::Len, "count");  set(Op::Sum, "total");
    set(Op::Max, "max");    set(Op::Min, "min");    set(Op::Head, "first");
    set(Op::Last, "final"); set(Op::Range, "range"); set(Op::IfPos, "when");
  } else if (id == "gamma") {
    set(Op::Add, "comb");   set(Op::Sub, "less");   set(Op::Mul, "fold");
    set(Op::Neg, "inv");    set(Op::Len, "size");   set(Op::Sum, "tally");
    set(Op::Max, "max");    set(Op::Min, "min");    set(Op::Head, "front");
    set(Op::Last, "rear");  set(Op::Range, "range"); set(Op::IfPos, "pick");
  } else {
    throw Error("no builtin language spec: " + id);
  }
  LanguageSpec::validate(s);
  return s;
}

inline ExclusivityPolicy builtin_exclusivity(const std::string& dominant) {
  ExclusivityPolicy p;
  p.owner[Op::Max] = dominant;
  p.owner[Op::Min] = dominant;
  p.owner[Op::Range] = dominant;
  return p;
}

// Deterministic word-level vocabulary over the union of the given specs.
inline Vocabulary build_vocabulary(const std::vector<LanguageSpec>& specs) {
  if (specs.empty()) throw Error("build_vocabulary: no specs");
  for (const auto& s : specs) LanguageSpec::validate(s);
  Vocabulary v;  // specials first
  for (const auto& d : digit_tokens()) v.add(d);
  for (const auto& st : structural_tokens()) v.add(st);
  for (const auto& s : specs)
    for (const auto& i : op_table()) v.add(s.keyword(i.op));
  return v;
}

// At least this many ops must have pairwise-distinct surfaces between
// every pair of languages (the probe identifiers).
inline int differing_keyword_count(const LanguageSpec& a,
                                   const LanguageSpec& b) {
  int n = 0;
  for (const auto& i : op_table())
    if (a.keyword(i.op) != b.keyword(i.op)) ++n;
  return n;
}

inline void validate_family(const std::vector<LanguageSpec>& specs,
                            int min_differing = 5) {
  for (std::size_t i = 0; i < specs.size(); ++i)
    for (std::size_t j = i + 1; j < specs.size(); ++j)
      if (differing_keyword_count(specs[i], specs[j]) < min_differing)
        throw Error("language family: " + specs[i].id + " and " + specs[j].id +
                    " share too many surfaces");
}

}  // namespace babel::toylang
