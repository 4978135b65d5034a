// Language activation probability entropy over FFN neurons, and
// transfer-neuron selection.
#pragma once

#include <optional>

#include "babel/model/net.hpp"
#include "babel/vocab.hpp"

namespace babel::probes {

struct NeuronRecord {
  int layer = 0;  // 0-based
  int index = 0;  // neuron within the layer's FFN
  std::vector<double> p;         // activation probability per language
  std::vector<double> p_norm;    // p / sum(p); empty when dead
  double entropy = 0.0;          // nats
  bool dead = false;             // sum(p) == 0
};

struct LapeReport {
  std::vector<std::string> languages;
  std::vector<NeuronRecord> neurons;  // (layer, index) order
  std::uint64_t tokens_per_language = 0;

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    j["schema_version"] = 1;
    j["languages"] = languages;
    j["tokens_per_language"] = tokens_per_language;
    auto arr = nlohmann::json::array();
    for (const auto& n : neurons)
      arr.push_back({{"layer", n.layer},
                     {"index", n.index},
                     {"p", n.p},
                     {"entropy", n.entropy},
                     {"dead", n.dead}});
    j["neurons"] = arr;
    return j;
  }

  static LapeReport from_json(const nlohmann::json& j) {
    LapeReport r;
    r.languages = j.at("languages").get<std::vector<std::string>>();
    r.tokens_per_language = j.value("tokens_per_language", 0ull);
    for (const auto& nj : j.at("neurons")) {
      NeuronRecord n;
      n.layer = nj.at("layer");
      n.index = nj.at("index");
      n.p = nj.at("p").get<std::vector<double>>();
      n.entropy = nj.at("entropy");
      n.dead = nj.at("dead");
      double s = 0;
      for (double x : n.p) s += x;
      if (!n.dead)
        for (double x : n.p) n.p_norm.push_back(x / s);
      r.neurons.push_back(std::move(n));
    }
    return r;
  }
};

inline double lape_entropy(const std::vector<double>& p_norm) {
  double h = 0;
  for (double q : p_norm)
    if (q > 0) h -= q * std::log(q);
  return h;
}

// Fills p_norm/entropy/dead from raw p.
inline void finish_record(NeuronRecord& n) {
  double s = 0;
  for (double x : n.p) s += x;
  if (s == 0) {
    n.dead = true;
    n.entropy = 0.0;
    n.p_norm.clear();
    return;
  }
  n.dead = false;
  n.p_norm.clear();
  for (double x : n.p) n.p_norm.push_back(x / s);
  n.entropy = lape_entropy(n.p_norm);
}

// p_{layer,j,i} = fraction of language-i token positions where the
// post-ReLU FFN activation is > 0.
inline LapeReport lape_scores(
    const model::Checkpoint& ckpt,
    const std::map<std::string, std::vector<std::vector<TokenId>>>& samples,
    std::uint64_t min_tokens_per_language = 10000) {
  if (samples.empty()) throw Error("lape_scores: no samples");
  int L = ckpt.config.n_layers, F = ckpt.config.d_ffn;
  LapeReport rep;
  std::vector<std::vector<std::int64_t>> active(
      (std::size_t)(L * F));  // per neuron, per language
  std::vector<std::uint64_t> totals;
  for (const auto& [lang, seqs] : samples) {
    rep.languages.push_back(lang);
    if (seqs.empty()) throw Error("lape_scores: empty sample set for " + lang);
  }
  for (auto& a : active) a.assign(rep.languages.size(), 0);

  model::CaptureFlags flags;
  flags.ffn_hidden = true;
  std::size_t li = 0;
  for (const auto& [lang, seqs] : samples) {
    std::uint64_t total = 0;
    for (const auto& seq : seqs) {
      if (seq.empty()) continue;
      model::ForwardResult out = model::forward(ckpt, seq, flags);
      total += seq.size();
      for (int l = 0; l < L; ++l) {
        const Mat& h = out.capture.ffn_hidden[(std::size_t)l];
        for (int r = 0; r < h.rows; ++r) {
          const double* hp = h.row(r);
          for (int j = 0; j < F; ++j)
            if (hp[j] > 0) ++active[(std::size_t)(l * F + j)][li];
        }
      }
    }
    if (total < min_tokens_per_language)
      throw Error("lape_scores: fewer than " +
                  std::to_string(min_tokens_per_language) + " tokens for " +
                  lang);
    totals.push_back(total);
    ++li;
  }
  for (std::size_t i = 1; i < totals.size(); ++i)
    if (totals[i] != totals[0])
      throw Error("lape_scores: sample sizes differ across languages");
  rep.tokens_per_language = totals[0];

  for (int l = 0; l < L; ++l)
    for (int j = 0; j < F; ++j) {
      NeuronRecord n;
      n.layer = l;
      n.index = j;
      for (std::size_t k = 0; k < rep.languages.size(); ++k)
        n.p.push_back((double)active[(std::size_t)(l * F + j)][k] /
                      (double)totals[k]);
      finish_record(n);
      rep.neurons.push_back(std::move(n));
    }
  return rep;
}

struct NeuronRef {
  int layer;
  int index;
  auto operator<=>(const NeuronRef&) const = default;
};

struct LapeSelection {
  std::map<std::string, std::set<NeuronRef>> per_language;
  std::map<std::string, std::int64_t> counts;
  double percentile_q = 0;
  double activation_threshold = 0;
  int n_candidates = 0;

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    j["schema_version"] = 1;
    j["percentile_q"] = percentile_q;
    j["activation_threshold"] = activation_threshold;
    j["n_candidates"] = n_candidates;
    j["counts"] = counts;
    nlohmann::ordered_json sets;
    for (const auto& [lang, s] : per_language) {
      auto arr = nlohmann::json::array();
      for (const auto& n : s) arr.push_back({{"layer", n.layer}, {"index", n.index}});
      sets[lang] = arr;
    }
    j["neurons"] = sets;
    return j;
  }
};

// Candidates: the floor(q * n_live) lowest-entropy live neurons (at least
// one), ties broken by (layer, index). A candidate belongs to language i
// iff p_i >= activation_threshold; the threshold defaults to the
// `threshold_percentile` quantile of the candidate pool's p values.
inline LapeSelection select_transfer_neurons(
    const LapeReport& rep, double percentile_q,
    std::optional<double> activation_threshold = std::nullopt,
    double threshold_percentile = 0.9) {
  if (!(percentile_q > 0 && percentile_q < 1))
    throw Error("select_transfer_neurons: percentile_q outside (0,1)");
  if (activation_threshold &&
      (*activation_threshold < 0 || *activation_threshold > 1))
    throw Error("select_transfer_neurons: threshold outside [0,1]");

  std::vector<const NeuronRecord*> live;
  for (const auto& n : rep.neurons)
    if (!n.dead) live.push_back(&n);
  if (live.empty()) throw Error("select_transfer_neurons: all neurons dead");
  std::stable_sort(live.begin(), live.end(),
                   [](const NeuronRecord* a, const NeuronRecord* b) {
                     if (a->entropy != b->entropy) return a->entropy < b->entropy;
                     if (a->layer != b->layer) return a->layer < b->layer;
                     return a->index < b->index;
                   });
  std::size_t k = std::max<std::size_t>(
      1, (std::size_t)std::floor(percentile_q * (double)live.size()));
  live.resize(std::min(k, live.size()));

  double thr;
  if (activation_threshold) {
    thr = *activation_threshold;
  } else {
    std::vector<double> pool;
    for (const auto* n : live)
      for (double x : n->p) pool.push_back(x);
    std::sort(pool.begin(), pool.end());
    std::size_t idx = (std::size_t)std::ceil(threshold_percentile * pool.size());
    if (idx > 0) --idx;
    thr = pool[idx];
  }

  LapeSelection sel;
  sel.percentile_q = percentile_q;
  sel.activation_threshold = thr;
  sel.n_candidates = (int)live.size();
  for (const auto& lang : rep.languages) sel.counts[lang] = 0;
  for (const auto* n : live)
    for (std::size_t i = 0; i < rep.languages.size(); ++i)
      if (n->p[i] >= thr) {
        sel.per_language[rep.languages[i]].insert({n->layer, n->index});
        ++sel.counts[rep.languages[i]];
      }
  return sel;
}

}  // namespace babel::probes
