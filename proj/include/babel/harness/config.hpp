// Experiment configuration: one TOML file, sections per module.
#pragma once

#include "babel/harness/toml.hpp"
#include "babel/model/config.hpp"
#include "babel/probes/worklang.hpp"
#include "babel/toylang/evalsuite.hpp"

namespace babel::harness {

enum class ExperimentKind {
  MonoTrain,
  ContinualPretrain,
  MixtureSweep,
  FromScratchMix,
};

inline ExperimentKind kind_from_string(const std::string& s) {
  if (s == "mono-train") return ExperimentKind::MonoTrain;
  if (s == "continual-pretrain") return ExperimentKind::ContinualPretrain;
  if (s == "mixture-sweep") return ExperimentKind::MixtureSweep;
  if (s == "from-scratch-mix") return ExperimentKind::FromScratchMix;
  throw Error("unknown experiment kind: " + s);
}

inline std::string kind_to_string(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::MonoTrain: return "mono-train";
    case ExperimentKind::ContinualPretrain: return "continual-pretrain";
    case ExperimentKind::MixtureSweep: return "mixture-sweep";
    case ExperimentKind::FromScratchMix: return "from-scratch-mix";
  }
  return "?";
}

struct ProbeConfig {
  int every = 1;            // probe every k-th saved checkpoint
  bool final_only = false;  // sweep cells: probe only the last checkpoint
  int exclude_top_k = -1;   // -1: scaled default
  int per_identifier = 10;
  int lape_tokens = 10000;
  double lape_q = 0.05;
  double lape_threshold_percentile = 0.9;
  int eval_max_new = 32;
};

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::MonoTrain;
  std::string output_dir;
  std::uint64_t seed = 0;

  // languages
  std::string dominant = "alpha";
  std::string target = "beta";
  std::vector<std::string> spec_files;  // optional JSON spec paths

  // corpus
  std::uint64_t dominant_tokens = 3'000'000;
  std::uint64_t target_tokens = 3'000'000;
  double trace_fraction = 0.02;  // dominant trace mixed into continual stream
  std::size_t mix_block_size = 256;

  // mono-train: which language to train on
  std::string mono_language;

  // continual: starting checkpoint (path); empty means output of a prior
  // mono run at <start_run_dir>
  std::string start_checkpoint;

  // sweep: target token budgets per cell
  std::vector<std::uint64_t> sweep_budgets;

  // from-scratch-mix entries (language -> tokens); empty means
  // {dominant: dominant_tokens, target: target_tokens}
  std::map<std::string, std::uint64_t> mix_entries;

  model::ModelConfig model;
  model::TrainConfig train;
  ProbeConfig probes;

  int suite_tasks = 200;
  double suite_exclusive_frac = 0.25;
  int estimator_width = 5;

  std::string canonical_text;  // for hashing

  std::string config_hash() const { return sha256_hex(canonical_text); }

  toylang::GeneratorConfig generator() const {
    toylang::GeneratorConfig g;
    g.exclusivity = toylang::builtin_exclusivity(dominant);
    return g;
  }

  std::vector<toylang::LanguageSpec> language_specs() const {
    std::vector<toylang::LanguageSpec> specs;
    if (!spec_files.empty()) {
      for (const auto& f : spec_files)
        specs.push_back(toylang::LanguageSpec::load(f));
    } else {
      specs.push_back(toylang::builtin_spec(dominant));
      specs.push_back(toylang::builtin_spec(target));
    }
    toylang::validate_family(specs);
    return specs;
  }

  int exclude_top_k() const {
    return probes.exclude_top_k >= 0
               ? probes.exclude_top_k
               : probes::default_exclude_top_k(model.n_layers);
  }

  static ExperimentConfig from_toml(const TomlTable& t) {
    ExperimentConfig c;
    c.kind = kind_from_string(t.get("experiment", "kind").as_string());
    c.output_dir = t.get("experiment", "output_dir").as_string();
    if (!t.has("experiment", "seed"))
      throw Error("config: [experiment] seed is required");
    c.seed = (std::uint64_t)t.get("experiment", "seed").as_int();

    c.dominant = t.get_string("languages", "dominant", c.dominant);
    c.target = t.get_string("languages", "target", c.target);
    if (t.has("languages", "spec_files"))
      for (const auto& v : t.get("languages", "spec_files").as_array())
        c.spec_files.push_back(v.as_string());

    c.dominant_tokens =
        (std::uint64_t)t.get_int("corpus", "dominant_tokens",
                                 (std::int64_t)c.dominant_tokens);
    c.target_tokens = (std::uint64_t)t.get_int("corpus", "target_tokens",
                                               (std::int64_t)c.target_tokens);
    c.trace_fraction = t.get_float("corpus", "trace_fraction", c.trace_fraction);
    c.mix_block_size =
        (std::size_t)t.get_int("corpus", "mix_block_size",
                               (std::int64_t)c.mix_block_size);

    c.mono_language = t.get_string("experiment", "mono_language", c.dominant);
    c.start_checkpoint = t.get_string("experiment", "start_checkpoint", "");
    if (t.has("experiment", "sweep_budgets"))
      for (const auto& v : t.get("experiment", "sweep_budgets").as_array())
        c.sweep_budgets.push_back((std::uint64_t)v.as_int());
    if (t.sections().count("mixture"))
      for (const auto& [lang, v] : t.sections().at("mixture"))
        c.mix_entries[lang] = (std::uint64_t)v.as_int();

    c.model.n_layers = (int)t.get_int("model", "n_layers", c.model.n_layers);
    c.model.d_model = (int)t.get_int("model", "d_model", c.model.d_model);
    c.model.n_heads = (int)t.get_int("model", "n_heads", c.model.n_heads);
    c.model.d_ffn = (int)t.get_int("model", "d_ffn", c.model.d_ffn);
    c.model.context_length =
        (int)t.get_int("model", "context_length", c.model.context_length);

    c.train.steps = (int)t.get_int("train", "steps", c.train.steps);
    c.train.batch_size = (int)t.get_int("train", "batch_size", c.train.batch_size);
    c.train.seq_len = (int)t.get_int("train", "seq_len", c.train.seq_len);
    c.train.lr = t.get_float("train", "lr", c.train.lr);
    c.train.warmup_steps =
        (int)t.get_int("train", "warmup_steps", c.train.warmup_steps);
    c.train.cosine_final_frac =
        t.get_float("train", "cosine_final_frac", c.train.cosine_final_frac);
    c.train.grad_clip = t.get_float("train", "grad_clip", c.train.grad_clip);
    c.train.save_interval =
        (int)t.get_int("train", "save_interval", c.train.save_interval);
    c.train.seed = c.seed;

    c.probes.every = (int)t.get_int("probes", "every", c.probes.every);
    c.probes.final_only = t.get_bool("probes", "final_only", false);
    c.probes.exclude_top_k =
        (int)t.get_int("probes", "exclude_top_k", c.probes.exclude_top_k);
    c.probes.per_identifier =
        (int)t.get_int("probes", "per_identifier", c.probes.per_identifier);
    c.probes.lape_tokens =
        (int)t.get_int("probes", "lape_tokens", c.probes.lape_tokens);
    c.probes.lape_q = t.get_float("probes", "lape_q", c.probes.lape_q);
    c.probes.lape_threshold_percentile = t.get_float(
        "probes", "lape_threshold_percentile", c.probes.lape_threshold_percentile);
    c.probes.eval_max_new =
        (int)t.get_int("probes", "eval_max_new", c.probes.eval_max_new);

    c.suite_tasks = (int)t.get_int("suite", "tasks", c.suite_tasks);
    c.suite_exclusive_frac =
        t.get_float("suite", "exclusive_frac", c.suite_exclusive_frac);
    c.estimator_width = (int)t.get_int("estimator", "width", c.estimator_width);

    c.canonical_text = t.canonical();
    if (c.probes.every < 1) throw Error("config: probes.every must be >= 1");
    return c;
  }
};

}  // namespace babel::harness
