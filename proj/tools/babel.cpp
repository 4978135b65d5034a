// babel: command-line front end for corpus generation, training,
// evaluation, probing, estimation, sweeps, and reporting.
#include <CLI11.hpp>
#include <iostream>

#include "babel/harness/report.hpp"
#include "babel/harness/run.hpp"

namespace {

using namespace babel;

constexpr int kOk = 0;
constexpr int kConfigError = 1;
constexpr int kStageFailure = 2;

harness::ExperimentConfig load_config(const std::string& path) {
  return harness::ExperimentConfig::from_toml(
      harness::TomlTable::parse_file(path));
}

std::vector<toylang::LanguageSpec> load_family(
    const std::vector<std::string>& spec_files, const std::string& dominant,
    const std::string& target) {
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

const toylang::LanguageSpec& find_spec(
    const std::vector<toylang::LanguageSpec>& specs, const std::string& id) {
  for (const auto& s : specs)
    if (s.id == id) return s;
  throw Error("unknown language: " + id);
}

int run_from_config(const std::string& config_path,
                    harness::ExperimentKind expected,
                    const std::string& name) {
  harness::ExperimentConfig cfg = load_config(config_path);
  if (cfg.kind != expected) {
    std::cerr << "error: config kind is " << harness::kind_to_string(cfg.kind)
              << ", expected " << name << "\n";
    return kConfigError;
  }
  harness::RunManifest m = harness::run(cfg);
  if (m.status != "complete") {
    std::cerr << "error: run failed: " << m.failure << "\n";
    return kStageFailure;
  }
  std::cout << "complete: " << m.run_dir << "\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"babel: tiny-transformer language-transfer laboratory"};
  app.require_subcommand(1);

  // ---- gen-corpus
  std::string gc_lang, gc_out, gc_vocab_out, gc_dominant = "alpha",
                               gc_target = "beta";
  std::uint64_t gc_seed = 0, gc_tokens = 100000;
  std::vector<std::string> gc_spec_files;
  auto* gen = app.add_subcommand("gen-corpus", "generate a language corpus");
  gen->add_option("--lang", gc_lang, "language id")->required();
  gen->add_option("--out", gc_out, "output corpus path (.btc)")->required();
  gen->add_option("--seed", gc_seed, "rng seed")->required();
  gen->add_option("--tokens", gc_tokens, "token budget");
  gen->add_option("--vocab-out", gc_vocab_out, "also write the vocabulary");
  gen->add_option("--dominant", gc_dominant, "dominant language id");
  gen->add_option("--target", gc_target, "target language id");
  gen->add_option("--spec-file", gc_spec_files, "language spec JSON paths");

  // ---- train (mono / continual / from-scratch-mix via config)
  std::string tr_config;
  auto* train = app.add_subcommand("train", "run a training experiment");
  train->add_option("--config", tr_config, "experiment TOML")->required();

  // ---- eval
  std::string ev_ckpt, ev_suite, ev_vocab, ev_out;
  int ev_max_new = 32;
  auto* ev = app.add_subcommand("eval", "evaluate a checkpoint on a suite");
  ev->add_option("--checkpoint", ev_ckpt)->required();
  ev->add_option("--suite", ev_suite)->required();
  ev->add_option("--vocab", ev_vocab)->required();
  ev->add_option("--out", ev_out, "result JSON (default: stdout)");
  ev->add_option("--max-new", ev_max_new, "decode budget per task");

  // ---- probe
  auto* probe = app.add_subcommand("probe", "inspect a checkpoint");
  probe->require_subcommand(1);

  std::string pw_ckpt, pw_vocab, pw_out, pw_lang, pw_dominant = "alpha",
                                          pw_target = "beta";
  std::vector<std::string> pw_spec_files;
  std::uint64_t pw_seed = 0;
  int pw_per_identifier = 10, pw_exclude = -1;
  auto* pworklang =
      probe->add_subcommand("worklang", "working-language proportions");
  pworklang->add_option("--checkpoint", pw_ckpt)->required();
  pworklang->add_option("--vocab", pw_vocab)->required();
  pworklang->add_option("--lang", pw_lang, "language to elicit")->required();
  pworklang->add_option("--seed", pw_seed, "prompt sampling seed")->required();
  pworklang->add_option("--out", pw_out, "report JSON (default: stdout)");
  pworklang->add_option("--dominant", pw_dominant);
  pworklang->add_option("--target", pw_target);
  pworklang->add_option("--spec-file", pw_spec_files);
  pworklang->add_option("--per-identifier", pw_per_identifier);
  pworklang->add_option("--exclude-top-k", pw_exclude,
                        "layers excluded at the top (-1: scaled default)");

  std::string pn_ckpt, pn_vocab, pn_out;
  std::vector<std::string> pn_corpora;  // lang=path pairs
  int pn_tokens = 10000;
  double pn_q = 0.05, pn_percentile = 0.9;
  auto* pneurons =
      probe->add_subcommand("neurons", "language-transferring neurons (LAPE)");
  pneurons->add_option("--checkpoint", pn_ckpt)->required();
  pneurons->add_option("--vocab", pn_vocab)->required();
  pneurons
      ->add_option("--corpus", pn_corpora, "lang=corpus.btc (one per language)")
      ->required();
  pneurons->add_option("--tokens", pn_tokens, "tokens per language");
  pneurons->add_option("--quantile", pn_q, "entropy quantile");
  pneurons->add_option("--threshold-percentile", pn_percentile);
  pneurons->add_option("--out", pn_out, "selection JSON (default: stdout)");

  std::string pt_eval, pt_suite, pt_out;
  std::string pt_solved_dominant, pt_solved_new;
  auto* ptransfer =
      probe->add_subcommand("transfer", "knowledge-transfer proportion");
  ptransfer->add_option("--eval", pt_eval, "eval result JSON (defines C)")
      ->required();
  ptransfer->add_option(
      "--suite", pt_suite,
      "suite JSON: P = tasks needing exclusive knowledge (by-construction)");
  ptransfer->add_option("--solved-dominant", pt_solved_dominant,
                        "dominant mono eval JSON (empirical P)");
  ptransfer->add_option("--solved-new", pt_solved_new,
                        "new-language mono eval JSON (empirical P)");
  ptransfer->add_option("--out", pt_out, "report JSON (default: stdout)");

  // ---- estimate
  std::string es_trace, es_scores, es_out;
  std::uint64_t es_eta = 0;
  int es_width = 5;
  std::int64_t es_wb = 90, es_we = 100;
  auto* est = app.add_subcommand("estimate", "plan the target token budget");
  est->add_option("--trace", es_trace, "loss trace JSONL")->required();
  est->add_option("--scores", es_scores, "per-checkpoint score JSONL")
      ->required();
  est->add_option("--eta-dominant", es_eta, "dominant corpus tokens")
      ->required();
  est->add_option("--width", es_width, "smoothing window (odd)");
  est->add_option("--window-begin", es_wb, "init-loss window start step");
  est->add_option("--window-end", es_we, "init-loss window end step");
  est->add_option("--out", es_out, "plan JSON (default: stdout)");

  // ---- sweep
  std::string sw_config;
  auto* sweep = app.add_subcommand("sweep", "mixture sweep over token budgets");
  sweep->add_option("--config", sw_config, "experiment TOML")->required();

  // ---- report
  std::string rp_dir;
  auto* rep = app.add_subcommand("report", "CSVs + summary for a run dir");
  rep->add_option("--run-dir", rp_dir)->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) {
      auto specs = load_family(gc_spec_files, gc_dominant, gc_target);
      Vocabulary vocab = toylang::build_vocabulary(specs);
      toylang::GeneratorConfig g;
      g.exclusivity = toylang::builtin_exclusivity(gc_dominant);
      toylang::Corpus c = toylang::generate_corpus(
          find_spec(specs, gc_lang), vocab,
          derive_seed(gc_seed, fnv1a64("corpus:" + gc_lang)), gc_tokens, g);
      toylang::save_corpus(c, gc_out);
      if (!gc_vocab_out.empty()) vocab.save(gc_vocab_out);
      std::cout << "wrote " << c.tokens.size() << " tokens to " << gc_out
                << "\n";
      return kOk;
    }

    if (train->parsed()) {
      harness::ExperimentConfig cfg = load_config(tr_config);
      if (cfg.kind == harness::ExperimentKind::MixtureSweep) {
        std::cerr << "error: use `babel sweep` for mixture-sweep configs\n";
        return kConfigError;
      }
      harness::RunManifest m = harness::run(cfg);
      if (m.status != "complete") {
        std::cerr << "error: run failed: " << m.failure << "\n";
        return kStageFailure;
      }
      std::cout << "complete: " << m.run_dir << "\n";
      return kOk;
    }

    if (sweep->parsed())
      return run_from_config(sw_config, harness::ExperimentKind::MixtureSweep,
                             "mixture-sweep");

    if (ev->parsed()) {
      model::Checkpoint ckpt = model::load_checkpoint(ev_ckpt);
      Vocabulary vocab = Vocabulary::load(ev_vocab);
      toylang::EvalSuite suite = toylang::EvalSuite::load(ev_suite);
      toylang::EvalResult r = toylang::evaluate(ckpt, suite, vocab, ev_max_new);
      std::string text = r.to_json().dump(2) + "\n";
      if (ev_out.empty())
        std::cout << text;
      else
        harness::write_atomic(ev_out, text);
      return kOk;
    }

    if (pworklang->parsed()) {
      model::Checkpoint ckpt = model::load_checkpoint(pw_ckpt);
      Vocabulary vocab = Vocabulary::load(pw_vocab);
      auto specs = load_family(pw_spec_files, pw_dominant, pw_target);
      probes::IdentifierTable table =
          probes::IdentifierTable::build(specs, pw_lang);
      toylang::GeneratorConfig g;
      g.exclusivity = toylang::builtin_exclusivity(pw_dominant);
      auto prompts = probes::make_probe_prompts(
          find_spec(specs, pw_lang), table, vocab,
          derive_seed(pw_seed, fnv1a64("probe-prompts")), pw_per_identifier, g);
      int exclude = pw_exclude >= 0
                        ? pw_exclude
                        : probes::default_exclude_top_k(ckpt.config.n_layers);
      probes::WorkLangReport wl = probes::worklang_proportion(
          ckpt, prompts, table, vocab, exclude, pw_seed);
      std::string text = wl.to_json().dump(2) + "\n";
      if (pw_out.empty())
        std::cout << text;
      else
        harness::write_atomic(pw_out, text);
      return kOk;
    }

    if (pneurons->parsed()) {
      model::Checkpoint ckpt = model::load_checkpoint(pn_ckpt);
      Vocabulary vocab = Vocabulary::load(pn_vocab);
      int seq = std::min(ckpt.config.context_length, 32);
      std::map<std::string, std::vector<std::vector<TokenId>>> samples;
      std::size_t budget = (std::size_t)pn_tokens;
      budget -= budget % (std::size_t)seq;
      for (const auto& pair : pn_corpora) {
        auto eq = pair.find('=');
        if (eq == std::string::npos)
          throw Error("--corpus expects lang=path, got: " + pair);
        std::string lang = pair.substr(0, eq);
        std::vector<TokenId> toks =
            toylang::load_corpus_tokens(pair.substr(eq + 1), vocab);
        if (toks.size() < budget)
          throw Error("corpus too small for --tokens: " + pair);
        std::vector<std::vector<TokenId>> rows;
        for (std::size_t o = 0; o + (std::size_t)seq <= budget;
             o += (std::size_t)seq)
          rows.emplace_back(toks.begin() + (std::ptrdiff_t)o,
                            toks.begin() + (std::ptrdiff_t)(o + seq));
        samples[lang] = std::move(rows);
      }
      probes::LapeReport lr =
          probes::lape_scores(ckpt, samples, (std::uint64_t)budget);
      probes::LapeSelection sel = probes::select_transfer_neurons(
          lr, pn_q, std::nullopt, pn_percentile);
      std::string text = sel.to_json().dump(2) + "\n";
      if (pn_out.empty())
        std::cout << text;
      else
        harness::write_atomic(pn_out, text);
      return kOk;
    }

    if (ptransfer->parsed()) {
      toylang::EvalResult c_eval = toylang::EvalResult::load(pt_eval);
      std::set<int> solved_c(c_eval.solved.begin(), c_eval.solved.end());
      std::set<int> subset_p;
      std::string mode;
      if (!pt_suite.empty()) {
        mode = "by-construction";
        toylang::EvalSuite suite = toylang::EvalSuite::load(pt_suite);
        for (const auto& t : suite.tasks)
          if (!t.required_knowledge.empty()) subset_p.insert(t.task_id);
      } else if (!pt_solved_dominant.empty() && !pt_solved_new.empty()) {
        mode = "empirical";
        toylang::EvalResult d = toylang::EvalResult::load(pt_solved_dominant);
        toylang::EvalResult n = toylang::EvalResult::load(pt_solved_new);
        subset_p = probes::empirical_subset(
            std::set<int>(d.solved.begin(), d.solved.end()),
            std::set<int>(n.solved.begin(), n.solved.end()));
      } else {
        std::cerr << "error: need --suite or both --solved-dominant and "
                     "--solved-new\n";
        return kConfigError;
      }
      probes::TransferReport r =
          probes::knowledge_transfer_proportion(subset_p, solved_c, mode);
      std::string text = r.to_json().dump(2) + "\n";
      if (pt_out.empty())
        std::cout << text;
      else
        harness::write_atomic(pt_out, text);
      return kOk;
    }

    if (est->parsed()) {
      model::LossTrace trace = model::LossTrace::load(es_trace);
      estimator::ScoreSeries scores = estimator::ScoreSeries::load(es_scores);
      estimator::MixturePlan plan = estimator::plan_target_tokens(
          trace, scores, es_eta, es_width, es_wb, es_we);
      std::string text = plan.to_json().dump(2) + "\n";
      if (es_out.empty())
        std::cout << text;
      else
        harness::write_atomic(es_out, text);
      return kOk;
    }

    if (rep->parsed()) {
      std::string out = harness::write_report(rp_dir);
      std::cout << "report written to " << out << "\n";
      return kOk;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kStageFailure;
  }
  return kConfigError;
}
