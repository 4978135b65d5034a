// Acceptance battery: one pass/fail line per criterion, nonzero exit if any
// criterion fails. Heavy experiments are cached under BABEL_ACCEPT_DIR
// (default: ./acceptance_runs) and reused across invocations.
#include <cstdlib>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "babel/harness/report.hpp"
#include "babel/harness/run.hpp"

using namespace babel;
namespace fs = std::filesystem;

namespace {

std::string accept_root() {
  const char* env = std::getenv("BABEL_ACCEPT_DIR");
  return env && *env ? env : "acceptance_runs";
}

std::vector<nlohmann::json> read_jsonl(const std::string& path) {
  std::vector<nlohmann::json> out;
  std::istringstream is(harness::read_file(path));
  std::string line;
  while (std::getline(is, line))
    if (!line.empty()) out.push_back(nlohmann::json::parse(line));
  return out;
}

struct Check {
  bool ok = true;
  std::string why;
  void require(bool cond, const std::string& msg) {
    if (cond) return;
    ok = false;
    why += (why.empty() ? "" : "; ") + msg;
  }
};

// ---------------------------------------------------------------- criterion 1

Check c1_formula_suite() {
  Check c;
  // Eq. 1 boundaries: loss at the init anchor maps to 1, at the floor to 0.
  estimator::LossAnchors a;
  a.initial = 4.0;
  a.final = 1.0;
  c.require(estimator::system_proportion_from_loss(4.0, a).value == 1.0,
            "P(alpha) != 1");
  c.require(estimator::system_proportion_from_loss(1.0, a).value == 0.0,
            "P(beta) != 0");

  // Eq. 2: proportions over a mixture lie on the simplex.
  toylang::MixtureSpec mix;
  mix.entries = {{"a", 3'000'000}, {"b", 1'000'000}, {"c", 500'000}};
  double sum = 0;
  for (const auto& [lang, n] : mix.entries)
    sum += estimator::system_proportion_from_mixture(mix, lang).value;
  c.require(std::abs(sum - 1.0) <= 1e-12, "mixture proportions sum != 1");

  // Algorithm inversion: eta_target = eta_d/P - eta_d feeds back to P.
  Rng rng = make_rng(101);
  std::uniform_real_distribution<double> u(0.01, 1.0);
  double eta_d = 3'000'000;
  double worst = 0;
  for (int k = 0; k < 100; ++k) {
    double P = u(rng);
    double eta_t = eta_d / P - eta_d;
    worst = std::max(worst, std::abs(eta_d / (eta_d + eta_t) - P));
  }
  c.require(worst <= 1e-9, "inverse consistency worse than 1e-9");

  // Working-language proportions sum to 1 when defined.
  probes::WorkLangReport wl;
  wl.languages = {"alpha", "beta"};
  wl.counts = {{"alpha", 7}, {"beta", 3}};
  wl.finalize();
  double rsum = wl.proportion("alpha") + wl.proportion("beta");
  c.require(std::abs(rsum - 1.0) <= 1e-12, "R_i sum != 1");

  // LAPE analytic cases.
  c.require(probes::lape_entropy({1.0}) == 0.0, "entropy of delta != 0");
  c.require(std::abs(probes::lape_entropy({0.5, 0.5}) - std::log(2.0)) <= 1e-12,
            "entropy of uniform-2 != ln 2");
  probes::NeuronRecord n;
  n.p = {0.2, 0.2, 0.4};  // normalizes to (0.25, 0.25, 0.5)
  probes::finish_record(n);
  c.require(std::abs(n.entropy - 1.5 * std::log(2.0)) <= 1e-12 &&
                std::abs(n.entropy - 1.0397) <= 1e-3,
            "entropy of (0.25,0.25,0.5) != 1.0397 nats");
  probes::NeuronRecord dead;
  dead.p = {0.0, 0.0};
  probes::finish_record(dead);
  c.require(dead.dead && dead.entropy == 0.0, "dead neuron not flagged");
  return c;
}

// ---------------------------------------------------------------- criterion 2

Check c2_gradcheck() {
  Check c;
  model::ModelConfig mc;
  mc.n_layers = 2;
  mc.d_model = 16;
  mc.n_heads = 2;
  mc.d_ffn = 32;
  mc.context_length = 8;
  mc.vocab_size = 20;
  model::Checkpoint ckpt = model::init_model(mc, 2024);

  int B = 2, T = 6;
  Rng rng = make_rng(7);
  std::uniform_int_distribution<int> tok(0, mc.vocab_size - 1);
  std::vector<TokenId> inputs, targets;
  for (int k = 0; k < B * T; ++k) {
    inputs.push_back((TokenId)tok(rng));
    targets.push_back((TokenId)tok(rng));
  }

  model::Params grads = model::Params::shaped(mc);
  model::loss_and_grads(ckpt, inputs, targets, B, T, grads);

  auto loss_of = [&]() {
    model::ForwardResult out = model::forward(ckpt, inputs, B, T);
    return model::cross_entropy(out.logits, targets);
  };

  const double h = 1e-5;
  double worst = 0;
  std::string worst_name;
  std::vector<std::pair<std::string, Mat*>> tensors;
  ckpt.params.for_each(
      [&](const std::string& name, Mat& m) { tensors.push_back({name, &m}); });
  std::vector<std::pair<std::string, const Mat*>> gten;
  grads.for_each([&](const std::string& name, const Mat& m) {
    gten.push_back({name, &m});
  });

  for (std::size_t t = 0; t < tensors.size(); ++t) {
    Mat& m = *tensors[t].second;
    const Mat& g = *gten[t].second;
    std::size_t n = m.a.size();
    // probe a handful of coordinates per tensor, always including the
    // largest-gradient one
    std::set<std::size_t> idx = {0, n / 2, n - 1};
    std::size_t gmax = 0;
    for (std::size_t k = 1; k < n; ++k)
      if (std::abs(g.a[k]) > std::abs(g.a[gmax])) gmax = k;
    idx.insert(gmax);
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    for (int k = 0; k < 3; ++k) idx.insert(pick(rng));

    for (std::size_t k : idx) {
      double saved = m.a[k];
      m.a[k] = saved + h;
      double lp = loss_of();
      m.a[k] = saved - h;
      double lm = loss_of();
      m.a[k] = saved;
      double numeric = (lp - lm) / (2 * h);
      double analytic = g.a[k];
      double rel = std::abs(numeric - analytic) /
                   std::max({std::abs(numeric), std::abs(analytic), 1e-6});
      if (rel > worst) {
        worst = rel;
        worst_name = tensors[t].first;
      }
    }
  }
  std::ostringstream msg;
  msg << "worst rel err " << worst << " in " << worst_name;
  c.require(worst <= 1e-4, msg.str());
  return c;
}

// ---------------------------------------------------------------- criterion 3

Check c3_lens_identity() {
  Check c;
  model::ModelConfig mc;
  mc.n_layers = 4;
  mc.d_model = 32;
  mc.n_heads = 4;
  mc.d_ffn = 64;
  mc.context_length = 128;
  mc.vocab_size = 64;
  model::Checkpoint ckpt = model::init_model(mc, 31);

  Rng rng = make_rng(32);
  std::uniform_int_distribution<int> tok(0, mc.vocab_size - 1);
  model::CaptureFlags flags;
  flags.residuals = true;

  int agree = 0, total = 0;
  for (int s = 0; s < 8 && total < 1000; ++s) {
    std::vector<TokenId> seq;
    for (int t = 0; t < 125; ++t) seq.push_back((TokenId)tok(rng));
    model::ForwardResult out = model::forward(ckpt, seq, flags);
    for (int pos = 0; pos < (int)seq.size() && total < 1000; ++pos) {
      TokenId lens =
          probes::logit_lens(ckpt, out.capture, mc.n_layers - 1, pos);
      const double* lp = out.logits.row(pos);
      TokenId direct = 0;
      for (int v = 1; v < mc.vocab_size; ++v)
        if (lp[v] > lp[direct]) direct = (TokenId)v;
      ++total;
      if (lens == direct) ++agree;
    }
  }
  std::ostringstream msg;
  msg << agree << "/" << total << " positions agree";
  c.require(total == 1000 && agree == total, msg.str());
  return c;
}

// ---------------------------------------------------------------- criterion 4

Check c4_oracle_equivalences() {
  Check c;
  model::ModelConfig mc;
  mc.n_layers = 2;
  mc.d_model = 16;
  mc.n_heads = 2;
  mc.d_ffn = 24;
  mc.context_length = 32;
  mc.vocab_size = 32;
  model::Checkpoint ckpt = model::init_model(mc, 404);

  Rng rng = make_rng(405);
  std::uniform_int_distribution<int> tok(0, mc.vocab_size - 1);
  std::map<std::string, std::vector<std::vector<TokenId>>> samples;
  for (const std::string lang : {"alpha", "beta"}) {
    for (int s = 0; s < 6; ++s) {
      std::vector<TokenId> seq;
      for (int t = 0; t < 32; ++t) seq.push_back((TokenId)tok(rng));
      samples[lang].push_back(std::move(seq));
    }
  }
  probes::LapeReport rep = probes::lape_scores(ckpt, samples, 100);

  // Oracle 1: recount every p_{layer,neuron,language} with a double loop
  // over captured activations.
  model::CaptureFlags flags;
  flags.ffn_hidden = true;
  double worst = 0;
  std::size_t li = 0;
  for (const auto& [lang, seqs] : samples) {
    std::vector<std::vector<std::int64_t>> hits(
        (std::size_t)mc.n_layers, std::vector<std::int64_t>(mc.d_ffn, 0));
    std::int64_t total = 0;
    for (const auto& seq : seqs) {
      model::ForwardResult out = model::forward(ckpt, seq, flags);
      total += (std::int64_t)seq.size();
      for (int l = 0; l < mc.n_layers; ++l)
        for (int r = 0; r < out.capture.ffn_hidden[(std::size_t)l].rows; ++r)
          for (int j = 0; j < mc.d_ffn; ++j)
            if (out.capture.ffn_hidden[(std::size_t)l].at(r, j) > 0)
              ++hits[(std::size_t)l][(std::size_t)j];
    }
    for (const auto& n : rep.neurons) {
      double oracle =
          (double)hits[(std::size_t)n.layer][(std::size_t)n.index] /
          (double)total;
      worst = std::max(worst, std::abs(n.p[li] - oracle));
    }
    ++li;
  }
  c.require(worst <= 1e-9, "LAPE recount deviates by " + std::to_string(worst));

  // Oracle 2: Pearson against an explicit two-pass computation.
  std::normal_distribution<double> nd(0, 1);
  std::vector<double> x, y;
  for (int k = 0; k < 64; ++k) {
    double v = nd(rng);
    x.push_back(v);
    y.push_back(0.4 * v + nd(rng));
  }
  double mx = 0, my = 0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    mx += x[k];
    my += y[k];
  }
  mx /= (double)x.size();
  my /= (double)y.size();
  double cov = 0, vx = 0, vy = 0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    cov += (x[k] - mx) * (y[k] - my);
    vx += (x[k] - mx) * (x[k] - mx);
    vy += (y[k] - my) * (y[k] - my);
  }
  double oracle_r = cov / std::sqrt(vx * vy);
  c.require(std::abs(estimator::pearson(x, y) - oracle_r) <= 1e-9,
            "pearson deviates from two-pass oracle");

  // Oracle 3: neuron selection against an independent sort-and-filter.
  probes::LapeSelection sel = probes::select_transfer_neurons(rep, 0.3);
  std::vector<const probes::NeuronRecord*> live;
  for (const auto& n : rep.neurons)
    if (!n.dead) live.push_back(&n);
  std::stable_sort(live.begin(), live.end(),
                   [](const probes::NeuronRecord* a,
                      const probes::NeuronRecord* b) {
                     if (a->entropy != b->entropy)
                       return a->entropy < b->entropy;
                     if (a->layer != b->layer) return a->layer < b->layer;
                     return a->index < b->index;
                   });
  std::size_t k = std::max<std::size_t>(
      1, (std::size_t)std::floor(0.3 * (double)live.size()));
  live.resize(std::min(k, live.size()));
  std::vector<double> pool;
  for (const auto* n : live)
    for (double p : n->p) pool.push_back(p);
  std::sort(pool.begin(), pool.end());
  std::size_t idx = (std::size_t)std::ceil(0.9 * (double)pool.size());
  if (idx > 0) --idx;
  double thr = pool[idx];
  c.require(sel.n_candidates == (int)live.size(), "candidate count differs");
  c.require(sel.activation_threshold == thr, "threshold differs");
  std::map<std::string, std::set<probes::NeuronRef>> oracle_sets;
  for (const auto* n : live)
    for (std::size_t i = 0; i < rep.languages.size(); ++i)
      if (n->p[i] >= thr)
        oracle_sets[rep.languages[i]].insert({n->layer, n->index});
  for (const auto& lang : rep.languages) {
    c.require(sel.per_language[lang] == oracle_sets[lang],
              "selected set differs for " + lang);
    c.require(sel.counts.at(lang) == (std::int64_t)oracle_sets[lang].size(),
              "selected count differs for " + lang);
  }
  return c;
}

// -------------------------------------------------- heavy runs (criteria 5-8)

harness::ExperimentConfig mono_config(const std::string& root) {
  harness::ExperimentConfig c;
  c.kind = harness::ExperimentKind::MonoTrain;
  c.output_dir = root + "/mono_alpha";
  c.seed = 11;
  c.mono_language = "alpha";
  c.dominant = "alpha";
  c.target = "beta";
  c.dominant_tokens = 3'000'000;
  c.model.n_layers = 6;
  c.model.d_model = 128;
  c.model.n_heads = 4;
  c.model.d_ffn = 256;
  c.model.context_length = 32;
  c.train.steps = 2000;
  c.train.batch_size = 64;
  c.train.seq_len = 32;
  c.train.save_interval = 500;
  c.probes.final_only = true;
  c.suite_tasks = 200;
  c.canonical_text = "acceptance mono alpha v1";
  return c;
}

std::string final_checkpoint(const harness::RunManifest& m) {
  std::string best;
  for (const auto& a : m.of_kind("checkpoint"))
    if (a.path > best) best = a.path;  // ckpt_%06d.bin: lexicographic = latest
  if (best.empty()) throw Error("no checkpoint artifact in " + m.run_dir);
  return (fs::path(m.run_dir) / best).string();
}

harness::ExperimentConfig continual_config(const std::string& root,
                                           const std::string& start_ckpt) {
  harness::ExperimentConfig c = mono_config(root);
  c.kind = harness::ExperimentKind::ContinualPretrain;
  c.output_dir = root + "/continual_beta";
  c.seed = 12;
  c.mono_language.clear();
  c.start_checkpoint = start_ckpt;
  c.target_tokens = 3'000'000;
  c.trace_fraction = 0.02;
  c.train.steps = 4000;
  c.train.save_interval = 200;
  c.probes.final_only = false;
  c.probes.every = 1;
  // counts of ~20 selected neurons resolve the LT trend far better than
  // the ~4 the default 5% quantile yields at d_ffn = 256
  c.probes.lape_q = 0.15;
  c.canonical_text = "acceptance continual beta v2";
  return c;
}

harness::ExperimentConfig sweep_config(const std::string& root,
                                       const std::string& start_ckpt) {
  harness::ExperimentConfig c = mono_config(root);
  c.kind = harness::ExperimentKind::MixtureSweep;
  c.output_dir = root + "/sweep_beta";
  c.seed = 13;
  c.mono_language.clear();
  c.start_checkpoint = start_ckpt;
  c.dominant_tokens = 1'000'000;  // fixed A budget mixed into every cell
  // B shares ~0.13, 0.50, 0.86: wide spacing, because probe jitter across
  // neighboring checkpoints is of order 0.05 in R_B and 2-3 neurons in LT_B
  c.sweep_budgets = {150'000, 1'000'000, 6'000'000};
  c.trace_fraction = 0.02;  // overridden per cell by the sweep driver
  c.train.steps = 2500;
  c.train.save_interval = 500;
  c.probes.final_only = false;  // the sweep driver averages the last three
  c.probes.every = 1;           // probed checkpoints per cell
  c.probes.lape_q = 0.15;          // see continual_config
  c.probes.per_identifier = 40;    // final R_B rests on ~200 prompts
  c.canonical_text = "acceptance sweep beta v5";
  return c;
}

struct BabelSeries {
  std::vector<std::int64_t> wl_steps;
  std::vector<double> r_dominant;
  std::vector<double> lt_target;
  std::vector<double> transfer;  // defined points only, in step order
};

BabelSeries load_series(const std::string& run_dir,
                        const std::string& dominant,
                        const std::string& target) {
  BabelSeries s;
  for (const auto& j : read_jsonl(run_dir + "/worklang.jsonl")) {
    if (!j.at("report").at("defined").get<bool>()) continue;
    s.wl_steps.push_back(j.at("step").get<std::int64_t>());
    s.r_dominant.push_back(
        j.at("report").at("proportions").at(dominant).get<double>());
  }
  for (const auto& j : read_jsonl(run_dir + "/lape.jsonl"))
    s.lt_target.push_back(j.at("counts").at(target).get<double>());
  for (const auto& j : read_jsonl(run_dir + "/transfer.jsonl"))
    if (j.at("defined").get<bool>())
      s.transfer.push_back(j.at("report").at("proportion").get<double>());
  return s;
}

Check c5_babel_dynamics(const std::string& run_dir, std::int64_t first_step,
                        std::int64_t total_steps) {
  Check c;
  BabelSeries s = load_series(run_dir, "alpha", "beta");
  c.require(s.wl_steps.size() >= 5, "fewer than 5 defined worklang points");
  if (!c.ok) return c;

  std::vector<double> r = estimator::smooth(s.r_dominant, 5);
  std::int64_t early_cut = first_step + total_steps / 10;
  bool starts_high = false;
  for (std::size_t k = 0; k < r.size(); ++k)
    if (s.wl_steps[k] <= early_cut && r[k] >= 0.5) starts_high = true;
  std::ostringstream m1;
  m1 << "smoothed R_A: first " << r.front() << ", last " << r.back();
  c.require(starts_high, "R_A never >= 0.5 within first 10% (" + m1.str() + ")");
  c.require(r.back() <= 0.2, "R_A ends above 0.2 (" + m1.str() + ")");

  c.require(s.lt_target.size() >= 5, "fewer than 5 LAPE points");
  if (!c.ok) return c;
  std::vector<double> lt = estimator::smooth(s.lt_target, 5);
  double slack = 0.05 * lt.front();
  for (std::size_t k = 0; k + 1 < lt.size(); ++k) {
    if (lt[k + 1] <= lt[k] + slack) continue;
    std::ostringstream m2;
    m2 << "smoothed LT_B rises at point " << k + 1 << " (" << lt[k] << " -> "
       << lt[k + 1] << ", slack " << slack << ")";
    c.require(false, m2.str());
    break;  // first violation is enough detail
  }

  c.require(s.transfer.size() >= 2, "fewer than 2 defined transfer points");
  if (!c.ok) return c;
  std::ostringstream m3;
  m3 << "transfer first " << s.transfer.front() << " vs last "
     << s.transfer.back();
  c.require(s.transfer.front() > s.transfer.back(), m3.str());
  return c;
}

Check c6_estimator_agreement(const std::string& run_dir) {
  Check c;
  std::vector<double> loss_based, wl_based;
  for (const auto& j : read_jsonl(run_dir + "/estimates.jsonl")) {
    loss_based.push_back(j.at("loss_based").get<double>());
    wl_based.push_back(j.at("worklang_based").get<double>());
  }
  c.require(loss_based.size() >= 3, "fewer than 3 estimate points");
  if (!c.ok) return c;
  double r = estimator::pearson(loss_based, wl_based);
  std::ostringstream msg;
  msg << "pearson r = " << r << " over " << loss_based.size() << " points";
  c.require(r >= 0.8, msg.str());
  if (c.ok) c.why = msg.str();
  return c;
}

// ---------------------------------------------------------------- criterion 7

Check c7_algorithm_exactness() {
  Check c;
  model::LossTrace trace;
  for (std::int64_t s = 1; s <= 300; ++s)
    trace.entries.push_back(
        {s, 4.0 - 3.0 * (double)(s - 1) / 299.0});

  // planted peak at checkpoint index 4 (step 150)
  estimator::ScoreSeries scores;
  for (int k = 0; k < 10; ++k)
    scores.points.push_back(
        {30 * (std::int64_t)(k + 1), 1.0 - std::abs(k - 4) * 0.1});
  std::uint64_t eta_d = 1'000'000;
  estimator::MixturePlan plan =
      estimator::plan_target_tokens(trace, scores, eta_d, 5);
  c.require(plan.best_index == 4 && plan.best_step == 150,
            "planted peak not recovered");
  double P = (plan.loss_at_best - plan.anchors.final) /
             (plan.anchors.initial - plan.anchors.final);
  c.require(!plan.unbounded &&
                plan.eta_target == (double)eta_d / P - (double)eta_d,
            "eta_target not float-exact");

  // P = 1: best checkpoint sits exactly at the init anchor's loss. On this
  // linear trace the window mean over 90..100 equals the loss at step 95.
  estimator::ScoreSeries at_init;
  at_init.points = {{50, 0.1}, {95, 0.9}, {200, 0.2}};
  estimator::MixturePlan p1 =
      estimator::plan_target_tokens(trace, at_init, eta_d, 1);
  c.require(p1.proportion.value == 1.0 && p1.eta_target == 0.0,
            "P=1 does not give eta_target = 0");

  // P = 0: best checkpoint at the trace minimum -> unbounded demand.
  estimator::ScoreSeries at_min;
  at_min.points = {{50, 0.1}, {95, 0.2}, {300, 0.9}};
  estimator::MixturePlan p0 =
      estimator::plan_target_tokens(trace, at_min, eta_d, 1);
  c.require(p0.proportion.value == 0.0 && p0.unbounded,
            "P=0 not reported unbounded");
  return c;
}

// ---------------------------------------------------------------- criterion 8

Check c8_sweep_trend(const harness::RunManifest& m) {
  Check c;
  nlohmann::json sweep = nlohmann::json::parse(
      harness::read_file((fs::path(m.run_dir) / "sweep.json").string()));
  const auto& cells = sweep.at("cells");
  c.require(cells.size() == 3, "expected 3 sweep cells");
  if (!c.ok) return c;
  std::ostringstream msg;
  for (std::size_t k = 0; k + 1 < cells.size(); ++k) {
    double r0 = cells[k].at("final_r_target").get<double>();
    double r1 = cells[k + 1].at("final_r_target").get<double>();
    double l0 = cells[k].at("final_lt_target").get<double>();
    double l1 = cells[k + 1].at("final_lt_target").get<double>();
    msg.str("");
    msg << "cells " << k << "->" << k + 1 << ": R_B " << r0 << " -> " << r1
        << ", LT_B " << l0 << " -> " << l1;
    c.require(cells[k].at("final_r_defined").get<bool>() &&
                  cells[k + 1].at("final_r_defined").get<bool>(),
              "R_B undefined in a cell");
    c.require(r1 > r0, "R_B not strictly increasing (" + msg.str() + ")");
    c.require(l1 < l0, "LT_B not strictly decreasing (" + msg.str() + ")");
  }
  return c;
}

// ---------------------------------------------------------------- criterion 9

Check c9_determinism(const std::string& root) {
  Check c;
  auto micro = [&](const std::string& dir) {
    harness::ExperimentConfig cfg;
    cfg.kind = harness::ExperimentKind::MonoTrain;
    cfg.output_dir = dir;
    cfg.seed = 9;
    cfg.mono_language = "alpha";
    cfg.dominant_tokens = 20000;
    cfg.model.n_layers = 2;
    cfg.model.d_model = 32;
    cfg.model.n_heads = 2;
    cfg.model.d_ffn = 64;
    cfg.model.context_length = 32;
    cfg.train.steps = 60;
    cfg.train.batch_size = 8;
    cfg.train.seq_len = 16;
    cfg.train.save_interval = 30;
    cfg.probes.final_only = true;
    cfg.probes.per_identifier = 2;
    cfg.probes.lape_tokens = 512;
    cfg.probes.eval_max_new = 12;
    cfg.suite_tasks = 12;
    cfg.canonical_text = "acceptance determinism micro v1";
    return harness::run(cfg);
  };
  harness::RunManifest a = micro(root + "/det_a");
  harness::RunManifest b = micro(root + "/det_b");
  c.require(a.status == "complete" && b.status == "complete",
            "micro run failed: " + a.failure + b.failure);
  if (!c.ok) return c;
  c.require(harness::read_file(a.run_dir + "/trace.jsonl") ==
                harness::read_file(b.run_dir + "/trace.jsonl"),
            "loss traces differ");
  auto ca = a.of_kind("checkpoint");
  auto cb = b.of_kind("checkpoint");
  c.require(ca.size() == cb.size(), "checkpoint counts differ");
  if (!c.ok) return c;
  for (std::size_t k = 0; k < ca.size(); ++k) {
    c.require(ca[k].path == cb[k].path, "checkpoint names differ");
    c.require(
        harness::read_file((fs::path(a.run_dir) / ca[k].path).string()) ==
            harness::read_file((fs::path(b.run_dir) / cb[k].path).string()),
        "checkpoint bytes differ at " + ca[k].path);
  }
  return c;
}

bool report_line(int num, const std::string& title, const Check& c) {
  std::cout << (c.ok ? "[PASS]" : "[FAIL]") << " criterion " << num << ": "
            << title;
  if (!c.why.empty()) std::cout << " — " << c.why;
  std::cout << std::endl;
  return c.ok;
}

Check guarded(const std::function<Check()>& f) {
  try {
    return f();
  } catch (const std::exception& e) {
    Check c;
    c.ok = false;
    c.why = std::string("exception: ") + e.what();
    return c;
  }
}

}  // namespace

int main() {
  const std::string root = accept_root();
  fs::create_directories(root);
  bool all_ok = true;

  all_ok &= report_line(1, "formula suite", guarded(c1_formula_suite));
  all_ok &= report_line(2, "gradient check", guarded(c2_gradcheck));
  all_ok &= report_line(3, "logit-lens identity", guarded(c3_lens_identity));
  all_ok &= report_line(4, "oracle equivalences",
                        guarded(c4_oracle_equivalences));

  // Heavy runs. run() is idempotent, so completed stages are served from
  // cache on re-invocation.
  Check c5, c6, c8;
  std::string continual_dir;
  try {
    harness::RunManifest mono = harness::run(mono_config(root));
    if (mono.status != "complete")
      throw Error("mono run failed: " + mono.failure);
    std::string start = final_checkpoint(mono);

    harness::RunManifest cont =
        harness::run(continual_config(root, start));
    if (cont.status != "complete")
      throw Error("continual run failed: " + cont.failure);
    continual_dir = cont.run_dir;
    c5 = guarded([&] { return c5_babel_dynamics(cont.run_dir, 2000, 4000); });
    c6 = guarded([&] { return c6_estimator_agreement(cont.run_dir); });

    harness::RunManifest sweep = harness::run(sweep_config(root, start));
    if (sweep.status != "complete")
      throw Error("sweep run failed: " + sweep.failure);
    c8 = guarded([&] { return c8_sweep_trend(sweep); });
  } catch (const std::exception& e) {
    Check failed;
    failed.ok = false;
    failed.why = std::string("exception: ") + e.what();
    if (c5.why.empty() && c5.ok) c5 = failed;
    if (c6.why.empty() && c6.ok) c6 = failed;
    if (c8.why.empty() && c8.ok) c8 = failed;
  }

  all_ok &= report_line(5, "babel dynamics", c5);
  all_ok &= report_line(6, "estimator agreement", c6);
  all_ok &= report_line(7, "planning exactness",
                        guarded(c7_algorithm_exactness));
  all_ok &= report_line(8, "mixture-sweep trend", c8);
  all_ok &= report_line(9, "determinism",
                        guarded([&] { return c9_determinism(root); }));

  return all_ok ? 0 : 1;
}
