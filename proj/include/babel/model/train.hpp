// Adam training loop with loss tracing and periodic checkpointing.
#pragma once

#include <filesystem>
#include <functional>
#include <iomanip>

#include "babel/model/net.hpp"
#include "babel/toylang/mixture.hpp"

namespace babel::model {

struct LossTraceEntry {
  std::int64_t step;
  double loss;
};

struct LossTrace {
  std::vector<LossTraceEntry> entries;

  void check() const {
    std::int64_t prev = -1;
    for (const auto& e : entries) {
      if (e.step <= prev) throw Error("loss trace: steps not strictly increasing");
      if (!(std::isfinite(e.loss) && e.loss > 0))
        throw Error("loss trace: non-finite or non-positive loss");
      prev = e.step;
    }
  }

  void save(const std::string& path) const {
    std::ofstream f(path);
    if (!f) throw Error("cannot write loss trace: " + path);
    for (const auto& e : entries) {
      nlohmann::ordered_json j{{"step", e.step}, {"loss", e.loss}};
      f << j.dump() << "\n";
    }
  }

  static LossTrace load(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw Error("cannot read loss trace: " + path);
    LossTrace t;
    std::string line;
    while (std::getline(f, line)) {
      if (line.empty()) continue;
      nlohmann::json j = nlohmann::json::parse(line);
      t.entries.push_back({j.at("step").get<std::int64_t>(),
                           j.at("loss").get<double>()});
    }
    return t;
  }

  double loss_at_step(std::int64_t step) const {
    for (const auto& e : entries)
      if (e.step == step) return e.loss;
    throw Error("loss trace: no entry for step " + std::to_string(step));
  }
};

struct AdamState {
  Params m, v;
  std::int64_t t = 0;
};

// One optimizer step over accumulated grads; fixed tensor order.
inline void adam_step(Params& params, const Params& grads, AdamState& st,
                      const TrainConfig& tc, double lr) {
  ++st.t;
  double b1 = tc.beta1, b2 = tc.beta2;
  double bc1 = 1.0 - std::pow(b1, (double)st.t);
  double bc2 = 1.0 - std::pow(b2, (double)st.t);

  // global-norm clip
  double norm2 = 0;
  grads.for_each([&](const std::string&, const Mat& g) {
    for (double x : g.a) norm2 += x * x;
  });
  double norm = std::sqrt(norm2);
  double clip = (tc.grad_clip > 0 && norm > tc.grad_clip)
                    ? tc.grad_clip / norm
                    : 1.0;

  std::vector<Mat*> mm, vv;
  st.m.for_each([&](const std::string&, Mat& m) { mm.push_back(&m); });
  st.v.for_each([&](const std::string&, Mat& m) { vv.push_back(&m); });
  std::size_t idx = 0;
  std::vector<const Mat*> gs;
  grads.for_each([&](const std::string&, const Mat& g) { gs.push_back(&g); });
  params.for_each([&](const std::string&, Mat& p) {
    Mat& m = *mm[idx];
    Mat& v = *vv[idx];
    const Mat& g = *gs[idx];
    ++idx;
    for (std::size_t i = 0; i < p.a.size(); ++i) {
      double gi = g.a[i] * clip;
      m.a[i] = b1 * m.a[i] + (1 - b1) * gi;
      v.a[i] = b2 * v.a[i] + (1 - b2) * gi * gi;
      double mhat = m.a[i] / bc1;
      double vhat = v.a[i] / bc2;
      p.a[i] -= lr * mhat / (std::sqrt(vhat) + tc.adam_eps);
    }
  });
}

struct TrainResult {
  std::vector<std::string> checkpoint_paths;
  std::vector<std::int64_t> checkpoint_steps;
  LossTrace trace;
  Checkpoint final;
};

// Continual or from-scratch training over a mixed stream. Checkpoints are
// written every save_interval steps (absolute step numbering) plus at the
// final step.
inline TrainResult train(
    const Checkpoint& start, const toylang::MixedStream& stream,
    const TrainConfig& tc, const std::string& out_dir,
    const std::function<void(std::int64_t, double)>& progress = {}) {
  tc.validate(start.config);
  if (stream.size() < (std::size_t)tc.seq_len + 1)
    throw Error("train: stream shorter than one window");

  namespace fs = std::filesystem;
  fs::create_directories(out_dir);

  Checkpoint ckpt = start;
  Params grads = Params::shaped(ckpt.config);
  AdamState adam;
  adam.m = Params::shaped(ckpt.config);
  adam.v = Params::shaped(ckpt.config);

  Rng rng = make_rng(derive_seed(tc.seed, 0x737465700aull));
  int B = tc.batch_size, T = tc.seq_len;
  std::uniform_int_distribution<std::size_t> offs(
      0, stream.size() - (std::size_t)T - 1);

  TrainResult res;
  std::vector<TokenId> inputs((std::size_t)B * T), targets((std::size_t)B * T);

  auto save_at = [&](std::int64_t step) {
    std::ostringstream name;
    name << "ckpt_" << std::setw(6) << std::setfill('0') << step << ".bin";
    std::string path = (fs::path(out_dir) / name.str()).string();
    std::ostringstream rs;
    rs << rng;
    ckpt.rng_state = rs.str();
    save_checkpoint(ckpt, path);
    res.checkpoint_paths.push_back(path);
    res.checkpoint_steps.push_back(step);
  };

  for (int s = 1; s <= tc.steps; ++s) {
    std::int64_t abs_step = start.step + s;
    std::map<std::string, std::uint64_t> batch_lang_tokens;
    for (int b = 0; b < B; ++b) {
      std::size_t o = offs(rng);
      for (int t = 0; t < T; ++t) {
        inputs[(std::size_t)b * T + t] = stream.tokens[o + t];
        targets[(std::size_t)b * T + t] = stream.tokens[o + t + 1];
        ++batch_lang_tokens[stream.lang_names[stream.lang[o + t]]];
      }
    }
    double loss = loss_and_grads(ckpt, inputs, targets, B, T, grads);
    if (!std::isfinite(loss)) {
      std::uint64_t bh = fnv1a64(inputs.data(), inputs.size() * sizeof(TokenId));
      throw Error("train: non-finite loss at step " + std::to_string(abs_step) +
                  " (batch hash " + std::to_string(bh) + ")");
    }
    adam_step(ckpt.params, grads, adam, tc, tc.lr_at(s));
    ckpt.step = abs_step;
    for (const auto& [lang, n] : batch_lang_tokens)
      ckpt.trained_tokens[lang] += n;
    res.trace.entries.push_back({abs_step, loss});
    if (progress) progress(abs_step, loss);
    if (abs_step % tc.save_interval == 0 || s == tc.steps) {
      if (res.checkpoint_steps.empty() ||
          res.checkpoint_steps.back() != abs_step)
        save_at(abs_step);
    }
  }
  res.trace.check();
  res.final = std::move(ckpt);
  return res;
}

}  // namespace babel::model
