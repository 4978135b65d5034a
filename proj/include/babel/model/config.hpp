#pragma once

#include <nlohmann/json.hpp>

#include "babel/common.hpp"

namespace babel::model {

// Decoder-only transformer: pre-norm blocks, learned absolute positions,
// ReLU FFN, untied unembedding, final norm before unembedding.
struct ModelConfig {
  int n_layers = 6;
  int d_model = 128;
  int n_heads = 4;
  int d_ffn = 512;
  int context_length = 256;
  int vocab_size = 0;

  void validate() const {
    if (vocab_size <= 0) throw Error("model config: vocab_size not set");
    if (n_layers <= 0 || d_model <= 0 || n_heads <= 0 || context_length <= 0)
      throw Error("model config: non-positive dimension");
    if (d_model % n_heads != 0)
      throw Error("model config: d_model not divisible by n_heads");
    if (d_ffn < d_model) throw Error("model config: d_ffn < d_model");
  }

  int head_dim() const { return d_model / n_heads; }

  nlohmann::ordered_json to_json() const {
    return nlohmann::ordered_json{
        {"n_layers", n_layers},   {"d_model", d_model},
        {"n_heads", n_heads},     {"d_ffn", d_ffn},
        {"context_length", context_length}, {"vocab_size", vocab_size}};
  }

  static ModelConfig from_json(const nlohmann::json& j) {
    ModelConfig c;
    c.n_layers = j.at("n_layers");
    c.d_model = j.at("d_model");
    c.n_heads = j.at("n_heads");
    c.d_ffn = j.at("d_ffn");
    c.context_length = j.at("context_length");
    c.vocab_size = j.at("vocab_size");
    c.validate();
    return c;
  }

  // Closed-form parameter count; pinned by a unit test against the
  // instantiated tensors.
  std::int64_t parameter_count() const {
    std::int64_t d = d_model, F = d_ffn, V = vocab_size;
    std::int64_t per_layer = 2 * d                // ln1
                             + 3 * (d * d + d)    // q,k,v
                             + d * d + d          // output proj
                             + 2 * d              // ln2
                             + d * F + F          // ffn in
                             + F * d + d;         // ffn out
    return V * d + (std::int64_t)context_length * d + n_layers * per_layer +
           2 * d + d * V;
  }
};

struct TrainConfig {
  int steps = 2000;
  int batch_size = 64;
  int seq_len = 32;
  double lr = 3e-4;
  int warmup_steps = 100;
  double cosine_final_frac = 0.1;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  double grad_clip = 1.0;
  int save_interval = 250;
  std::uint64_t seed = 0;

  void validate(const ModelConfig& m) const {
    if (steps <= 0 || batch_size <= 0) throw Error("train config: bad sizes");
    if (seq_len <= 1 || seq_len > m.context_length)
      throw Error("train config: seq_len out of range");
    if (save_interval <= 0) throw Error("train config: bad save interval");
  }

  // Linear warmup then cosine decay to cosine_final_frac * lr.
  double lr_at(int step) const {
    if (step <= warmup_steps && warmup_steps > 0)
      return lr * (double)step / warmup_steps;
    double progress =
        steps > warmup_steps
            ? (double)(step - warmup_steps) / (double)(steps - warmup_steps)
            : 1.0;
    if (progress > 1.0) progress = 1.0;
    double lo = cosine_final_frac;
    return lr * (lo + (1.0 - lo) * 0.5 * (1.0 + std::cos(progress * 3.14159265358979323846)));
  }

  nlohmann::ordered_json to_json() const {
    return nlohmann::ordered_json{{"steps", steps},
                                  {"batch_size", batch_size},
                                  {"seq_len", seq_len},
                                  {"lr", lr},
                                  {"warmup_steps", warmup_steps},
                                  {"cosine_final_frac", cosine_final_frac},
                                  {"beta1", beta1},
                                  {"beta2", beta2},
                                  {"adam_eps", adam_eps},
                                  {"grad_clip", grad_clip},
                                  {"save_interval", save_interval},
                                  {"seed", seed}};
  }

  static TrainConfig from_json(const nlohmann::json& j) {
    TrainConfig c;
    c.steps = j.value("steps", c.steps);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.seq_len = j.value("seq_len", c.seq_len);
    c.lr = j.value("lr", c.lr);
    c.warmup_steps = j.value("warmup_steps", c.warmup_steps);
    c.cosine_final_frac = j.value("cosine_final_frac", c.cosine_final_frac);
    c.beta1 = j.value("beta1", c.beta1);
    c.beta2 = j.value("beta2", c.beta2);
    c.adam_eps = j.value("adam_eps", c.adam_eps);
    c.grad_clip = j.value("grad_clip", c.grad_clip);
    c.save_interval = j.value("save_interval", c.save_interval);
    c.seed = j.value("seed", c.seed);
    return c;
  }
};

}  // namespace babel::model
