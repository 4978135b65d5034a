// Deterministic greedy and seeded ancestral decoding.
#pragma once

#include "babel/common.hpp"
#include "babel/model/net.hpp"

namespace babel::model {

inline TokenId argmax_row(const Mat& logits, int row) {
  const double* p = logits.row(row);
  TokenId best = 0;
  for (int c = 1; c < logits.cols; ++c)
    if (p[c] > p[best]) best = (TokenId)c;
  return best;
}

struct DecodeHooks {
  // Called once per generated token with the capture of the forward pass
  // that produced it and the position index of the new token's logits.
  std::function<void(const ForwardResult&, int position, TokenId emitted)>
      on_token;
  CaptureFlags flags;
};

// Argmax decoding; stops at EOS, an optional extra stop token, or max_new.
// Returns prompt ++ generated tokens. If the context fills up, the window
// slides (oldest tokens drop out of the conditioning).
inline std::vector<TokenId> greedy_decode(const Checkpoint& ckpt,
                                          const std::vector<TokenId>& prompt,
                                          int max_new, TokenId eos,
                                          TokenId stop_extra = -1,
                                          const DecodeHooks& hooks = {}) {
  if ((int)prompt.size() > ckpt.config.context_length)
    throw Error("greedy_decode: prompt exceeds context length");
  std::vector<TokenId> seq = prompt;
  for (int i = 0; i < max_new; ++i) {
    std::size_t begin =
        seq.size() > (std::size_t)ckpt.config.context_length
            ? seq.size() - (std::size_t)ckpt.config.context_length
            : 0;
    std::vector<TokenId> window(seq.begin() + (std::ptrdiff_t)begin, seq.end());
    ForwardResult out = forward(ckpt, window, hooks.flags);
    int pos = (int)window.size() - 1;
    TokenId next = argmax_row(out.logits, pos);
    if (hooks.on_token) hooks.on_token(out, pos, next);
    seq.push_back(next);
    if (next == eos || next == stop_extra) break;
  }
  return seq;
}

// Samples the next token from the softmax distribution of a logits row.
inline TokenId sample_row(const Mat& logits, int row, Rng& rng) {
  const double* p = logits.row(row);
  double mx = p[0];
  for (int c = 1; c < logits.cols; ++c) mx = std::max(mx, p[c]);
  std::vector<double> probs((std::size_t)logits.cols);
  double z = 0;
  for (int c = 0; c < logits.cols; ++c) {
    probs[(std::size_t)c] = std::exp(p[c] - mx);
    z += probs[(std::size_t)c];
  }
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double r = u(rng) * z;
  double acc = 0;
  for (int c = 0; c < logits.cols; ++c) {
    acc += probs[(std::size_t)c];
    if (r < acc) return (TokenId)c;
  }
  return (TokenId)(logits.cols - 1);
}

// Ancestral (temperature-1) decoding with a caller-provided RNG; otherwise
// identical to greedy_decode. Deterministic for a fixed RNG state.
inline std::vector<TokenId> sample_decode(const Checkpoint& ckpt,
                                          const std::vector<TokenId>& prompt,
                                          int max_new, TokenId eos, Rng& rng,
                                          TokenId stop_extra = -1,
                                          const DecodeHooks& hooks = {}) {
  if ((int)prompt.size() > ckpt.config.context_length)
    throw Error("sample_decode: prompt exceeds context length");
  std::vector<TokenId> seq = prompt;
  for (int i = 0; i < max_new; ++i) {
    std::size_t begin =
        seq.size() > (std::size_t)ckpt.config.context_length
            ? seq.size() - (std::size_t)ckpt.config.context_length
            : 0;
    std::vector<TokenId> window(seq.begin() + (std::ptrdiff_t)begin, seq.end());
    ForwardResult out = forward(ckpt, window, hooks.flags);
    int pos = (int)window.size() - 1;
    TokenId next = sample_row(out.logits, pos, rng);
    if (hooks.on_token) hooks.on_token(out, pos, next);
    seq.push_back(next);
    if (next == eos || next == stop_extra) break;
  }
  return seq;
}

}  // namespace babel::model
