// Logit lens: read an intermediate residual through the model's own
// final norm and unembedding.
#pragma once

#include "babel/model/net.hpp"

namespace babel::probes {

// Argmax token of unembed(final_norm(residual_row)).
inline TokenId lens_token(const model::Checkpoint& ckpt,
                          const double* residual_row) {
  const auto& p = ckpt.params;
  int d = ckpt.config.d_model;
  double mean = 0;
  for (int c = 0; c < d; ++c) mean += residual_row[c];
  mean /= d;
  double var = 0;
  for (int c = 0; c < d; ++c) {
    double t = residual_row[c] - mean;
    var += t * t;
  }
  var /= d;
  double rs = 1.0 / std::sqrt(var + model::kLnEps);
  std::vector<double> normed((std::size_t)d);
  for (int c = 0; c < d; ++c)
    normed[(std::size_t)c] = (residual_row[c] - mean) * rs * p.lnf_g.a[(std::size_t)c] +
                             p.lnf_b.a[(std::size_t)c];
  int V = ckpt.config.vocab_size;
  TokenId best = 0;
  double bestv = -std::numeric_limits<double>::infinity();
  for (int v = 0; v < V; ++v) {
    double s = 0;
    for (int c = 0; c < d; ++c) s += normed[(std::size_t)c] * p.w_un.at(c, v);
    if (s > bestv) {
      bestv = s;
      best = (TokenId)v;
    }
  }
  return best;
}

// Lens over a captured forward pass: residual after block `layer`
// (0-based) at a flat position index.
inline TokenId logit_lens(const model::Checkpoint& ckpt,
                          const model::ActivationCapture& cap, int layer,
                          int position) {
  if (layer < 0 || layer >= (int)cap.residuals.size())
    throw Error("logit_lens: layer index out of range");
  const Mat& r = cap.residuals[(std::size_t)layer];
  if (position < 0 || position >= r.rows)
    throw Error("logit_lens: position out of range");
  return lens_token(ckpt, r.row(position));
}

}  // namespace babel::probes
