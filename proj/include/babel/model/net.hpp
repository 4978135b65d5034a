// Forward and backward passes with activation capture.
#pragma once

#include "babel/model/params.hpp"
#include "babel/vocab.hpp"

namespace babel::model {

constexpr double kLnEps = 1e-5;

struct CaptureFlags {
  bool residuals = false;   // residual stream after every block
  bool ffn_hidden = false;  // post-ReLU FFN activations per layer
};

struct ActivationCapture {
  int batch = 0;
  int seq = 0;
  std::vector<Mat> residuals;   // per layer, (B*T, d)
  std::vector<Mat> ffn_hidden;  // per layer, (B*T, F)
};

namespace detail {

struct LayerCache {
  Mat x_in;
  Mat ln1_out, xhat1;
  std::vector<double> rstd1;
  Mat q, k, v;
  Mat probs;     // (B*H*T, T) causal softmax rows
  Mat att_mix;   // heads concatenated, before output projection
  Mat res1;
  Mat ln2_out, xhat2;
  std::vector<double> rstd2;
  Mat h_pre, h;
};

struct ForwardCache {
  int B = 0, T = 0;
  std::vector<TokenId> tokens;
  std::vector<LayerCache> layers;
  Mat x_final;
  Mat lnf_out, xhatf;
  std::vector<double> rstdf;
  Mat logits;
};

inline void layernorm_fwd(const Mat& x, const Mat& g, const Mat& b, Mat& y,
                          Mat& xhat, std::vector<double>& rstd) {
  int N = x.rows, d = x.cols;
  y = Mat(N, d);
  xhat = Mat(N, d);
  rstd.assign((std::size_t)N, 0.0);
  for (int r = 0; r < N; ++r) {
    const double* xp = x.row(r);
    double mean = 0;
    for (int c = 0; c < d; ++c) mean += xp[c];
    mean /= d;
    double var = 0;
    for (int c = 0; c < d; ++c) {
      double t = xp[c] - mean;
      var += t * t;
    }
    var /= d;
    double rs = 1.0 / std::sqrt(var + kLnEps);
    rstd[(std::size_t)r] = rs;
    double* xh = xhat.row(r);
    double* yp = y.row(r);
    for (int c = 0; c < d; ++c) {
      xh[c] = (xp[c] - mean) * rs;
      yp[c] = xh[c] * g.a[(std::size_t)c] + b.a[(std::size_t)c];
    }
  }
}

// dx += LN backprop of dy; dg/db accumulated.
inline void layernorm_bwd(const Mat& dy, const Mat& g, const Mat& xhat,
                          const std::vector<double>& rstd, Mat& dx, Mat& dg,
                          Mat& db) {
  int N = dy.rows, d = dy.cols;
  for (int r = 0; r < N; ++r) {
    const double* dyp = dy.row(r);
    const double* xh = xhat.row(r);
    double* dxp = dx.row(r);
    double m1 = 0, m2 = 0;
    for (int c = 0; c < d; ++c) {
      double dxhat = dyp[c] * g.a[(std::size_t)c];
      m1 += dxhat;
      m2 += dxhat * xh[c];
      dg.a[(std::size_t)c] += dyp[c] * xh[c];
      db.a[(std::size_t)c] += dyp[c];
    }
    m1 /= d;
    m2 /= d;
    double rs = rstd[(std::size_t)r];
    for (int c = 0; c < d; ++c) {
      double dxhat = dyp[c] * g.a[(std::size_t)c];
      dxp[c] += rs * (dxhat - m1 - xh[c] * m2);
    }
  }
}

inline void linear_fwd(const Mat& x, const Mat& w, const Mat& b, Mat& y) {
  y = Mat(x.rows, w.cols);
  matmul(x, false, w, false, y);
  for (int r = 0; r < y.rows; ++r) {
    double* yp = y.row(r);
    for (int c = 0; c < y.cols; ++c) yp[c] += b.a[(std::size_t)c];
  }
}

// dx += dy W^T ; dW += x^T dy ; db += colsum(dy)
inline void linear_bwd(const Mat& x, const Mat& w, const Mat& dy, Mat& dx,
                       Mat& dw, Mat& dbv) {
  matmul(dy, false, w, true, dx, 1.0, 1.0);
  matmul(x, true, dy, false, dw, 1.0, 1.0);
  for (int r = 0; r < dy.rows; ++r) {
    const double* dyp = dy.row(r);
    for (int c = 0; c < dy.cols; ++c) dbv.a[(std::size_t)c] += dyp[c];
  }
}

}  // namespace detail

struct ForwardResult {
  Mat logits;  // (B*T, V)
  ActivationCapture capture;
};

namespace detail {

// Full forward; cache filled when `cache` non-null (training),
// capture filled when flags request it.
inline void forward_impl(const ModelConfig& cfg, const Params& p,
                         const std::vector<TokenId>& tokens, int B, int T,
                         ForwardCache* cache, const CaptureFlags& flags,
                         ForwardResult& out) {
  if ((int)tokens.size() != B * T) throw Error("forward: token shape mismatch");
  if (T > cfg.context_length) throw Error("forward: sequence exceeds context length");
  int d = cfg.d_model, H = cfg.n_heads, dh = cfg.head_dim(), F = cfg.d_ffn;
  int N = B * T;
  double scale = 1.0 / std::sqrt((double)dh);

  Mat x(N, d);
  for (int i = 0; i < N; ++i) {
    TokenId tok = tokens[(std::size_t)i];
    if (tok < 0 || tok >= cfg.vocab_size) throw Error("forward: token id out of range");
    int t = i % T;
    const double* te = p.tok_emb.row(tok);
    const double* pe = p.pos_emb.row(t);
    double* xp = x.row(i);
    for (int c = 0; c < d; ++c) xp[c] = te[c] + pe[c];
  }

  if (cache) {
    cache->B = B;
    cache->T = T;
    cache->tokens = tokens;
    cache->layers.resize((std::size_t)cfg.n_layers);
  }
  if (flags.residuals) out.capture.residuals.resize((std::size_t)cfg.n_layers);
  if (flags.ffn_hidden) out.capture.ffn_hidden.resize((std::size_t)cfg.n_layers);
  out.capture.batch = B;
  out.capture.seq = T;

  Mat scores(T, T);
  for (int l = 0; l < cfg.n_layers; ++l) {
    const LayerParams& L = p.layers[(std::size_t)l];
    LayerCache tmp;
    LayerCache& c = cache ? cache->layers[(std::size_t)l] : tmp;
    c.x_in = x;
    layernorm_fwd(c.x_in, L.ln1_g, L.ln1_b, c.ln1_out, c.xhat1, c.rstd1);
    linear_fwd(c.ln1_out, L.wq, L.bq, c.q);
    linear_fwd(c.ln1_out, L.wk, L.bk, c.k);
    linear_fwd(c.ln1_out, L.wv, L.bv, c.v);
    c.probs = Mat(B * H * T, T);
    c.att_mix = Mat(N, d);
    for (int b = 0; b < B; ++b) {
      for (int h = 0; h < H; ++h) {
        const double* qp = c.q.row(b * T) + h * dh;
        const double* kp = c.k.row(b * T) + h * dh;
        const double* vp = c.v.row(b * T) + h * dh;
        cblas_dgemm(CblasRowMajor, CblasNoTrans, CblasTrans, T, T, dh, scale,
                    qp, d, kp, d, 0.0, scores.a.data(), T);
        double* prow = c.probs.row((b * H + h) * T);
        for (int t = 0; t < T; ++t) {
          double* srow = scores.row(t);
          double mx = srow[0];
          for (int u = 1; u <= t; ++u) mx = std::max(mx, srow[u]);
          double sum = 0;
          for (int u = 0; u <= t; ++u) {
            srow[u] = std::exp(srow[u] - mx);
            sum += srow[u];
          }
          double* pr = prow + (std::size_t)t * T;
          for (int u = 0; u <= t; ++u) pr[u] = srow[u] / sum;
          for (int u = t + 1; u < T; ++u) pr[u] = 0.0;
        }
        double* mix = c.att_mix.row(b * T) + h * dh;
        cblas_dgemm(CblasRowMajor, CblasNoTrans, CblasNoTrans, T, dh, T, 1.0,
                    prow, T, vp, d, 0.0, mix, d);
      }
    }
    Mat att_out;
    linear_fwd(c.att_mix, L.wo, L.bo, att_out);
    c.res1 = c.x_in;
    axpy(1.0, att_out, c.res1);
    layernorm_fwd(c.res1, L.ln2_g, L.ln2_b, c.ln2_out, c.xhat2, c.rstd2);
    linear_fwd(c.ln2_out, L.w1, L.b1, c.h_pre);
    c.h = c.h_pre;
    for (double& v : c.h.a) v = v > 0 ? v : 0.0;
    Mat ffn_out;
    linear_fwd(c.h, L.w2, L.b2, ffn_out);
    x = c.res1;
    axpy(1.0, ffn_out, x);
    if (flags.residuals) out.capture.residuals[(std::size_t)l] = x;
    if (flags.ffn_hidden) out.capture.ffn_hidden[(std::size_t)l] = c.h;
  }

  Mat lnf_tmp, xhatf_tmp;
  std::vector<double> rstdf_tmp;
  Mat& lnf_out = cache ? cache->lnf_out : lnf_tmp;
  Mat& xhatf = cache ? cache->xhatf : xhatf_tmp;
  std::vector<double>& rstdf = cache ? cache->rstdf : rstdf_tmp;
  if (cache) cache->x_final = x;
  layernorm_fwd(x, p.lnf_g, p.lnf_b, lnf_out, xhatf, rstdf);
  out.logits = Mat(N, cfg.vocab_size);
  matmul(lnf_out, false, p.w_un, false, out.logits);
  if (cache) cache->logits = out.logits;
}

}  // namespace detail

inline ForwardResult forward(const Checkpoint& ckpt,
                             const std::vector<TokenId>& tokens, int B, int T,
                             const CaptureFlags& flags = CaptureFlags{}) {
  ForwardResult out;
  detail::forward_impl(ckpt.config, ckpt.params, tokens, B, T, nullptr, flags,
                       out);
  return out;
}

// Single-sequence convenience.
inline ForwardResult forward(const Checkpoint& ckpt,
                             const std::vector<TokenId>& tokens,
                             const CaptureFlags& flags = CaptureFlags{}) {
  return forward(ckpt, tokens, 1, (int)tokens.size(), flags);
}

// Mean next-token cross-entropy over all positions; fills dlogits
// (softmax minus one-hot, already divided by the position count) when given.
inline double cross_entropy(const Mat& logits,
                            const std::vector<TokenId>& targets,
                            Mat* dlogits = nullptr) {
  int N = logits.rows, V = logits.cols;
  if ((int)targets.size() != N) throw Error("cross_entropy: target size mismatch");
  if (dlogits) *dlogits = Mat(N, V);
  double loss = 0;
  for (int r = 0; r < N; ++r) {
    const double* lp = logits.row(r);
    double mx = lp[0];
    for (int c = 1; c < V; ++c) mx = std::max(mx, lp[c]);
    double sum = 0;
    for (int c = 0; c < V; ++c) sum += std::exp(lp[c] - mx);
    double lse = mx + std::log(sum);
    TokenId y = targets[(std::size_t)r];
    if (y < 0 || y >= V) throw Error("cross_entropy: target out of range");
    loss += lse - lp[y];
    if (dlogits) {
      double* dp = dlogits->row(r);
      for (int c = 0; c < V; ++c) dp[c] = std::exp(lp[c] - lse) / N;
      dp[y] -= 1.0 / N;
    }
  }
  return loss / N;
}

namespace detail {

// Backprop of mean cross-entropy; grads accumulated into `g`.
inline void backward_impl(const ModelConfig& cfg, const Params& p,
                          const ForwardCache& cache,
                          const std::vector<TokenId>& targets, Params& g) {
  int B = cache.B, T = cache.T, N = B * T;
  int d = cfg.d_model, H = cfg.n_heads, dh = cfg.head_dim();
  double scale = 1.0 / std::sqrt((double)dh);

  Mat dlogits;
  cross_entropy(cache.logits, targets, &dlogits);

  Mat dlnf_out(N, d);
  matmul(dlogits, false, p.w_un, true, dlnf_out);
  matmul(cache.lnf_out, true, dlogits, false, g.w_un, 1.0, 1.0);

  Mat dx(N, d);
  layernorm_bwd(dlnf_out, p.lnf_g, cache.xhatf, cache.rstdf, dx, g.lnf_g,
                g.lnf_b);

  Mat scores(T, T);
  for (int l = cfg.n_layers - 1; l >= 0; --l) {
    const LayerParams& L = p.layers[(std::size_t)l];
    LayerParams& G = g.layers[(std::size_t)l];
    const LayerCache& c = cache.layers[(std::size_t)l];

    // FFN branch: dx is the gradient at the block output (res1 + ffn_out)
    Mat dh_post(N, cfg.d_ffn);
    matmul(dx, false, L.w2, true, dh_post);
    matmul(c.h, true, dx, false, G.w2, 1.0, 1.0);
    for (int r = 0; r < N; ++r) {
      const double* dr = dx.row(r);
      for (int col = 0; col < d; ++col) G.b2.a[(std::size_t)col] += dr[col];
    }
    for (std::size_t i = 0; i < dh_post.a.size(); ++i)
      if (c.h_pre.a[i] <= 0) dh_post.a[i] = 0.0;
    Mat dln2_out(N, d);
    matmul(dh_post, false, L.w1, true, dln2_out);
    matmul(c.ln2_out, true, dh_post, false, G.w1, 1.0, 1.0);
    for (int r = 0; r < N; ++r) {
      const double* dr = dh_post.row(r);
      for (int col = 0; col < cfg.d_ffn; ++col)
        G.b1.a[(std::size_t)col] += dr[col];
    }
    // dres1 = dx (residual skip) + LN2 backprop
    Mat dres1 = dx;
    layernorm_bwd(dln2_out, L.ln2_g, c.xhat2, c.rstd2, dres1, G.ln2_g,
                  G.ln2_b);

    // attention branch
    Mat datt_mix(N, d);
    matmul(dres1, false, L.wo, true, datt_mix);
    matmul(c.att_mix, true, dres1, false, G.wo, 1.0, 1.0);
    for (int r = 0; r < N; ++r) {
      const double* dr = dres1.row(r);
      for (int col = 0; col < d; ++col) G.bo.a[(std::size_t)col] += dr[col];
    }

    Mat dq(N, d), dk(N, d), dv(N, d);
    Mat dP(T, T);
    for (int b = 0; b < B; ++b) {
      for (int h = 0; h < H; ++h) {
        const double* vp = c.v.row(b * T) + h * dh;
        const double* qp = c.q.row(b * T) + h * dh;
        const double* kp = c.k.row(b * T) + h * dh;
        const double* prow = c.probs.row((b * H + h) * T);
        const double* dmix = datt_mix.row(b * T) + h * dh;
        // dP = dmix V^T
        cblas_dgemm(CblasRowMajor, CblasNoTrans, CblasTrans, T, T, dh, 1.0,
                    dmix, d, vp, d, 0.0, dP.a.data(), T);
        // dV += P^T dmix
        cblas_dgemm(CblasRowMajor, CblasTrans, CblasNoTrans, T, dh, T, 1.0,
                    prow, T, dmix, d, 0.0, dv.row(b * T) + h * dh, d);
        // softmax backward into scores
        for (int t = 0; t < T; ++t) {
          const double* pr = prow + (std::size_t)t * T;
          double* dpr = dP.row(t);
          double dot = 0;
          for (int u = 0; u <= t; ++u) dot += dpr[u] * pr[u];
          double* srow = scores.row(t);
          for (int u = 0; u <= t; ++u) srow[u] = pr[u] * (dpr[u] - dot);
          for (int u = t + 1; u < T; ++u) srow[u] = 0.0;
        }
        // dq += dS K * scale ; dk += dS^T Q * scale
        cblas_dgemm(CblasRowMajor, CblasNoTrans, CblasNoTrans, T, dh, T, scale,
                    scores.a.data(), T, kp, d, 0.0, dq.row(b * T) + h * dh, d);
        cblas_dgemm(CblasRowMajor, CblasTrans, CblasNoTrans, T, dh, T, scale,
                    scores.a.data(), T, qp, d, 0.0, dk.row(b * T) + h * dh, d);
      }
    }

    Mat dln1_out(N, d);
    linear_bwd(c.ln1_out, L.wq, dq, dln1_out, G.wq, G.bq);
    linear_bwd(c.ln1_out, L.wk, dk, dln1_out, G.wk, G.bk);
    linear_bwd(c.ln1_out, L.wv, dv, dln1_out, G.wv, G.bv);

    Mat dx_in = dres1;  // residual skip
    layernorm_bwd(dln1_out, L.ln1_g, c.xhat1, c.rstd1, dx_in, G.ln1_g,
                  G.ln1_b);
    dx = std::move(dx_in);
  }

  // embeddings
  for (int i = 0; i < N; ++i) {
    TokenId tok = cache.tokens[(std::size_t)i];
    int t = i % T;
    const double* dr = dx.row(i);
    double* te = g.tok_emb.row(tok);
    double* pe = g.pos_emb.row(t);
    for (int col = 0; col < d; ++col) {
      te[col] += dr[col];
      pe[col] += dr[col];
    }
  }
}

}  // namespace detail

// Loss and parameter gradients for one batch. Grads are overwritten.
inline double loss_and_grads(const Checkpoint& ckpt,
                             const std::vector<TokenId>& inputs,
                             const std::vector<TokenId>& targets, int B, int T,
                             Params& grads) {
  detail::ForwardCache cache;
  ForwardResult out;
  detail::forward_impl(ckpt.config, ckpt.params, inputs, B, T, &cache,
                       CaptureFlags{}, out);
  double loss = cross_entropy(out.logits, targets);
  grads.zero();
  detail::backward_impl(ckpt.config, ckpt.params, cache, targets, grads);
  return loss;
}

}  // namespace babel::model
