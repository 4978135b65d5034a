// Parameter tensors, deterministic init, checkpoint container + file io.
#pragma once

#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "babel/model/config.hpp"
#include "babel/tensor.hpp"

namespace babel::model {

struct LayerParams {
  Mat ln1_g, ln1_b;
  Mat wq, bq, wk, bk, wv, bv, wo, bo;
  Mat ln2_g, ln2_b;
  Mat w1, b1, w2, b2;
};

struct Params {
  Mat tok_emb;  // (V, d)
  Mat pos_emb;  // (ctx, d)
  std::vector<LayerParams> layers;
  Mat lnf_g, lnf_b;
  Mat w_un;  // (d, V)

  // Visits every tensor in a fixed declared order; the checkpoint payload
  // and optimizer state follow this order.
  template <class F>
  void for_each(F&& f) {
    f("tok_emb", tok_emb);
    f("pos_emb", pos_emb);
    for (std::size_t l = 0; l < layers.size(); ++l) {
      auto& L = layers[l];
      std::string p = "layer" + std::to_string(l) + ".";
      f(p + "ln1_g", L.ln1_g); f(p + "ln1_b", L.ln1_b);
      f(p + "wq", L.wq); f(p + "bq", L.bq);
      f(p + "wk", L.wk); f(p + "bk", L.bk);
      f(p + "wv", L.wv); f(p + "bv", L.bv);
      f(p + "wo", L.wo); f(p + "bo", L.bo);
      f(p + "ln2_g", L.ln2_g); f(p + "ln2_b", L.ln2_b);
      f(p + "w1", L.w1); f(p + "b1", L.b1);
      f(p + "w2", L.w2); f(p + "b2", L.b2);
    }
    f("lnf_g", lnf_g);
    f("lnf_b", lnf_b);
    f("w_un", w_un);
  }

  template <class F>
  void for_each(F&& f) const {
    const_cast<Params*>(this)->for_each(
        [&](const std::string& n, Mat& m) { f(n, (const Mat&)m); });
  }

  static Params shaped(const ModelConfig& c) {
    Params p;
    int d = c.d_model, F = c.d_ffn;
    p.tok_emb = Mat(c.vocab_size, d);
    p.pos_emb = Mat(c.context_length, d);
    p.layers.resize((std::size_t)c.n_layers);
    for (auto& L : p.layers) {
      L.ln1_g = Mat(1, d); L.ln1_b = Mat(1, d);
      L.wq = Mat(d, d); L.bq = Mat(1, d);
      L.wk = Mat(d, d); L.bk = Mat(1, d);
      L.wv = Mat(d, d); L.bv = Mat(1, d);
      L.wo = Mat(d, d); L.bo = Mat(1, d);
      L.ln2_g = Mat(1, d); L.ln2_b = Mat(1, d);
      L.w1 = Mat(d, F); L.b1 = Mat(1, F);
      L.w2 = Mat(F, d); L.b2 = Mat(1, d);
    }
    p.lnf_g = Mat(1, d);
    p.lnf_b = Mat(1, d);
    p.w_un = Mat(d, c.vocab_size);
    return p;
  }

  std::int64_t count() const {
    std::int64_t n = 0;
    for_each([&](const std::string&, const Mat& m) { n += (std::int64_t)m.size(); });
    return n;
  }

  bool all_finite() const {
    bool ok = true;
    for_each([&](const std::string&, const Mat& m) { ok = ok && m.all_finite(); });
    return ok;
  }

  void zero() {
    for_each([](const std::string&, Mat& m) { m.zero(); });
  }
};

// Scaled-normal init for weights, zeros for biases, ones for norm gains.
// Residual-feeding projections get the 1/sqrt(2L) shrink.
inline Params init_params(const ModelConfig& c, std::uint64_t seed) {
  c.validate();
  Params p = Params::shaped(c);
  Rng rng = make_rng(derive_seed(seed, 0x6d6f64656cull));
  std::normal_distribution<double> nd(0.0, 0.02);
  double resid_scale = 1.0 / std::sqrt(2.0 * c.n_layers);
  auto fill = [&](Mat& m, double scale) {
    for (double& x : m.a) x = nd(rng) * scale;
  };
  auto ones = [](Mat& m) { std::fill(m.a.begin(), m.a.end(), 1.0); };
  fill(p.tok_emb, 1.0);
  fill(p.pos_emb, 1.0);
  for (auto& L : p.layers) {
    ones(L.ln1_g);
    fill(L.wq, 1.0);
    fill(L.wk, 1.0);
    fill(L.wv, 1.0);
    fill(L.wo, resid_scale);
    ones(L.ln2_g);
    fill(L.w1, 1.0);
    fill(L.w2, resid_scale);
  }
  ones(p.lnf_g);
  fill(p.w_un, 1.0);
  return p;
}

struct Checkpoint {
  ModelConfig config;
  Params params;
  std::int64_t step = 0;
  std::string rng_state;  // serialized training engine state
  std::map<std::string, std::uint64_t> trained_tokens;  // per language

  void validate() const {
    if (!params.all_finite()) throw Error("checkpoint: non-finite parameters");
  }
};

inline Checkpoint init_model(const ModelConfig& cfg, std::uint64_t seed) {
  Checkpoint c;
  c.config = cfg;
  c.params = init_params(cfg, seed);
  c.step = 0;
  std::ostringstream os;
  os << make_rng(derive_seed(seed, 0x747261696eull));
  c.rng_state = os.str();
  return c;
}

// Container: one-line JSON header, '\n', then raw little-endian float64
// payloads in declared tensor order.
inline void save_checkpoint(const Checkpoint& c, const std::string& path) {
  c.validate();
  nlohmann::ordered_json hdr;
  hdr["format"] = "babel-ckpt-v1";
  hdr["config"] = c.config.to_json();
  hdr["step"] = c.step;
  hdr["rng_state"] = c.rng_state;
  hdr["trained_tokens"] = c.trained_tokens;
  nlohmann::ordered_json tensors = nlohmann::ordered_json::array();
  std::string payload;
  c.params.for_each([&](const std::string& name, const Mat& m) {
    tensors.push_back({{"name", name}, {"rows", m.rows}, {"cols", m.cols}});
    const char* bytes = (const char*)m.a.data();
    payload.append(bytes, m.size() * sizeof(double));
  });
  hdr["tensors"] = tensors;
  hdr["payload_hash"] = sha256_hex(payload);
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot write checkpoint: " + path);
  f << hdr.dump() << "\n";
  f.write(payload.data(), (std::streamsize)payload.size());
}

inline Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error("cannot read checkpoint: " + path);
  std::string line;
  if (!std::getline(f, line)) throw Error("checkpoint: missing header");
  nlohmann::json hdr = nlohmann::json::parse(line);
  if (hdr.value("format", "") != "babel-ckpt-v1")
    throw Error("checkpoint: unknown format");
  Checkpoint c;
  c.config = ModelConfig::from_json(hdr.at("config"));
  c.step = hdr.at("step");
  c.rng_state = hdr.at("rng_state");
  if (hdr.contains("trained_tokens"))
    c.trained_tokens =
        hdr["trained_tokens"].get<std::map<std::string, std::uint64_t>>();
  c.params = Params::shaped(c.config);
  std::string payload;
  std::size_t idx = 0;
  auto& tensors = hdr.at("tensors");
  c.params.for_each([&](const std::string& name, Mat& m) {
    const auto& t = tensors.at(idx++);
    if (t.at("name") != name || t.at("rows") != m.rows || t.at("cols") != m.cols)
      throw Error("checkpoint: tensor manifest mismatch at " + name);
    f.read((char*)m.a.data(), (std::streamsize)(m.size() * sizeof(double)));
    if (!f) throw Error("checkpoint: truncated payload at " + name);
    payload.append((const char*)m.a.data(), m.size() * sizeof(double));
  });
  if (hdr.contains("payload_hash") &&
      hdr["payload_hash"] != sha256_hex(payload))
    throw Error("checkpoint: payload hash mismatch");
  c.validate();
  return c;
}

}  // namespace babel::model
