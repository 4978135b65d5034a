// Loss-based system-proportion estimation and target-corpus planning.
#pragma once

#include <limits>
#include <optional>

#include "babel/model/train.hpp"
#include "babel/toylang/mixture.hpp"

namespace babel::estimator {

struct ScorePoint {
  std::int64_t step;
  double score;
};

struct ScoreSeries {
  std::vector<ScorePoint> points;

  std::vector<double> values() const {
    std::vector<double> v;
    v.reserve(points.size());
    for (const auto& p : points) v.push_back(p.score);
    return v;
  }

  void save(const std::string& path) const {
    std::ofstream f(path);
    if (!f) throw Error("cannot write score series: " + path);
    for (const auto& p : points) {
      nlohmann::ordered_json j{{"step", p.step}, {"score", p.score}};
      f << j.dump() << "\n";
    }
  }

  static ScoreSeries load(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw Error("cannot read score series: " + path);
    ScoreSeries s;
    std::string line;
    while (std::getline(f, line)) {
      if (line.empty()) continue;
      nlohmann::json j = nlohmann::json::parse(line);
      s.points.push_back(
          {j.at("step").get<std::int64_t>(), j.at("score").get<double>()});
    }
    return s;
  }
};

// Centered moving average; endpoints use the available truncated window.
inline std::vector<double> smooth(const std::vector<double>& xs, int width) {
  if (width < 1 || width % 2 == 0)
    throw Error("smooth_scores: width must be odd and >= 1");
  if ((int)xs.size() < width)
    throw Error("smooth_scores: series shorter than window");
  int half = width / 2;
  std::vector<double> out(xs.size());
  for (int i = 0; i < (int)xs.size(); ++i) {
    int lo = std::max(0, i - half);
    int hi = std::min((int)xs.size() - 1, i + half);
    double s = 0;
    for (int k = lo; k <= hi; ++k) s += xs[(std::size_t)k];
    out[(std::size_t)i] = s / (hi - lo + 1);
  }
  return out;
}

inline ScoreSeries smooth_scores(const ScoreSeries& s, int width) {
  auto v = smooth(s.values(), width);
  ScoreSeries out = s;
  for (std::size_t i = 0; i < v.size(); ++i) out.points[i].score = v[i];
  return out;
}

struct LossAnchors {
  double initial = 0;  // alpha: mean loss over the init window
  double final = 0;    // beta: minimum loss over the whole trace
  std::int64_t window_begin = 90;
  std::int64_t window_end = 100;
};

// alpha from the mean of an early-step window, beta from the trace minimum.
inline LossAnchors loss_anchors(const model::LossTrace& trace,
                                std::int64_t window_begin = 90,
                                std::int64_t window_end = 100) {
  LossAnchors a;
  a.window_begin = window_begin;
  a.window_end = window_end;
  double sum = 0;
  int n = 0;
  double mn = std::numeric_limits<double>::infinity();
  for (const auto& e : trace.entries) {
    if (e.step >= window_begin && e.step <= window_end) {
      sum += e.loss;
      ++n;
    }
    mn = std::min(mn, e.loss);
  }
  if (n == 0) throw Error("loss_anchors: trace does not cover the init window");
  a.initial = sum / n;
  a.final = mn;
  if (!(a.initial > a.final))
    throw Error("loss_anchors: trace shows no learning (alpha <= beta)");
  return a;
}

struct SystemProportion {
  double value = 0;  // in [0,1]
  bool clamped = false;
  std::string source;  // "loss" or "worklang" or "mixture"
};

// P(l) = (l - beta) / (alpha - beta), clamped into [0,1] with a flag.
inline SystemProportion system_proportion_from_loss(double loss,
                                                    const LossAnchors& a) {
  if (!(a.initial > a.final))
    throw Error("system_proportion_from_loss: invalid anchors");
  double raw = (loss - a.final) / (a.initial - a.final);
  SystemProportion p;
  p.source = "loss";
  p.clamped = raw < 0.0 || raw > 1.0;
  p.value = std::min(1.0, std::max(0.0, raw));
  return p;
}

// P̄(eta_i) = eta_i / sum_j eta_j
inline SystemProportion system_proportion_from_mixture(
    const toylang::MixtureSpec& mix, const std::string& language) {
  mix.validate();
  auto it = mix.entries.find(language);
  if (it == mix.entries.end())
    throw Error("system_proportion_from_mixture: unknown language " + language);
  SystemProportion p;
  p.source = "mixture";
  p.value = (double)it->second / (double)mix.total();
  return p;
}

struct MixturePlan {
  std::string dominant_language;
  std::string target_language;
  std::uint64_t eta_dominant = 0;
  bool unbounded = false;       // P(l_j) = 0: use the full available corpus
  double eta_target = 0;        // valid when !unbounded
  // provenance
  std::size_t best_index = 0;   // j (0-based into checkpoint series)
  std::int64_t best_step = 0;
  double best_smoothed_score = 0;
  double loss_at_best = 0;      // l_j
  SystemProportion proportion;  // P(l_j)
  LossAnchors anchors;
  int smoothing_width = 5;

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    j["schema_version"] = 1;
    j["dominant_language"] = dominant_language;
    j["target_language"] = target_language;
    j["eta_dominant"] = eta_dominant;
    j["unbounded"] = unbounded;
    if (!unbounded) j["eta_target"] = eta_target;
    j["provenance"] = {
        {"best_index", best_index},
        {"best_step", best_step},
        {"best_smoothed_score", best_smoothed_score},
        {"loss_at_best", loss_at_best},
        {"proportion", proportion.value},
        {"proportion_clamped", proportion.clamped},
        {"alpha", anchors.initial},
        {"beta", anchors.final},
        {"init_window", {anchors.window_begin, anchors.window_end}},
        {"smoothing_width", smoothing_width}};
    return j;
  }

  void save(const std::string& path) const {
    std::ofstream f(path);
    if (!f) throw Error("cannot write mixture plan: " + path);
    f << to_json().dump(2) << "\n";
  }
};

// The corpus-size estimator: smooth the per-checkpoint scores, pick the
// argmax (ties -> earliest), read the training loss at that checkpoint's
// step, convert to a system proportion, and invert the token-share
// relation: eta_target = eta_dominant / P - eta_dominant.
inline MixturePlan plan_target_tokens(const model::LossTrace& trace,
                                      const ScoreSeries& scores,
                                      std::uint64_t eta_dominant,
                                      int smoothing_width = 5,
                                      std::int64_t window_begin = 90,
                                      std::int64_t window_end = 100) {
  if (scores.points.empty()) throw Error("plan_target_tokens: empty scores");
  LossAnchors anchors = loss_anchors(trace, window_begin, window_end);
  ScoreSeries sm = smooth_scores(scores, smoothing_width);
  std::size_t j = 0;
  for (std::size_t i = 1; i < sm.points.size(); ++i)
    if (sm.points[i].score > sm.points[j].score) j = i;

  MixturePlan plan;
  plan.eta_dominant = eta_dominant;
  plan.smoothing_width = smoothing_width;
  plan.anchors = anchors;
  plan.best_index = j;
  plan.best_step = sm.points[j].step;
  plan.best_smoothed_score = sm.points[j].score;
  plan.loss_at_best = trace.loss_at_step(plan.best_step);
  plan.proportion = system_proportion_from_loss(plan.loss_at_best, anchors);
  if (plan.proportion.value > 0) {
    plan.unbounded = false;
    plan.eta_target =
        (double)eta_dominant / plan.proportion.value - (double)eta_dominant;
  } else {
    plan.unbounded = true;
  }
  return plan;
}

struct EstimatorComparison {
  double pearson_r = 0;
  double max_abs_deviation = 0;
  std::size_t n = 0;

  nlohmann::ordered_json to_json() const {
    return nlohmann::ordered_json{{"pearson_r", pearson_r},
                                  {"max_abs_deviation", max_abs_deviation},
                                  {"n", n}};
  }
};

inline double pearson(const std::vector<double>& x,
                      const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 3)
    throw Error("pearson: need equal lengths >= 3");
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= x.size();
  my /= y.size();
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0 || syy == 0) throw Error("pearson: zero variance");
  return sxy / std::sqrt(sxx * syy);
}

// Loss-based vs worklang-based proportions, aligned by checkpoint.
inline EstimatorComparison compare_estimators(
    const std::vector<SystemProportion>& loss_based,
    const std::vector<SystemProportion>& worklang_based) {
  if (loss_based.size() != worklang_based.size() || loss_based.size() < 3)
    throw Error("compare_estimators: need equal lengths >= 3");
  std::vector<double> x, y;
  for (const auto& p : loss_based) x.push_back(p.value);
  for (const auto& p : worklang_based) y.push_back(p.value);
  EstimatorComparison c;
  c.n = x.size();
  c.pearson_r = pearson(x, y);
  for (std::size_t i = 0; i < x.size(); ++i)
    c.max_abs_deviation = std::max(c.max_abs_deviation, std::abs(x[i] - y[i]));
  return c;
}

}  // namespace babel::estimator
