#include <catch2/catch_amalgamated.hpp>

#include "babel/estimator/estimator.hpp"

using namespace babel;
using namespace babel::estimator;

namespace {

model::LossTrace linear_trace(std::int64_t first, std::int64_t last,
                              double start_loss, double end_loss) {
  model::LossTrace t;
  for (std::int64_t s = first; s <= last; ++s) {
    double f = (double)(s - first) / (double)(last - first);
    t.entries.push_back({s, start_loss + f * (end_loss - start_loss)});
  }
  return t;
}

}  // namespace

TEST_CASE("moving average: identity at width 1, exact values, truncation") {
  std::vector<double> xs = {1, 2, 3, 4, 5};
  CHECK(smooth(xs, 1) == xs);
  auto s3 = smooth(xs, 3);
  // endpoints use the available window
  CHECK(s3[0] == Catch::Approx(1.5));
  CHECK(s3[1] == Catch::Approx(2.0));
  CHECK(s3[2] == Catch::Approx(3.0));
  CHECK(s3[4] == Catch::Approx(4.5));
  auto s5 = smooth(xs, 5);
  CHECK(s5[2] == Catch::Approx(3.0));
  CHECK(s5[0] == Catch::Approx(2.0));  // mean of 1,2,3

  CHECK_THROWS_AS(smooth(xs, 2), Error);   // even width
  CHECK_THROWS_AS(smooth(xs, -1), Error);
  CHECK_THROWS_AS(smooth({1, 2}, 5), Error);  // too short
}

TEST_CASE("loss anchors: alpha from the init window, beta from the minimum") {
  model::LossTrace t = linear_trace(1, 200, 4.0, 1.0);
  LossAnchors a = loss_anchors(t);  // window 90..100
  // oracle: mean of the 11 window losses
  double sum = 0;
  for (std::int64_t s = 90; s <= 100; ++s) sum += t.loss_at_step(s);
  CHECK(a.initial == Catch::Approx(sum / 11.0).margin(1e-12));
  CHECK(a.final == 1.0);

  // shifted window for runs that do not start at step 1
  model::LossTrace t2 = linear_trace(2001, 2200, 4.0, 1.0);
  LossAnchors a2 = loss_anchors(t2, 2090, 2100);
  CHECK(a2.initial > a2.final);
  CHECK_THROWS_AS(loss_anchors(t2), Error);  // default window not covered

  // a flat trace shows no learning
  model::LossTrace flat;
  for (std::int64_t s = 1; s <= 200; ++s) flat.entries.push_back({s, 2.0});
  CHECK_THROWS_AS(loss_anchors(flat), Error);
}

TEST_CASE("system proportion from loss: boundaries and clamping") {
  LossAnchors a;
  a.initial = 4.0;
  a.final = 1.0;
  CHECK(system_proportion_from_loss(4.0, a).value == 1.0);   // l = alpha -> 1
  CHECK(system_proportion_from_loss(1.0, a).value == 0.0);   // l = beta -> 0
  CHECK(system_proportion_from_loss(2.5, a).value == Catch::Approx(0.5));
  CHECK_FALSE(system_proportion_from_loss(2.5, a).clamped);

  auto hi = system_proportion_from_loss(5.0, a);
  CHECK(hi.value == 1.0);
  CHECK(hi.clamped);
  auto lo = system_proportion_from_loss(0.5, a);
  CHECK(lo.value == 0.0);
  CHECK(lo.clamped);
}

TEST_CASE("system proportion from mixture sums to one over the simplex") {
  toylang::MixtureSpec mix;
  mix.entries = {{"a", 3'000'000}, {"b", 1'000'000}, {"c", 500'000}};
  double sum = 0;
  for (const auto& [lang, n] : mix.entries)
    sum += system_proportion_from_mixture(mix, lang).value;
  CHECK(sum == Catch::Approx(1.0).margin(1e-12));
  CHECK(system_proportion_from_mixture(mix, "a").value ==
        Catch::Approx(3.0 / 4.5).margin(1e-12));
  CHECK_THROWS_AS(system_proportion_from_mixture(mix, "nope"), Error);
}

TEST_CASE("planted planning problem solved exactly") {
  // trace: loss 4 -> 1 over steps 1..300; alpha = mean over 90..100,
  // beta = 1. Scores peak exactly at checkpoint step 150.
  model::LossTrace trace = linear_trace(1, 300, 4.0, 1.0);
  ScoreSeries scores;
  for (int k = 0; k < 10; ++k) {
    std::int64_t step = 30 * (k + 1);
    // smoothed argmax lands on index 4 (step 150): tent shape
    double v = 1.0 - std::abs(k - 4) * 0.1;
    scores.points.push_back({step, v});
  }
  std::uint64_t eta_d = 1'000'000;
  MixturePlan plan = plan_target_tokens(trace, scores, eta_d, 5);
  CHECK(plan.best_index == 4);
  CHECK(plan.best_step == 150);
  double l = trace.loss_at_step(150);
  CHECK(plan.loss_at_best == l);
  double P = (l - plan.anchors.final) / (plan.anchors.initial - plan.anchors.final);
  CHECK_FALSE(plan.unbounded);
  // float-exact inversion
  CHECK(plan.eta_target == (double)eta_d / P - (double)eta_d);

  // ties resolve to the earliest checkpoint
  ScoreSeries flat = scores;
  for (auto& p : flat.points) p.score = 0.5;  // exactly representable
  MixturePlan tie = plan_target_tokens(trace, flat, eta_d, 5);
  CHECK(tie.best_index == 0);

  // best at the trace minimum -> P = 0 -> unbounded
  ScoreSeries late;
  for (int k = 0; k < 10; ++k)
    late.points.push_back({30 * (std::int64_t)(k + 1), (double)k});
  MixturePlan ub = plan_target_tokens(trace, late, eta_d, 1);
  CHECK(ub.proportion.value == 0.0);
  CHECK(ub.unbounded);
}

TEST_CASE("inverse consistency: plan feeds back through the mixture formula") {
  // For any P in (0, 1], eta_target = eta_d/P - eta_d must satisfy
  // eta_d / (eta_d + eta_target) == P.
  Rng rng = make_rng(77);
  std::uniform_real_distribution<double> u(0.01, 1.0);
  double eta_d = 2'000'000;
  for (int k = 0; k < 100; ++k) {
    double P = u(rng);
    double eta_t = eta_d / P - eta_d;
    double back = eta_d / (eta_d + eta_t);
    CHECK(std::abs(back - P) <= 1e-9);
  }
}

TEST_CASE("pearson against a two-pass covariance oracle") {
  Rng rng = make_rng(55);
  std::normal_distribution<double> nd(0, 1);
  std::vector<double> x, y;
  for (int k = 0; k < 50; ++k) {
    double v = nd(rng);
    x.push_back(v);
    y.push_back(0.3 * v + nd(rng));
  }
  // oracle: explicit two-pass covariance / stddev computation
  auto mean = [](const std::vector<double>& v) {
    double s = 0;
    for (double a : v) s += a;
    return s / (double)v.size();
  };
  double mx = mean(x), my = mean(y), cov = 0, vx = 0, vy = 0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    cov += (x[k] - mx) * (y[k] - my);
    vx += (x[k] - mx) * (x[k] - mx);
    vy += (y[k] - my) * (y[k] - my);
  }
  double oracle = cov / std::sqrt(vx * vy);
  CHECK(std::abs(pearson(x, y) - oracle) <= 1e-9);

  // exact limits
  std::vector<double> a = {1, 2, 3, 4};
  std::vector<double> b = {2, 4, 6, 8};
  CHECK(pearson(a, b) == Catch::Approx(1.0).margin(1e-12));
  std::vector<double> c = {8, 6, 4, 2};
  CHECK(pearson(a, c) == Catch::Approx(-1.0).margin(1e-12));

  CHECK_THROWS_AS(pearson({1, 2}, {1, 2}), Error);          // n < 3
  CHECK_THROWS_AS(pearson({1, 1, 1}, {1, 2, 3}), Error);    // zero variance
  CHECK_THROWS_AS(pearson({1, 2, 3}, {1, 2}), Error);       // length mismatch
}

TEST_CASE("compare_estimators: r plus max deviation") {
  auto sp = [](double v) {
    SystemProportion p;
    p.value = v;
    return p;
  };
  std::vector<SystemProportion> loss = {sp(0.9), sp(0.5), sp(0.2), sp(0.1)};
  std::vector<SystemProportion> wl = {sp(0.8), sp(0.55), sp(0.25), sp(0.05)};
  EstimatorComparison c = compare_estimators(loss, wl);
  CHECK(c.n == 4);
  CHECK(c.max_abs_deviation == Catch::Approx(0.1).margin(1e-12));
  CHECK(c.pearson_r > 0.97);
  CHECK_THROWS_AS(compare_estimators({sp(1), sp(2)}, {sp(1), sp(2)}), Error);
}

TEST_CASE("score series file round-trip") {
  ScoreSeries s;
  s.points = {{100, 0.25}, {200, 0.5}};
  s.save("test_scores_tmp.jsonl");
  ScoreSeries r = ScoreSeries::load("test_scores_tmp.jsonl");
  REQUIRE(r.points.size() == 2);
  CHECK(r.points[1].step == 200);
  CHECK(r.points[1].score == 0.5);
  std::remove("test_scores_tmp.jsonl");
}

TEST_CASE("mixture plan serialization carries provenance") {
  model::LossTrace trace = linear_trace(1, 300, 4.0, 1.0);
  ScoreSeries scores;
  for (int k = 0; k < 10; ++k)
    scores.points.push_back({30 * (std::int64_t)(k + 1),
                             1.0 - std::abs(k - 4) * 0.1});
  MixturePlan plan = plan_target_tokens(trace, scores, 500'000, 5);
  auto j = plan.to_json();
  CHECK(j.at("unbounded") == false);
  CHECK(j.at("provenance").at("best_step") == 150);
  CHECK(j.at("provenance").contains("alpha"));
  CHECK(j.at("provenance").contains("beta"));
}
