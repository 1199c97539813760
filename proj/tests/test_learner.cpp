#include <gtest/gtest.h>

#include <cmath>

#include "rpu/learner.hpp"

using namespace rpu;

namespace {

LearnerConfig config(double eps, double delta, std::uint64_t seed) {
  LearnerConfig c;
  c.epsilon = eps;
  c.delta = delta;
  c.seed = seed;
  c.eval_size = 4000;
  return c;
}

std::shared_ptr<LearningSession> session_for(int cls, std::uint64_t seed, const ResponsePolicy& pol) {
  Rng rng(seed);
  switch (cls) {
    case 0:
      return make_rect_session(random_rectangle(2, 0, 1, rng), pol);
    case 1:
      return make_tree_session(random_tree(2, 4, 0, 1, seed), 4, pol);
    default:
      return make_halfspace_session(random_halfspace(0, 1, rng), pol);
  }
}

}  // namespace

TEST(Caps, Formulas) {
  auto c = config(0.1, 0.1, 0);
  EXPECT_EQ(round_cap(c), static_cast<std::uint64_t>(std::ceil(8 * std::log2(100.0))));
  EXPECT_EQ(sample_cap(c, 4), static_cast<std::uint64_t>(std::ceil(60 * 4 * std::log(400.0) * std::log(100.0) / 0.1)));
  auto half = config(0.5, 0.5, 0);
  EXPECT_EQ(passive_size(half, 4), 14u);
  EXPECT_EQ(eval_size(half), 4000u);
  half.eval_size = 0;
  EXPECT_EQ(eval_size(half), 100u);
  c.epsilon = 0;
  EXPECT_THROW(round_cap(c), ContractViolation);
  c.epsilon = 0.1;
  c.c2 = 0;
  EXPECT_THROW(sample_cap(c, 4), ContractViolation);
}

TEST(Session, QueriesOnlyTapePoints) {
  auto s = make_rect_session(RectangleHypothesis({{0, 1}}), ResponsePolicy::lowest_index());
  Sample a = s->admit(Point{0.5});
  EXPECT_EQ(s->query_label(a), Label::positive);
  EXPECT_EQ(s->counters().queries_made, 1u);
  s->discard(a);
  EXPECT_THROW(s->query_label(a), ContractViolation);
  EXPECT_EQ(s->counters().queries_made, 1u);
  Sample fake{999, Point{0.5}};
  std::vector<Sample> batch{fake};
  EXPECT_THROW(s->compress(Label::positive, batch), ContractViolation);
}

TEST(Session, CompressErasesAndCounts) {
  auto s = make_rect_session(RectangleHypothesis({{0, 1}}), ResponsePolicy::lowest_index());
  std::vector<Sample> neg;
  for (double v : {1.5, 2.0, 3.0, -1.0, -2.0}) neg.push_back(s->admit(Point{v}));
  EXPECT_EQ(s->tape().size(), 5u);
  std::uint64_t q = s->compress(Label::negative, neg);
  EXPECT_EQ(q, 5u);  // one odd-one-out query per negative
  EXPECT_EQ(s->counters().queries_made, 5u);
  EXPECT_EQ(s->tape().size(), 2u);  // 1.5 and -1.0 survive
  EXPECT_EQ(s->account().peak_points(), 5u);
  EXPECT_EQ(s->infer(Point{1.7}), Prediction::negative);
  EXPECT_EQ(s->infer(Point{1.2}), Prediction::abstain);
}

TEST(RunBounded, SinglePointSupport) {
  for (int cls = 0; cls < 3; ++cls) {
    auto s = session_for(cls, 3, ResponsePolicy::lowest_index());
    auto dist = Distribution::uniform_box({0.4, 0.6}, {0.4, 0.6});
    auto r = run_bounded(s, dist, config(0.1, 0.1, 3));
    EXPECT_EQ(r.metrics.abort_reason, AbortReason::sample_cap) << cls;
    EXPECT_EQ(r.metrics.abstention, 0.0);
    EXPECT_EQ(r.metrics.rounds, 1u);
    EXPECT_EQ(r.metrics.samples_total, sample_cap(config(0.1, 0.1, 3), s->lcs_size()));
    EXPECT_EQ(r.metrics.mislabels, 0u);
  }
}

// Rectangles d = 2, eps = 0.05, delta = 0.1, 200 seeded trials.
TEST(RunBounded, RectangleRegression) {
  auto cfg = config(0.05, 0.1, 0);
  const std::size_t k = 4;
  const double b6k = 6 * k;  // one odd-one-out query per batch point at most
  const double query_cap = cfg.c1 * std::log2(1 / 0.005) * b6k;
  int useful = 0;
  for (std::uint64_t t = 0; t < 200; ++t) {
    cfg.seed = mix_seed(77, t);
    Rng rng(mix_seed(cfg.seed, 1));
    auto s = make_rect_session(random_rectangle(2, 0, 1, rng), ResponsePolicy::seeded_random(t));
    auto r = run_bounded(s, Distribution::cube(2, 0, 1), cfg);
    const auto& m = r.metrics;
    EXPECT_EQ(m.mislabels, 0u);
    EXPECT_LE(m.batch_queries, query_cap);
    EXPECT_LE(m.race_label_queries, m.samples_total);
    EXPECT_EQ(m.queries_total, m.batch_queries + m.race_label_queries);
    EXPECT_LE(m.peak_points, 14 * k);
    EXPECT_LE(m.retained_positive, k);
    EXPECT_LE(m.retained_negative, k);
    EXPECT_TRUE(m.abort_reason == AbortReason::round_cap || m.abort_reason == AbortReason::sample_cap);
    useful += m.abstention <= 0.05;
  }
  EXPECT_GE(useful, 180);
}

// Zero mislabels for every class, distribution family and policy; merge
// monotonicity checked on probes after every round.
TEST(RunBounded, ReliableAndMonotone) {
  std::vector<Distribution> dists{
      Distribution::cube(2, 0, 1), Distribution::gaussian({0.5, 0.5}, 0.2),
      Distribution::mixture({Distribution::Gaussian{{0.25, 0.25}, 0.1}, Distribution::UniformBox{{0.5, 0.5}, {1, 1}}},
                            {0.5, 0.5})};
  for (int cls = 0; cls < 3; ++cls)
    for (std::size_t di = 0; di < dists.size(); ++di)
      for (std::uint64_t seed = 1; seed <= 4; ++seed) {
        ResponsePolicy pol = seed % 2 ? ResponsePolicy::seeded_random(seed) : ResponsePolicy::lowest_index();
        auto s = session_for(cls, seed, pol);
        Rng prng(seed);
        std::vector<Point> probes;
        for (int j = 0; j < 300; ++j) probes.push_back(dists[di].sample(prng));
        std::vector<Prediction> last(probes.size(), Prediction::abstain);
        std::uint64_t rounds_seen = 0;
        auto observer = [&](const LearningSession& ls, std::uint64_t round) {
          EXPECT_EQ(round, rounds_seen + 1);
          rounds_seen = round;
          for (std::size_t j = 0; j < probes.size(); ++j) {
            auto p = ls.infer(probes[j]);
            if (last[j] != Prediction::abstain) EXPECT_EQ(p, last[j]);
            if (p != Prediction::abstain) EXPECT_EQ(p, to_prediction(ls.truth(probes[j])));
            last[j] = p;
          }
        };
        auto r = run_bounded(s, dists[di], config(0.05, 0.1, seed), observer);
        EXPECT_EQ(r.metrics.mislabels, 0u) << cls << " " << di << " " << seed;
        EXPECT_EQ(r.metrics.rounds, rounds_seen);
        for (std::size_t j = 0; j < probes.size(); ++j) EXPECT_EQ(r.classifier(probes[j]), last[j]);
      }
}

TEST(RunBounded, Deterministic) {
  auto a = run_bounded(session_for(2, 9, ResponsePolicy::seeded_random(1)), Distribution::cube(2, 0, 1),
                       config(0.05, 0.1, 9));
  auto b = run_bounded(session_for(2, 9, ResponsePolicy::seeded_random(1)), Distribution::cube(2, 0, 1),
                       config(0.05, 0.1, 9));
  EXPECT_EQ(a.metrics.queries_total, b.metrics.queries_total);
  EXPECT_EQ(a.metrics.samples_total, b.metrics.samples_total);
  EXPECT_EQ(a.metrics.peak_points, b.metrics.peak_points);
  EXPECT_EQ(a.metrics.abstention, b.metrics.abstention);
}

TEST(RunBounded, DimensionMismatch) {
  EXPECT_THROW(run_bounded(session_for(0, 1, ResponsePolicy::lowest_index()), Distribution::cube(3, 0, 1),
                           config(0.1, 0.1, 1)),
               ContractViolation);
}

TEST(RunPassive, SizeAndReliability) {
  auto cfg = config(0.5, 0.5, 1);
  auto s = make_rect_session(RectangleHypothesis({{0.2, 0.8}, {0.2, 0.8}}), ResponsePolicy::lowest_index());
  auto r = run_passive(s, Distribution::cube(2, 0, 1), cfg);
  EXPECT_EQ(r.metrics.race_label_queries, 14u);
  EXPECT_EQ(r.metrics.samples_total, 14u);
  EXPECT_EQ(r.metrics.mislabels, 0u);
}

TEST(RunPassive, SinglePointSupport) {
  auto s = session_for(2, 4, ResponsePolicy::lowest_index());
  auto r = run_passive(s, Distribution::uniform_box({0.3, 0.3}, {0.3, 0.3}), config(0.1, 0.1, 4));
  EXPECT_EQ(r.metrics.abstention, 0.0);
  EXPECT_EQ(r.metrics.mislabels, 0u);
}

TEST(RunDoubling, ConstantTreeAcceptedFirstStage) {
  DecisionTreeHypothesis h(2, Label::positive);
  auto r = run_doubling_tree(h, Distribution::cube(2, 0, 1), config(0.1, 0.1, 1), DoublingConfig{},
                             ResponsePolicy::seeded_random(1));
  EXPECT_EQ(r.metrics.final_guess, 2u);
  EXPECT_EQ(r.metrics.stages, 1u);
  EXPECT_EQ(r.metrics.abstention, 0.0);
}

TEST(RunDoubling, StageChargesFullBudget) {
  auto h = random_tree(2, 4, 0, 1, 6);
  auto cfg = config(0.1, 0.1, 6);
  DoublingConfig dc;
  auto r = run_doubling_tree(h, Distribution::cube(2, 0, 1), cfg, dc, ResponsePolicy::seeded_random(6));
  std::uint64_t expect = 0;
  for (std::uint64_t g = 2, st = 0; st < r.metrics.stages; g *= 2, ++st) {
    LearnerConfig sc = cfg;
    const double gg = static_cast<double>(g);
    sc.epsilon = std::min(0.5, dc.c_eps * cfg.epsilon / (gg * std::log(gg / cfg.delta)));
    sc.delta = cfg.delta / gg;
    sc.c1 = dc.stage_c1;
    sc.c2 = dc.stage_c2;
    expect += sample_cap(sc, 2 * 2 * g) +
              static_cast<std::uint64_t>(std::ceil(dc.c_m * std::log(gg / cfg.delta) / cfg.epsilon));
  }
  EXPECT_EQ(r.metrics.samples_total, expect);
  EXPECT_EQ(r.metrics.queries_total, r.metrics.race_label_queries + r.metrics.batch_queries);
}

// Hidden s = 4, d = 2: accepted at s' in {4, 8} in >= 95 of 100 trials, and
// mean queries within 4x of the bounded learner told s = 8.
TEST(RunDoubling, SizeFourRegression) {
  const auto dist = Distribution::cube(2, 0, 1);
  int ok_guess = 0;
  double dq = 0, kq = 0;
  for (std::uint64_t t = 0; t < 100; ++t) {
    auto cfg = config(0.1, 0.1, mix_seed(5, t));
    cfg.eval_size = 500;
    auto h = random_tree(2, 4, 0, 1, mix_seed(cfg.seed, 1));
    auto pol = ResponsePolicy::seeded_random(t);
    auto r = run_doubling_tree(h, dist, cfg, DoublingConfig{}, pol);
    EXPECT_EQ(r.metrics.mislabels, 0u);
    ok_guess += r.metrics.final_guess == 4 || r.metrics.final_guess == 8;
    dq += static_cast<double>(r.metrics.queries_total);
    auto known = run_bounded(make_tree_session(h, 8, pol), dist, cfg);
    kq += static_cast<double>(known.metrics.queries_total);
  }
  EXPECT_GE(ok_guess, 95);
  EXPECT_LE(dq / kq, 4.0);
  EXPECT_GE(dq / kq, 0.25);
}
