#include <gtest/gtest.h>

#include "rpu/bruteforce.hpp"
#include "rpu/rectangles.hpp"

using namespace rpu;

namespace {

RectangleHypothesis unit_square() { return RectangleHypothesis({{0, 1}, {0, 1}}); }

Handle g_next = 1;
Sample smp(Point p) { return Sample{g_next++, std::move(p)}; }

RectEntry pos(Point p) { return {smp(std::move(p)), InRectangle{}}; }
RectEntry neg(Point p, std::size_t i, Side s) { return {smp(std::move(p)), OddOneOut{i, s}}; }

// Full transcript of a set of entries, in brute-force form.
brute::RectTranscript transcript(std::size_t d, const std::vector<RectEntry>& es) {
  brute::RectTranscript t{d, {}, {}};
  for (const auto& e : es) {
    if (std::holds_alternative<InRectangle>(e.response))
      t.positives.push_back(e.sample.x);
    else
      t.negatives.emplace_back(e.sample.x, std::get<OddOneOut>(e.response));
  }
  return t;
}

// Transcript restricted to what the compressed state retains.
brute::RectTranscript transcript(const RectCompressedState& st) {
  brute::RectTranscript t{st.dim(), {}, {}};
  for (const auto& s : st.positive_witnesses()) t.positives.push_back(s.x);
  for (std::size_t i = 0; i < st.dim(); ++i)
    for (Side side : {Side::too_small, Side::too_large})
      if (const auto& r = st.rep(i, side)) t.negatives.emplace_back(r->x, OddOneOut{i, side});
  return t;
}

std::vector<RectEntry> random_entries(const RectangleHypothesis& h, std::size_t n, Rng& rng,
                                      const ResponsePolicy& pol) {
  std::vector<RectEntry> es;
  std::uniform_real_distribution<double> u(-0.2, 1.2);
  for (std::size_t j = 0; j < n; ++j) {
    std::vector<double> c(h.dim());
    for (auto& v : c) v = u(rng);
    Point p(c);
    Point* pp = &p;
    auto r = adversary_select(odd_one_out(h, p), pol, query_identity("odd_one_out", {pp}));
    es.push_back({smp(std::move(p)), r});
  }
  return es;
}

}  // namespace

TEST(OddOneOut, Examples) {
  auto h = unit_square();
  EXPECT_EQ(odd_one_out(h, {0.5, 0.5}), std::vector<QueryResponse>{InRectangle{}});
  EXPECT_EQ(odd_one_out(h, {2, 0.5}), std::vector<QueryResponse>{(OddOneOut{0, Side::too_large})});
  auto both = odd_one_out(h, {2, -1});
  ASSERT_EQ(both.size(), 2u);
  EXPECT_NE(std::find(both.begin(), both.end(), QueryResponse{OddOneOut{0, Side::too_large}}), both.end());
  EXPECT_NE(std::find(both.begin(), both.end(), QueryResponse{OddOneOut{1, Side::too_small}}), both.end());
  EXPECT_THROW(odd_one_out(h, Point{0.5}), ContractViolation);
}

TEST(OddOneOut, ClosedBoundaryAndInfiniteSides) {
  auto h = unit_square();
  EXPECT_TRUE(h.contains({1, 0}));
  RectangleHypothesis half({{0, INFINITY}});
  EXPECT_TRUE(half.contains(Point{1e300}));
  EXPECT_FALSE(half.contains(Point{-1e-9}));
  EXPECT_THROW(RectangleHypothesis({{1, 0}}), ContractViolation);
}

TEST(CompressRect, PositiveHullDropsMidpoint) {
  std::vector<RectEntry> es{pos({0, 0}), pos({1, 1}), pos({0.5, 0.5})};
  auto st = compress_rect(RectCompressedState(2), es);
  EXPECT_EQ(st.box_lo(0), 0);
  EXPECT_EQ(st.box_hi(1), 1);
  auto w = st.positive_witnesses();
  EXPECT_EQ(w.size(), 2u);
  for (const auto& s : w) EXPECT_NE(s.x, (Point{0.5, 0.5}));
}

TEST(CompressRect, NegativeKeepsTightest) {
  std::vector<RectEntry> es{neg({2, 0.5}, 0, Side::too_large), neg({3, 0.5}, 0, Side::too_large)};
  auto st = compress_rect(RectCompressedState(2), es);
  auto w = st.negative_witnesses();
  ASSERT_EQ(w.size(), 1u);
  EXPECT_EQ(w[0].x, (Point{2, 0.5}));
}

TEST(CompressRect, TieKeepsIncumbent) {
  auto first = neg({2, 0.1}, 0, Side::too_large);
  auto st = compress_rect(RectCompressedState(2), std::vector<RectEntry>{first});
  st = compress_rect(st, std::vector<RectEntry>{neg({2, 0.9}, 0, Side::too_large)});
  EXPECT_EQ(st.rep(0, Side::too_large)->id, first.sample.id);
}

TEST(CompressRect, CorruptResponsesThrow) {
  // too_large at 0.5 while a positive sits at 0.7
  std::vector<RectEntry> a{pos({0.7, 0.5}), neg({0.5, 0.5}, 0, Side::too_large)};
  EXPECT_THROW(compress_rect(RectCompressedState(2), a), DataCorruption);
  // too_small at 0.6 with too_large at 0.4 leaves no room
  std::vector<RectEntry> b{neg({0.6, 0}, 0, Side::too_small), neg({0.4, 0}, 0, Side::too_large)};
  EXPECT_THROW(compress_rect(RectCompressedState(2), b), DataCorruption);
  std::vector<RectEntry> c{{smp({0.5, 0.5}), SameLeaf{true}}};
  EXPECT_THROW(compress_rect(RectCompressedState(2), c), DataCorruption);
}

TEST(InferRect, Examples) {
  std::vector<RectEntry> es{pos({0, 0}), pos({1, 1}), neg({2, 0.5}, 0, Side::too_large)};
  auto st = compress_rect(RectCompressedState(2), es);
  EXPECT_EQ(infer_rect(st, {0.5, 0.5}), Prediction::positive);
  EXPECT_EQ(infer_rect(st, {2.5, 7}), Prediction::negative);
  EXPECT_EQ(infer_rect(st, {1.5, 0.5}), Prediction::abstain);
  EXPECT_EQ(infer_rect(RectCompressedState(2), {0, 0}), Prediction::abstain);
}

TEST(InferRect, BruteForceExamples) {
  brute::RectTranscript t{2, {Point{0.3, 0.3}}, {}};
  EXPECT_EQ(brute::rect_label_set(t, {0.3, 0.3}).inferred(), Prediction::positive);
  auto ls = brute::rect_label_set(t, {0.4, 0.3});
  EXPECT_TRUE(ls.positive && ls.negative);
  // the abstain example above, checked independently
  brute::RectTranscript u{2, {Point{0, 0}, Point{1, 1}}, {{Point{2, 0.5}, OddOneOut{0, Side::too_large}}}};
  ls = brute::rect_label_set(u, {1.5, 0.5});
  EXPECT_TRUE(ls.positive && ls.negative);
}

// 1,000 points under a random rectangle in d = 3; compressed and full
// transcripts infer the same labels on 500 probes.
TEST(CompressRect, LosslessAgainstBruteForce) {
  Rng rng(2024);
  auto h = random_rectangle(3, 0, 1, rng);
  auto es = random_entries(h, 1000, rng, ResponsePolicy::seeded_random(4));
  auto st = compress_rect(RectCompressedState(3), es);
  auto full = transcript(3, es);
  auto comp = transcript(st);
  ASSERT_TRUE(brute::rect_consistent(full));
  std::uniform_real_distribution<double> u(-0.2, 1.2);
  for (int j = 0; j < 500; ++j) {
    Point p{u(rng), u(rng), u(rng)};
    auto a = brute::rect_label_set(full, p).inferred();
    EXPECT_EQ(a, brute::rect_label_set(comp, p).inferred());
    EXPECT_EQ(a, infer_rect(st, p));
  }
}

// Random instances, every policy: sound, size-capped, monotone under more input.
TEST(CompressRect, SoundCappedMonotone) {
  Rng rng(77);
  std::uniform_real_distribution<double> u(-0.2, 1.2);
  for (int inst = 0; inst < 200; ++inst) {
    const std::size_t d = 1 + inst % 5;
    auto h = random_rectangle(d, 0, 1, rng);
    ResponsePolicy pol = inst % 2 ? ResponsePolicy::lowest_index() : ResponsePolicy::seeded_random(inst);
    RectCompressedState st(d);
    std::vector<Point> probes;
    for (int j = 0; j < 100; ++j) {
      std::vector<double> c(d);
      for (auto& v : c) v = u(rng);
      probes.emplace_back(c);
    }
    std::vector<Prediction> before(probes.size(), Prediction::abstain);
    for (int round = 0; round < 5; ++round) {
      auto es = random_entries(h, 8, rng, pol);
      st = compress_rect(st, es);
      EXPECT_LE(st.positive_witnesses().size(), 2 * d);
      EXPECT_LE(st.negative_witnesses().size(), 2 * d);
      for (std::size_t j = 0; j < probes.size(); ++j) {
        auto p = infer_rect(st, probes[j]);
        if (p != Prediction::abstain) EXPECT_EQ(p, to_prediction(h.label(probes[j])));
        if (before[j] != Prediction::abstain) EXPECT_EQ(p, before[j]);
        before[j] = p;
      }
    }
  }
}

TEST(RandomRectangle, InsideBoxAndDeterministic) {
  Rng a(3), b(3);
  for (int i = 0; i < 50; ++i) {
    auto r = random_rectangle(4, -1, 2, a);
    auto s = random_rectangle(4, -1, 2, b);
    for (std::size_t k = 0; k < 4; ++k) {
      EXPECT_EQ(r.side(k).lo, s.side(k).lo);
      EXPECT_GE(r.side(k).lo, -1);
      EXPECT_LE(r.side(k).hi, 2);
    }
  }
}
