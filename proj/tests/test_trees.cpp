#include <gtest/gtest.h>

#include "rpu/trees.hpp"

using namespace rpu;
using Dir = DecisionTreeHypothesis::Direction;

namespace {

DecisionTreeHypothesis threshold_tree() {
  DecisionTreeHypothesis h(1, Label::negative);
  h.split(0, 0, 0.0, Dir::ge, Label::negative, Label::positive);  // x < 0 is positive
  return h;
}

Handle g_next = 1;

LabeledSample ls(const DecisionTreeHypothesis& h, Point p) {
  Label l = h.label(p);
  return {Sample{g_next++, std::move(p)}, l};
}

struct CountingQuery {
  const DecisionTreeHypothesis* h;
  std::uint64_t calls = 0;
  bool operator()(const Sample& a, const Sample& b) {
    ++calls;
    return std::get<SameLeaf>(same_leaf(*h, a.x, b.x).front()).same;
  }
};

}  // namespace

TEST(SameLeaf, Examples) {
  auto h = threshold_tree();
  Point a{-1}, b{1};
  EXPECT_EQ(same_leaf(h, a, a), std::vector<QueryResponse>{SameLeaf{true}});
  EXPECT_EQ(same_leaf(h, a, b), std::vector<QueryResponse>{SameLeaf{false}});
  DecisionTreeHypothesis one(2, Label::positive);
  EXPECT_EQ(same_leaf(one, {5, 5}, {-3, 8}), std::vector<QueryResponse>{SameLeaf{true}});
  EXPECT_THROW(same_leaf(h, a, Point{1, 2}), ContractViolation);
}

TEST(DecisionTree, ClosedSideFollowsDirection) {
  DecisionTreeHypothesis ge(1, Label::negative);
  ge.split(0, 0, 0.0, Dir::ge, Label::positive, Label::negative);
  EXPECT_EQ(ge.label(Point{0.0}), Label::positive);
  DecisionTreeHypothesis le(1, Label::negative);
  le.split(0, 0, 0.0, Dir::le, Label::positive, Label::negative);
  EXPECT_EQ(le.label(Point{0.0}), Label::positive);
  EXPECT_EQ(le.label(Point{0.1}), Label::negative);
}

TEST(GroupByLeaf, FirstPointFoundsGroup) {
  auto h = threshold_tree();
  CountingQuery q{&h};
  std::vector<LabeledSample> pts{ls(h, Point{-1.5})};
  auto r = group_by_leaf(LeafGroupState(1), pts, std::ref(q));
  ASSERT_EQ(r.state.groups().size(), 1u);
  EXPECT_EQ(r.state.groups()[0].lo[0], -1.5);
  EXPECT_EQ(r.state.groups()[0].hi[0], -1.5);
  EXPECT_EQ(r.queries, 0u);
}

TEST(GroupByLeaf, ThresholdTreeExample) {
  // both leaves positive, so the grouping query decides and not the label
  DecisionTreeHypothesis hp(1, Label::negative);
  hp.split(0, 0, 0.0, Dir::ge, Label::positive, Label::positive);
  CountingQuery q{&hp};
  std::vector<LabeledSample> pts{ls(hp, Point{-1}), ls(hp, Point{-2}), ls(hp, Point{3})};
  auto r = group_by_leaf(LeafGroupState(1), pts, std::ref(q));
  const auto& g = r.state.groups();
  ASSERT_EQ(g.size(), 2u);
  EXPECT_EQ(g[0].lo[0], -2);
  EXPECT_EQ(g[0].hi[0], -1);
  EXPECT_EQ(g[1].lo[0], 3);
  EXPECT_EQ(g[1].hi[0], 3);
  EXPECT_EQ(q.calls, r.queries);
  EXPECT_LE(r.queries, 3u * 3u);

  EXPECT_EQ(infer_tree(r.state, Point{-1.5}), Prediction::positive);
  EXPECT_EQ(infer_tree(r.state, Point{0.5}), Prediction::abstain);
}

TEST(GroupByLeaf, InconsistentOracleThrows) {
  DecisionTreeHypothesis h(1, Label::positive);
  std::vector<LabeledSample> first{ls(h, Point{0}), ls(h, Point{2})};
  // a lying oracle: splits the first two points, then joins the third to both
  int call = 0;
  auto liar = [&call](const Sample&, const Sample&) { return call++ > 0; };
  auto r = group_by_leaf(LeafGroupState(1), first, liar);
  ASSERT_EQ(r.state.groups().size(), 2u);
  std::vector<LabeledSample> third{ls(h, Point{1})};
  EXPECT_THROW(group_by_leaf(r.state, third, liar), OracleInconsistency);
}

TEST(InferTree, OverlappingHullsThrow) {
  LeafGroupState st(1);
  LeafGroup a{Sample{1, Point{0}}, Label::positive, {0}, {2}, {Sample{1, Point{0}}}, {Sample{2, Point{2}}}};
  LeafGroup b{Sample{3, Point{1}}, Label::negative, {1}, {3}, {Sample{3, Point{1}}}, {Sample{4, Point{3}}}};
  st.set_groups({a, b});
  EXPECT_THROW(infer_tree(st, Point{1.5}), OracleInconsistency);
  EXPECT_EQ(infer_tree(st, Point{0.5}), Prediction::positive);
  // hulls sharing only a face still meet there
  LeafGroup c{Sample{5, Point{2}}, Label::negative, {2}, {3}, {Sample{5, Point{2}}}, {Sample{6, Point{3}}}};
  st.set_groups({a, c});
  EXPECT_THROW(infer_tree(st, Point{2}), OracleInconsistency);
  EXPECT_EQ(infer_tree(st, Point{2.5}), Prediction::negative);
}

// Random s = 4, d = 2, 200 points: each point in at most one hull (in fact
// its own), at most 4 groups, witnesses <= 2d per group.
TEST(GroupByLeaf, RandomTreeProperties) {
  for (std::uint64_t seed = 1; seed <= 30; ++seed) {
    auto h = random_tree(2, 4, 0, 1, seed);
    Rng rng(seed);
    auto dist = Distribution::cube(2, 0, 1);
    std::vector<LabeledSample> pts;
    for (int i = 0; i < 200; ++i) pts.push_back(ls(h, dist.sample(rng)));
    CountingQuery q{&h};
    LeafGroupState st(2);
    std::uint64_t bound = 0;
    for (std::size_t off = 0; off < pts.size(); off += 25) {
      std::span<const LabeledSample> batch(pts.data() + off, 25);
      bound += 25 * (st.groups().size() + 25 + 1);
      auto r = group_by_leaf(st, batch, std::ref(q));
      st = std::move(r.state);
    }
    EXPECT_LE(q.calls, bound);
    EXPECT_LE(st.groups().size(), 4u);
    EXPECT_LE(st.witnesses(Label::positive).size() + st.witnesses(Label::negative).size(), 2u * 2 * 4);
    for (const auto& p : pts) {
      int holding = 0;
      for (const auto& g : st.groups()) holding += g.hull_contains(p.sample.x);
      EXPECT_EQ(holding, 1);
      EXPECT_EQ(infer_tree(st, p.sample.x), to_prediction(p.label));
    }
    for (const auto& g : st.groups()) {
      auto w = g.witnesses();
      EXPECT_LE(w.size(), 4u);
      bool has_rep = false;
      for (const auto& s : w) has_rep |= s.id == g.rep.id;
      EXPECT_TRUE(has_rep);
    }
  }
}

// s = 8, d = 3: 10,000 inferred probe labels all match direct evaluation.
TEST(InferTree, SoundOnRandomTree) {
  auto h = random_tree(3, 8, 0, 1, 99);
  auto dist = Distribution::cube(3, 0, 1);
  Rng rng(5);
  std::vector<LabeledSample> pts;
  for (int i = 0; i < 400; ++i) pts.push_back(ls(h, dist.sample(rng)));
  CountingQuery q{&h};
  auto st = group_by_leaf(LeafGroupState(3), pts, std::ref(q)).state;
  int inferred = 0;
  for (int i = 0; i < 10000; ++i) {
    Point x = dist.sample(rng);
    auto p = infer_tree(st, x);
    if (p == Prediction::abstain) continue;
    ++inferred;
    ASSERT_EQ(p, to_prediction(h.label(x)));
  }
  EXPECT_GT(inferred, 5000);
}

// Compressing in batches gives the same hulls as the full transcript at once.
TEST(GroupByLeaf, LosslessUnderHullRule) {
  auto h = random_tree(2, 4, 0, 1, 17);
  auto dist = Distribution::cube(2, 0, 1);
  Rng rng(1);
  std::vector<LabeledSample> pts;
  for (int i = 0; i < 120; ++i) pts.push_back(ls(h, dist.sample(rng)));
  CountingQuery q{&h};
  auto all = group_by_leaf(LeafGroupState(2), pts, std::ref(q)).state;
  LeafGroupState st(2);
  for (std::size_t off = 0; off < pts.size(); off += 12) {
    // only retained witnesses survive between batches
    st = group_by_leaf(st, std::span<const LabeledSample>(pts.data() + off, 12), std::ref(q)).state;
  }
  for (int i = 0; i < 2000; ++i) {
    Point x = dist.sample(rng);
    EXPECT_EQ(infer_tree(all, x), infer_tree(st, x));
  }
}

TEST(RandomTree, SizesAndDeterminism) {
  EXPECT_EQ(random_tree(2, 1, 0, 1, 5).leaves(), 1u);
  auto two = random_tree(2, 2, 0, 1, 5);
  EXPECT_EQ(two.leaves(), 2u);
  EXPECT_EQ(two.nodes().size(), 3u);
  auto a = random_tree(3, 16, 0, 1, 42);
  EXPECT_EQ(a.leaves(), 16u);
  EXPECT_EQ(a, random_tree(3, 16, 0, 1, 42));
  EXPECT_FALSE(a == random_tree(3, 16, 0, 1, 43));
  EXPECT_THROW(random_tree(2, 0, 0, 1, 1), ContractViolation);
}

TEST(DecisionTree, JsonRoundTrip) {
  auto a = random_tree(3, 9, 0, 1, 8);
  auto b = DecisionTreeHypothesis::from_json(a.to_json());
  EXPECT_EQ(a, b);
  Rng rng(2);
  auto dist = Distribution::cube(3, 0, 1);
  for (int i = 0; i < 500; ++i) {
    Point x = dist.sample(rng);
    EXPECT_EQ(a.label(x), b.label(x));
  }
  EXPECT_THROW(DecisionTreeHypothesis::from_json("{\"d\":1}"), ContractViolation);
  EXPECT_THROW(DecisionTreeHypothesis::from_json("not json"), ContractViolation);
}
