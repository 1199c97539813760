#include "rpu/certify.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <sstream>

#include "rpu/bruteforce.hpp"
#include "rpu/halfspaces2d.hpp"
#include "rpu/rectangles.hpp"
#include "rpu/trees.hpp"

namespace rpu {

using brute::LabelSet;

nlohmann::json CertifyReport::to_json() const {
  return {{"suite", suite},
          {"instances", instances},
          {"probes", probes},
          {"excluded_probes", excluded_probes},
          {"size_violations", size_violations},
          {"lossless_violations", lossless_violations},
          {"rule_violations", rule_violations},
          {"unsound", unsound},
          {"vacuous", vacuous},
          {"ok", ok()},
          {"examples", examples}};
}

namespace {

bool same(const LabelSet& a, const LabelSet& b) { return a.positive == b.positive && a.negative == b.negative; }

void note(CertifyReport& r, const std::string& what) {
  if (r.examples.size() < 5) r.examples.push_back(what);
}

std::size_t uniform_index(Rng& rng, std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng); }

}  // namespace

// ---------------------------------------------------------------- rectangles

CertifyReport certify_rectangles(const CertifyOptions& o) {
  CertifyReport rep;
  rep.suite = "rectangles";
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (std::size_t inst = 0; inst < o.instances; ++inst) {
    Rng rng(mix_seed(o.seed, inst));
    const std::size_t d = 1 + uniform_index(rng, 5);
    const auto h = random_rectangle(d, 0.0, 1.0, rng);
    const Label sign = u(rng) < 0.5 ? Label::positive : Label::negative;
    const std::size_t n = 1 + uniform_index(rng, o.max_sample);
    const auto policy = ResponsePolicy::seeded_random(mix_seed(o.seed, 1000000 + inst));

    std::vector<RectEntry> entries;
    brute::RectTranscript full{d, {}, {}};
    for (std::size_t id = 1; entries.size() < n; ++id) {
      std::vector<double> c(d);
      for (auto& v : c) v = -0.2 + 1.4 * u(rng);
      Point x(c);
      if (h.label(x) != sign) continue;
      QueryResponse r = adversary_select(odd_one_out(h, x), policy, query_identity("odd_one_out", {&x}));
      entries.push_back({Sample{id, x}, r});
      if (sign == Label::positive)
        full.positives.push_back(x);
      else
        full.negatives.emplace_back(x, std::get<OddOneOut>(r));
    }
    ++rep.instances;
    RectCompressedState st = compress_rect(RectCompressedState(d), entries);

    brute::RectTranscript comp{d, {}, {}};
    std::size_t kept = 0;
    if (sign == Label::positive) {
      for (const auto& w : st.positive_witnesses()) comp.positives.push_back(w.x);
      kept = comp.positives.size();
    } else {
      for (std::size_t i = 0; i < d; ++i)
        for (Side side : {Side::too_small, Side::too_large})
          if (const auto& r = st.rep(i, side)) comp.negatives.emplace_back(r->x, OddOneOut{i, side});
      kept = comp.negatives.size();
    }
    if (kept > 2 * d) {
      ++rep.size_violations;
      note(rep, "rect instance " + std::to_string(inst) + ": kept " + std::to_string(kept));
    }
    if (!brute::rect_consistent(full)) ++rep.vacuous;

    for (std::size_t p = 0; p < o.probes; ++p) {
      std::vector<double> c(d);
      for (std::size_t i = 0; i < d; ++i) {
        // half the coordinates land exactly on sample coordinates to hit hull faces
        c[i] = u(rng) < 0.5 ? -0.2 + 1.4 * u(rng) : entries[uniform_index(rng, entries.size())].sample.x[i];
      }
      Point y(c);
      ++rep.probes;
      LabelSet lf = brute::rect_label_set(full, y);
      LabelSet lc = brute::rect_label_set(comp, y);
      if (!same(lf, lc)) {
        ++rep.lossless_violations;
        note(rep, "rect instance " + std::to_string(inst) + " probe " + std::to_string(p) + ": lossless");
      }
      Prediction got = infer_rect(st, y);
      if (got != lf.inferred()) {
        ++rep.rule_violations;
        note(rep, "rect instance " + std::to_string(inst) + " probe " + std::to_string(p) + ": rule");
      }
      if ((got != Prediction::abstain && got != to_prediction(h.label(y))) || !lf.contains(h.label(y))) ++rep.unsound;
    }
  }
  return rep;
}

// ---------------------------------------------------------------- trees

namespace {

// Hull rule evaluated from scratch: group points by their same-leaf answers
// (union-find), then look for a hull containing the probe.
class NaiveHullRule {
 public:
  NaiveHullRule(const std::vector<Point>& pts, const std::vector<Label>& labels,
                const std::vector<std::tuple<std::size_t, std::size_t, bool>>& answers)
      : parent_(pts.size()) {
    std::iota(parent_.begin(), parent_.end(), 0);
    for (const auto& [a, b, same_leaf] : answers)
      if (same_leaf) parent_[find(a)] = find(b);
    std::map<std::size_t, std::size_t> idx;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      std::size_t root = find(i);
      auto [it, fresh] = idx.emplace(root, hulls_.size());
      if (fresh) hulls_.push_back({pts[i].coords(), pts[i].coords(), labels[i]});
      auto& hh = hulls_[it->second];
      for (std::size_t k = 0; k < pts[i].dim(); ++k) {
        hh.lo[k] = std::min(hh.lo[k], pts[i][k]);
        hh.hi[k] = std::max(hh.hi[k], pts[i][k]);
      }
    }
  }

  Prediction infer(const Point& y) const {
    for (const auto& hh : hulls_) {
      bool in = true;
      for (std::size_t k = 0; k < y.dim(); ++k) in = in && y[k] >= hh.lo[k] && y[k] <= hh.hi[k];
      if (in) return to_prediction(hh.label);
    }
    return Prediction::abstain;
  }

 private:
  struct Hull {
    std::vector<double> lo, hi;
    Label label;
  };
  std::size_t find(std::size_t i) {
    while (parent_[i] != i) i = parent_[i] = parent_[parent_[i]];
    return i;
  }
  std::vector<std::size_t> parent_;
  std::vector<Hull> hulls_;
};

brute::TreeTranscript complete_transcript(const DecisionTreeHypothesis& h, const std::vector<Point>& pts) {
  brute::TreeTranscript t;
  t.points = pts;
  for (const auto& p : pts) t.labels.push_back(h.label(p));
  for (std::size_t a = 0; a < pts.size(); ++a)
    for (std::size_t b = a + 1; b < pts.size(); ++b) t.same_leaf.emplace_back(a, b, h.leaf_of(pts[a]) == h.leaf_of(pts[b]));
  return t;
}

}  // namespace

CertifyReport certify_trees(const CertifyOptions& o) {
  CertifyReport rep;
  rep.suite = "trees";
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (std::size_t inst = 0; inst < o.instances; ++inst) {
    Rng rng(mix_seed(o.seed, inst));
    brute::TreeFamily fam;
    fam.d = 1 + uniform_index(rng, 2);
    fam.s = 4;
    const std::size_t leaves = 1 + uniform_index(rng, 4);
    const auto h = brute::random_grid_tree(fam, leaves, mix_seed(o.seed, 2000000 + inst));
    Label sign = u(rng) < 0.5 ? Label::positive : Label::negative;
    bool has_sign = false;
    for (const auto& nd : h.nodes()) has_sign = has_sign || (nd.leaf && nd.label == sign);
    if (!has_sign) sign = opposite(sign);
    const std::size_t n = 1 + uniform_index(rng, o.max_sample);

    auto draw = [&] {
      std::vector<double> c(fam.d);
      for (auto& v : c) v = u(rng);
      return Point(c);
    };
    std::vector<LabeledSample> pts;
    std::vector<Point> raw;
    for (std::size_t id = 1; pts.size() < n; ++id) {
      Point x = draw();
      if (h.label(x) != sign) continue;
      pts.push_back({Sample{id, x}, sign});
      raw.push_back(x);
    }
    ++rep.instances;
    auto grouped = group_by_leaf(LeafGroupState(fam.d), pts, [&](const Sample& a, const Sample& b) {
      return h.leaf_of(a.x) == h.leaf_of(b.x);
    });
    const auto& st = grouped.state;
    std::vector<Point> kept;
    for (const auto& w : st.witnesses(sign)) kept.push_back(w.x);
    if (kept.size() > 2 * fam.d * h.leaves()) {
      ++rep.size_violations;
      note(rep, "tree instance " + std::to_string(inst) + ": kept " + std::to_string(kept.size()));
    }

    const auto full_t = complete_transcript(h, raw);
    const auto comp_t = complete_transcript(h, kept);
    brute::TreeOracle full(fam, full_t), comp(fam, comp_t);
    NaiveHullRule full_rule(full_t.points, full_t.labels, full_t.same_leaf);
    if (full.vacuous()) ++rep.vacuous;

    for (std::size_t p = 0; p < o.probes; ++p) {
      Point y = draw();
      if (u(rng) < 0.5) {
        // copy one coordinate from a sample point to sit on a hull face
        auto c = y.coords();
        std::size_t k = uniform_index(rng, fam.d);
        c[k] = raw[uniform_index(rng, raw.size())][k];
        y = Point(c);
      }
      ++rep.probes;
      LabelSet lf = full.label_set(y), lc = comp.label_set(y);
      if (!same(lf, lc)) {
        ++rep.lossless_violations;
        note(rep, "tree instance " + std::to_string(inst) + " probe " + std::to_string(p) + ": family inference");
      }
      Prediction got = infer_tree(st, y);
      Prediction want = full_rule.infer(y);
      if (got != want || (got != Prediction::abstain && got != lf.inferred())) {
        ++rep.rule_violations;
        note(rep, "tree instance " + std::to_string(inst) + " probe " + std::to_string(p) + ": hull rule");
      }
      if ((got != Prediction::abstain && got != to_prediction(h.label(y))) || !lf.contains(h.label(y))) ++rep.unsound;
    }
  }
  return rep;
}

// ---------------------------------------------------------------- halfspaces

namespace {

struct LatticeInstance {
  brute::LatticeHalfspace h;
  std::vector<brute::LatticePoint> pts;
};

brute::LatticeHalfspace random_lattice_halfspace(Rng& rng) {
  std::uniform_int_distribution<std::int64_t> coef(-8, 8), ctr(-10, 10);
  brute::LatticeHalfspace h;
  do {
    h.a = coef(rng);
    h.b = coef(rng);
  } while (h.a == 0 && h.b == 0);
  h.c = -(h.a * ctr(rng) + h.b * ctr(rng));
  return h;
}

std::vector<brute::LatticePoint> lattice_sample(const brute::LatticeHalfspace& h, Label sign, std::size_t n, Rng& rng) {
  std::uniform_int_distribution<std::int64_t> c(-32, 32);
  std::vector<brute::LatticePoint> out;
  while (out.size() < n) {
    brute::LatticePoint p{c(rng), c(rng)};
    if (h.label(p) == sign) out.push_back(p);
  }
  return out;
}

struct SignCone {
  ConeState cone;
  brute::HalfspaceTranscript full, comp;
};

brute::LatticePoint to_lattice(const Point& p) {
  return {static_cast<std::int64_t>(p[0]), static_cast<std::int64_t>(p[1])};
}

// Sorts and compresses one monochromatic lattice sample; returns the cone and
// the full and compressed transcripts in "value(first) >= value(second)" form.
SignCone compress_lattice(const brute::LatticeHalfspace& h, Label sign, const std::vector<brute::LatticePoint>& pts,
                          const ResponsePolicy& policy) {
  SignCone sc;
  std::vector<Sample> samples;
  for (std::size_t i = 0; i < pts.size(); ++i) samples.push_back({i + 1, pts[i].to_point()});
  const bool flip = sign == Label::negative;
  auto cmp = [&](const Sample& a, const Sample& b) {
    auto la = to_lattice(a.x), lb = to_lattice(b.x);
    std::int64_t va = h.value(la), vb = h.value(lb);
    Order o;
    if (va > vb)
      o = Order::first_ge_second;
    else if (va < vb)
      o = Order::second_ge_first;
    else
      o = std::get<Comparison>(adversary_select({Comparison{Order::first_ge_second}, Comparison{Order::second_ge_first}},
                                                policy, query_identity("compare", {&a.x, &b.x})))
              .order;
    if (o == Order::first_ge_second)
      sc.full.ge.emplace_back(la, lb);
    else
      sc.full.ge.emplace_back(lb, la);
    if (flip) o = o == Order::first_ge_second ? Order::second_ge_first : Order::first_ge_second;
    return o;
  };
  sc.cone = build_cone(ConeState{}, samples, cmp).state;
  (sign == Label::positive ? sc.full.positives : sc.full.negatives) = pts;

  const auto& w = sc.cone.witnesses;
  for (const auto& s : w) (sign == Label::positive ? sc.comp.positives : sc.comp.negatives).push_back(to_lattice(s.x));
  auto stored = [&](std::size_t i, std::size_t j) {
    return std::find(sc.cone.relations.begin(), sc.cone.relations.end(), Relation{i, j}) != sc.cone.relations.end();
  };
  for (std::size_t i = 0; i < w.size(); ++i)
    for (std::size_t j = i + 1; j < w.size(); ++j) {
      auto a = to_lattice(w[i].x), b = to_lattice(w[j].x);
      std::int64_t va = h.value(a), vb = h.value(b);
      if (va > vb) {
        sc.comp.ge.emplace_back(a, b);
      } else if (va < vb) {
        sc.comp.ge.emplace_back(b, a);
      } else {
        // a tie: replay the stored answer(s), translated back from the sign's order
        bool ij = stored(i, j), ji = stored(j, i);
        if (flip) std::swap(ij, ji);
        if (ij) sc.comp.ge.emplace_back(a, b);
        if (ji) sc.comp.ge.emplace_back(b, a);
      }
    }
  return sc;
}

brute::LatticePoint lattice_probe(Rng& rng, const std::vector<brute::LatticePoint>& pts) {
  std::uniform_int_distribution<std::int64_t> c(-40, 40);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  brute::LatticePoint p{c(rng), c(rng)};
  if (u(rng) < 0.3) {
    // reflect a sample point through another: lands on lines through the sample
    const auto& a = pts[uniform_index(rng, pts.size())];
    const auto& b = pts[uniform_index(rng, pts.size())];
    std::int64_t t = std::uniform_int_distribution<std::int64_t>(-1, 2)(rng);
    p = {a.x + t * (b.x - a.x), a.y + t * (b.y - a.y)};
    p.x = std::clamp<std::int64_t>(p.x, -4000, 4000);
    p.y = std::clamp<std::int64_t>(p.y, -4000, 4000);
  }
  return p;
}

}  // namespace

CertifyReport certify_halfspaces(const CertifyOptions& o) {
  CertifyReport rep;
  rep.suite = "halfspaces";
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (std::size_t inst = 0; inst < o.instances; ++inst) {
    Rng rng(mix_seed(o.seed, inst));
    const auto h = random_lattice_halfspace(rng);
    const Label sign = u(rng) < 0.5 ? Label::positive : Label::negative;
    const std::size_t n = 1 + uniform_index(rng, o.max_sample);
    const auto pts = lattice_sample(h, sign, n, rng);
    const auto policy = ResponsePolicy::seeded_random(mix_seed(o.seed, 3000000 + inst));
    ++rep.instances;
    SignCone sc;
    try {
      sc = compress_lattice(h, sign, pts, policy);
    } catch (const std::exception& e) {
      ++rep.rule_violations;
      note(rep, "halfspace instance " + std::to_string(inst) + ": " + e.what());
      continue;
    }
    if (sc.cone.witnesses.size() > 5) {
      ++rep.size_violations;
      note(rep, "halfspace instance " + std::to_string(inst) + ": kept " + std::to_string(sc.cone.witnesses.size()));
    }
    brute::HalfspaceOracle full(sc.full), comp(sc.comp);
    if (full.vacuous()) ++rep.vacuous;
    for (std::size_t p = 0; p < o.probes; ++p) {
      auto y = lattice_probe(rng, pts);
      Point yp = y.to_point();
      LabelSet lf = full.label_set(y), lc = comp.label_set(y);
      if (!same(lf, lc)) {
        ++rep.lossless_violations;
        note(rep, "halfspace instance " + std::to_string(inst) + " probe (" + std::to_string(y.x) + "," +
                      std::to_string(y.y) + "): lossless");
      }
      if (!lf.contains(h.label(y))) ++rep.unsound;
      if (cone_boundary_distance(sc.cone, yp) < 1e-9) {
        ++rep.excluded_probes;
        continue;
      }
      ++rep.probes;
      bool inside = cone_contains(sc.cone, yp);
      bool forced = lf.singleton() && lf.contains(sign);
      if (inside != forced) {
        ++rep.rule_violations;
        note(rep, "halfspace instance " + std::to_string(inst) + " probe (" + std::to_string(y.x) + "," +
                      std::to_string(y.y) + "): cone " + (inside ? "in" : "out"));
      }
      if (inside && h.label(y) != sign) ++rep.unsound;
    }
  }
  return rep;
}

CertifyReport certify_halfspace_exactness(const CertifyOptions& o) {
  CertifyReport rep;
  rep.suite = "halfspace_exactness";
  for (std::size_t inst = 0; inst < o.instances; ++inst) {
    Rng rng(mix_seed(o.seed, inst));
    const auto h = random_lattice_halfspace(rng);
    const std::size_t np = 1 + uniform_index(rng, o.max_sample);
    const std::size_t nn = 1 + uniform_index(rng, o.max_sample);
    const auto pos_pts = lattice_sample(h, Label::positive, np, rng);
    const auto neg_pts = lattice_sample(h, Label::negative, nn, rng);
    const auto policy = ResponsePolicy::seeded_random(mix_seed(o.seed, 4000000 + inst));
    ++rep.instances;
    SignCone pos, neg;
    try {
      pos = compress_lattice(h, Label::positive, pos_pts, policy);
      neg = compress_lattice(h, Label::negative, neg_pts, policy);
    } catch (const std::exception& e) {
      ++rep.rule_violations;
      note(rep, "instance " + std::to_string(inst) + ": " + e.what());
      continue;
    }
    if (pos.cone.witnesses.size() > 5 || neg.cone.witnesses.size() > 5) ++rep.size_violations;
    brute::HalfspaceOracle pos_oracle(pos.full), neg_oracle(neg.full);
    if (pos_oracle.vacuous() || neg_oracle.vacuous()) ++rep.vacuous;
    std::vector<brute::LatticePoint> all = pos_pts;
    all.insert(all.end(), neg_pts.begin(), neg_pts.end());
    for (std::size_t p = 0; p < o.probes; ++p) {
      auto y = lattice_probe(rng, all);
      Point yp = y.to_point();
      if (cone_boundary_distance(pos.cone, yp) < 1e-9 || cone_boundary_distance(neg.cone, yp) < 1e-9) {
        ++rep.excluded_probes;
        continue;
      }
      ++rep.probes;
      Prediction want = Prediction::abstain;
      if (pos_oracle.label_set(y).inferred() == Prediction::positive) want = Prediction::positive;
      if (neg_oracle.label_set(y).inferred() == Prediction::negative) {
        if (want != Prediction::abstain) ++rep.unsound;
        want = Prediction::negative;
      }
      Prediction got;
      try {
        got = infer_halfspace(pos.cone, neg.cone, yp);
      } catch (const OracleInconsistency&) {
        ++rep.unsound;
        continue;
      }
      if (got != want) {
        ++rep.rule_violations;
        note(rep, "instance " + std::to_string(inst) + " probe (" + std::to_string(y.x) + "," + std::to_string(y.y) +
                      ")");
      }
      if (got != Prediction::abstain && got != to_prediction(h.label(y))) ++rep.unsound;
    }
  }
  return rep;
}

}  // namespace rpu
