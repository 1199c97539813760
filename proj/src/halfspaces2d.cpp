#include "rpu/halfspaces2d.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

namespace rpu {

namespace {

using Vec = std::array<double, 2>;

double cross(const Vec& a, const Vec& b) { return a[0] * b[1] - a[1] * b[0]; }
double dot(const Vec& a, const Vec& b) { return a[0] * b[0] + a[1] * b[1]; }
Vec diff(const Point& a, const Point& b) { return {a[0] - b[0], a[1] - b[1]}; }
bool is_zero(const Vec& a) { return a[0] == 0 && a[1] == 0; }
bool same_ray(const Vec& a, const Vec& b) { return cross(a, b) == 0 && dot(a, b) > 0; }
bool opposite_ray(const Vec& a, const Vec& b) { return cross(a, b) == 0 && dot(a, b) < 0; }

void check_2d(const Point& x) {
  if (x.dim() != 2) throw ContractViolation("halfspaces2d: points must be 2-dimensional");
}

// Reachability in the comparison graph (edge g -> l for g >= l). Rows are
// filled by BFS on first use; large transcripts only ever touch a few.
class Reach {
 public:
  Reach(std::size_t n, const std::vector<Relation>& relations) : out_(n), in_(n), rows_(n) {
    for (const auto& [g, l] : relations) {
      if (g >= n || l >= n) throw ContractViolation("relation index out of range");
      out_[g].push_back(l);
      in_[l].push_back(g);
    }
  }
  std::size_t size() const { return out_.size(); }
  bool operator()(std::size_t i, std::size_t j) const {
    if (rows_[i].empty()) rows_[i] = visit(i, out_);
    return rows_[i][j];
  }
  // Smallest index that every node reaches, or size() if none.
  std::size_t minimum() const {
    const std::size_t n = size();
    if (n == 0) return 0;
    // the root of the last search tree over the reversed graph lies in a
    // component nothing else is below
    std::vector<char> seen(n, 0);
    std::size_t root = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (seen[i]) continue;
      root = i;
      auto r = visit(i, in_);
      for (std::size_t j = 0; j < n; ++j) seen[j] = seen[j] || r[j];
    }
    auto above = visit(root, in_);
    if (std::find(above.begin(), above.end(), 0) != above.end()) return n;
    auto below = visit(root, out_);
    return static_cast<std::size_t>(std::find(below.begin(), below.end(), 1) - below.begin());
  }

 private:
  static std::vector<char> visit(std::size_t from, const std::vector<std::vector<std::size_t>>& adj) {
    std::vector<char> r(adj.size(), 0);
    std::vector<std::size_t> stack{from};
    r[from] = 1;
    while (!stack.empty()) {
      std::size_t v = stack.back();
      stack.pop_back();
      for (auto w : adj[v])
        if (!r[w]) {
          r[w] = 1;
          stack.push_back(w);
        }
    }
    return r;
  }

  std::vector<std::vector<std::size_t>> out_, in_;
  mutable std::vector<std::vector<char>> rows_;
};

struct Candidate {
  Vec dir;
  std::size_t hi, lo;  // nodes[hi] >= nodes[lo]
};

struct Shape {
  ConeState::Tag tag = ConeState::Tag::point;
  Vec right{0, 0}, left{0, 0};
  int side = 0;
  bool consistent = true;
};

// Every reachable difference is a sum of edge differences, so the edges
// generate the same cone.
std::vector<Candidate> candidates(const std::vector<const Point*>& pts, const std::vector<Relation>& relations) {
  std::vector<Candidate> out;
  for (const auto& [g, l] : relations) {
    if (g == l) continue;
    Vec d = diff(*pts[g], *pts[l]);
    if (!is_zero(d)) out.push_back({d, g, l});
  }
  return out;
}

// Shape of the closed cone generated by the candidate directions.
Shape classify(const std::vector<Candidate>& cands) {
  Shape s;
  if (cands.empty()) return s;
  // One pass finds the clockwise-most (right) and counter-clockwise-most (left)
  // directions whenever the set is pointed; the checks below reject otherwise.
  Vec r = cands[0].dir, l = cands[0].dir;
  for (const auto& c : cands) {
    if (cross(r, c.dir) < 0) r = c.dir;
    if (cross(c.dir, l) < 0) l = c.dir;
  }
  bool pointed = true;
  for (const auto& c : cands) {
    if (cross(r, c.dir) < 0 || opposite_ray(r, c.dir) || cross(c.dir, l) < 0 || opposite_ray(l, c.dir)) {
      pointed = false;
      break;
    }
  }
  if (pointed && cross(r, l) >= 0) {
    s.right = r;
    s.left = l;
    s.tag = cross(r, l) > 0 ? ConeState::Tag::proper : ConeState::Tag::ray;
    return s;
  }
  // Not pointed: the directions must contain an opposite pair p, -p and lie on
  // one side of the line through p.
  const Candidate* p = nullptr;
  for (const auto& a : cands) {
    for (const auto& b : cands)
      if (opposite_ray(a.dir, b.dir)) {
        p = &a;
        break;
      }
    if (p) break;
  }
  if (!p) {
    s.consistent = false;
    return s;
  }
  bool any_pos = false, any_neg = false;
  for (const auto& c : cands) {
    double x = cross(p->dir, c.dir);
    any_pos = any_pos || x > 0;
    any_neg = any_neg || x < 0;
  }
  if (any_pos && any_neg) {
    s.consistent = false;
    return s;
  }
  s.right = p->dir;
  if (!any_pos && !any_neg) {
    s.tag = ConeState::Tag::line;
  } else {
    s.tag = ConeState::Tag::halfplane;
    s.side = any_pos ? 1 : -1;
  }
  return s;
}

bool same_shape(const Shape& a, const Shape& b) {
  if (a.tag != b.tag) return false;
  switch (a.tag) {
    case ConeState::Tag::empty:
    case ConeState::Tag::point:
      return true;
    case ConeState::Tag::ray:
      return same_ray(a.right, b.right);
    case ConeState::Tag::proper:
      return same_ray(a.right, b.right) && same_ray(a.left, b.left);
    case ConeState::Tag::line:
      return cross(a.right, b.right) == 0;
    case ConeState::Tag::halfplane: {
      if (cross(a.right, b.right) != 0) return false;
      Vec na{-a.right[1] * a.side, a.right[0] * a.side};
      Vec nb{-b.right[1] * b.side, b.right[0] * b.side};
      return dot(na, nb) > 0;
    }
  }
  return false;
}

bool lex_less(const Point& a, const Point& b) { return a.coords() < b.coords(); }

// Among reachable pairs whose direction runs along `dir`, the one adding the
// fewest new points to `have`, ties broken by the smallest coordinates.
Candidate pick_pair(const Vec& dir, const std::vector<std::size_t>& have, const std::vector<const Point*>& pts,
                    const Reach& reach) {
  std::optional<Candidate> best;
  int best_cost = 3;
  auto cost = [&](const Candidate& c) {
    int k = 0;
    if (std::find(have.begin(), have.end(), c.hi) == have.end()) ++k;
    if (std::find(have.begin(), have.end(), c.lo) == have.end()) ++k;
    return k;
  };
  auto lex_before = [&](const Candidate& a, const Candidate& b) {
    if (lex_less(*pts[a.hi], *pts[b.hi])) return true;
    if (lex_less(*pts[b.hi], *pts[a.hi])) return false;
    return lex_less(*pts[a.lo], *pts[b.lo]);
  };
  const std::size_t n = pts.size();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      Candidate c{diff(*pts[i], *pts[j]), i, j};
      if (!same_ray(c.dir, dir) || !reach(i, j)) continue;
      int k = cost(c);
      if (!best || k < best_cost || (k == best_cost && lex_before(c, *best))) {
        best = c;
        best_cost = k;
      }
    }
  if (!best) throw ContractViolation("extreme direction has no witnessing pair");
  return *best;
}

Shape shape_of_subset(const std::vector<const Point*>& pts, const Reach& reach, const std::vector<std::size_t>& subset) {
  std::vector<const Point*> sp;
  std::vector<Relation> rel;
  for (auto i : subset) sp.push_back(pts[i]);
  for (std::size_t a = 0; a < subset.size(); ++a)
    for (std::size_t b = 0; b < subset.size(); ++b)
      if (a != b && reach(subset[a], subset[b])) rel.emplace_back(a, b);
  return classify(candidates(sp, rel));
}

// Smallest set (apex first, at most 4 more points) reproducing `target`, found
// by enumeration. Only reached for degenerate transcripts with ties.
std::vector<std::size_t> search_witnesses(const std::vector<const Point*>& pts, const Reach& reach, std::size_t apex,
                                          const Shape& target) {
  std::vector<std::size_t> others;
  for (std::size_t i = 0; i < pts.size(); ++i)
    if (i != apex) others.push_back(i);
  for (std::size_t t = 1; t <= std::min<std::size_t>(4, others.size()); ++t) {
    std::vector<std::size_t> idx(t);
    for (std::size_t i = 0; i < t; ++i) idx[i] = i;
    while (true) {
      std::vector<std::size_t> subset{apex};
      for (auto i : idx) subset.push_back(others[i]);
      if (same_shape(shape_of_subset(pts, reach, subset), target)) return subset;
      // next combination
      std::size_t k = t;
      while (k > 0 && idx[k - 1] == others.size() - t + k - 1) --k;
      if (k == 0) break;
      ++idx[k - 1];
      for (std::size_t j = k; j < t; ++j) idx[j] = idx[j - 1] + 1;
    }
  }
  std::vector<std::size_t> all{apex};
  all.insert(all.end(), others.begin(), others.end());
  return all;
}

}  // namespace

HalfspaceHypothesis::HalfspaceHypothesis(std::array<double, 2> normal, double bias) : v_(normal), b_(bias) {
  double n = std::hypot(normal[0], normal[1]);
  if (!std::isfinite(n) || n == 0 || !std::isfinite(bias)) throw ContractViolation("halfspace needs a nonzero normal");
  if (std::abs(n - 1.0) > 1e-12) {
    v_ = {normal[0] / n, normal[1] / n};
    b_ = bias / n;
  }
}

double HalfspaceHypothesis::value(const Point& x) const {
  check_2d(x);
  return v_[0] * x[0] + v_[1] * x[1] + b_;
}

HalfspaceHypothesis random_halfspace(double lo, double hi, Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double theta = 2 * M_PI * u(rng);
  double w = hi - lo;
  double px = lo + w * (0.25 + 0.5 * u(rng));
  double py = lo + w * (0.25 + 0.5 * u(rng));
  std::array<double, 2> v{std::cos(theta), std::sin(theta)};
  return HalfspaceHypothesis(v, -(v[0] * px + v[1] * py));
}

std::vector<QueryResponse> compare(const HalfspaceHypothesis& h, const Point& x, const Point& y) {
  double a = h.value(x), b = h.value(y);
  if (a > b) return {Comparison{Order::first_ge_second}};
  if (a < b) return {Comparison{Order::second_ge_first}};
  return {Comparison{Order::first_ge_second}, Comparison{Order::second_ge_first}};
}

SortResult sort_by_value(std::size_t n, const std::function<Order(std::size_t, std::size_t)>& cmp,
                         const std::function<std::optional<Order>(std::size_t, std::size_t)>& known) {
  SortResult r;
  r.order.resize(n);
  for (std::size_t i = 0; i < n; ++i) r.order[i] = i;
  std::vector<std::size_t> buf(n);
  for (std::size_t width = 1; width < n; width *= 2) {
    for (std::size_t start = 0; start < n; start += 2 * width) {
      std::size_t mid = std::min(start + width, n), end = std::min(start + 2 * width, n);
      std::size_t a = start, b = mid, o = start;
      while (a < mid && b < end) {
        std::size_t x = r.order[a], y = r.order[b];
        std::optional<Order> ans;
        if (known) ans = known(x, y);
        if (!ans) {
          ans = cmp(x, y);
          ++r.queries;
          r.comparisons.push_back(*ans == Order::first_ge_second ? Relation{x, y} : Relation{y, x});
        }
        if (*ans == Order::second_ge_first) {
          buf[o++] = x;
          ++a;
        } else {
          buf[o++] = y;
          ++b;
        }
      }
      while (a < mid) buf[o++] = r.order[a++];
      while (b < end) buf[o++] = r.order[b++];
    }
    std::swap(r.order, buf);
  }
  return r;
}

std::string_view to_string(ConeState::Tag t) {
  switch (t) {
    case ConeState::Tag::empty:
      return "empty";
    case ConeState::Tag::point:
      return "point";
    case ConeState::Tag::ray:
      return "ray";
    case ConeState::Tag::proper:
      return "proper";
    case ConeState::Tag::line:
      return "line";
    case ConeState::Tag::halfplane:
      break;
  }
  return "halfplane";
}

ConeState cone_from_relations(std::vector<Sample> nodes, const std::vector<Relation>& relations) {
  ConeState c;
  const std::size_t n = nodes.size();
  if (n == 0) return c;
  for (const auto& s : nodes) check_2d(s.x);
  Reach reach(n, relations);
  const std::size_t apex = reach.minimum();
  if (apex == n) throw ContractViolation("comparisons do not determine a minimal point");

  std::vector<const Point*> pts;
  for (const auto& s : nodes) pts.push_back(&s.x);
  auto cands = candidates(pts, relations);
  Shape shape = classify(cands);
  if (!shape.consistent) throw OracleInconsistency("recorded comparisons are not consistent with any halfspace");

  std::vector<std::size_t> keep{apex};
  auto add = [&](std::size_t i) {
    if (std::find(keep.begin(), keep.end(), i) == keep.end()) keep.push_back(i);
  };
  switch (shape.tag) {
    case ConeState::Tag::empty:
    case ConeState::Tag::point:
      break;
    case ConeState::Tag::ray:
    case ConeState::Tag::proper: {
      const Candidate rp = pick_pair(shape.right, keep, pts, reach);
      add(rp.hi);
      add(rp.lo);
      shape.right = rp.dir;
      if (shape.tag == ConeState::Tag::proper) {
        const Candidate lp = pick_pair(shape.left, keep, pts, reach);
        add(lp.hi);
        add(lp.lo);
        shape.left = lp.dir;
      } else {
        shape.left = shape.right;
      }
      break;
    }
    case ConeState::Tag::line:
    case ConeState::Tag::halfplane:
      keep = search_witnesses(pts, reach, apex, shape);
      break;
  }

  c.tag = shape.tag;
  c.apex = nodes[apex];
  c.right = shape.right;
  c.left = shape.left;
  c.side = shape.side;
  for (auto i : keep) c.witnesses.push_back(nodes[i]);
  for (std::size_t a = 0; a < keep.size(); ++a)
    for (std::size_t b = 0; b < keep.size(); ++b)
      if (a != b && reach(keep[a], keep[b])) c.relations.emplace_back(a, b);
  return c;
}

ConeBuild build_cone(const ConeState& prior, std::span<const Sample> fresh, const CompareQuery& cmp) {
  std::vector<Sample> nodes = prior.witnesses;
  const std::size_t w = nodes.size();
  nodes.insert(nodes.end(), fresh.begin(), fresh.end());
  Reach prior_reach(w, prior.relations);
  auto known = [&](std::size_t i, std::size_t j) -> std::optional<Order> {
    if (i >= w || j >= w) return std::nullopt;
    if (prior_reach(i, j)) return Order::first_ge_second;
    if (prior_reach(j, i)) return Order::second_ge_first;
    return std::nullopt;
  };
  auto ask = [&](std::size_t i, std::size_t j) { return cmp(nodes[i], nodes[j]); };
  SortResult sorted = sort_by_value(nodes.size(), ask, known);
  std::vector<Relation> relations = prior.relations;
  relations.insert(relations.end(), sorted.comparisons.begin(), sorted.comparisons.end());
  ConeBuild out;
  out.queries = sorted.queries;
  out.state = cone_from_relations(std::move(nodes), relations);
  return out;
}

bool cone_contains(const ConeState& c, const Point& y) {
  if (c.tag == ConeState::Tag::empty) return false;
  Vec u = diff(y, c.apex.x);
  switch (c.tag) {
    case ConeState::Tag::empty:
      return false;
    case ConeState::Tag::point:
      return is_zero(u);
    case ConeState::Tag::ray:
      return cross(c.right, u) == 0 && dot(c.right, u) >= 0;
    case ConeState::Tag::proper:
      return cross(c.right, u) >= 0 && cross(u, c.left) >= 0;
    case ConeState::Tag::line:
      return cross(c.right, u) == 0;
    case ConeState::Tag::halfplane:
      return c.side * cross(c.right, u) >= 0;
  }
  return false;
}

double cone_boundary_distance(const ConeState& c, const Point& y) {
  if (c.tag == ConeState::Tag::empty) return std::numeric_limits<double>::infinity();
  Vec u = diff(y, c.apex.x);
  auto to_ray = [&](const Vec& r) {
    double n = std::hypot(r[0], r[1]);
    double t = std::max(0.0, dot(u, r) / n);
    return std::hypot(u[0] - t * r[0] / n, u[1] - t * r[1] / n);
  };
  switch (c.tag) {
    case ConeState::Tag::empty:
    case ConeState::Tag::point:
      return std::hypot(u[0], u[1]);
    case ConeState::Tag::ray:
      return to_ray(c.right);
    case ConeState::Tag::proper:
      return std::min(to_ray(c.right), to_ray(c.left));
    case ConeState::Tag::line:
    case ConeState::Tag::halfplane:
      return std::abs(cross(c.right, u)) / std::hypot(c.right[0], c.right[1]);
  }
  return 0;
}

Prediction infer_halfspace(const ConeState& pos, const ConeState& neg, const Point& x) {
  check_2d(x);
  bool p = cone_contains(pos, x);
  bool n = cone_contains(neg, x);
  if (p && n) throw OracleInconsistency("point inferred both positive and negative");
  if (p) return Prediction::positive;
  if (n) return Prediction::negative;
  return Prediction::abstain;
}

}  // namespace rpu
