#include "rpu/bruteforce.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace rpu::brute {

// ---------------------------------------------------------------- rectangles

namespace {

struct Bounds {
  // Interval [a, b] must satisfy below < a, b < above, a <= need_lo, b >= need_hi.
  double below = -std::numeric_limits<double>::infinity();
  double above = std::numeric_limits<double>::infinity();
  double need_lo = std::numeric_limits<double>::infinity();
  double need_hi = -std::numeric_limits<double>::infinity();

  bool feasible() const {
    if (need_lo <= need_hi) return below < need_lo && need_hi < above;
    // no point forces the interval; any nonempty gap will do
    return below < above;
  }
};

std::vector<Bounds> base_bounds(const RectTranscript& t) {
  std::vector<Bounds> b(t.d);
  for (const auto& p : t.positives) {
    if (p.dim() != t.d) throw ContractViolation("rect transcript: dimension mismatch");
    for (std::size_t i = 0; i < t.d; ++i) {
      b[i].need_lo = std::min(b[i].need_lo, p[i]);
      b[i].need_hi = std::max(b[i].need_hi, p[i]);
    }
  }
  for (const auto& [z, o] : t.negatives) {
    if (z.dim() != t.d || o.coord >= t.d) throw ContractViolation("rect transcript: bad negative");
    if (o.side == Side::too_large)
      b[o.coord].above = std::min(b[o.coord].above, z[o.coord]);
    else
      b[o.coord].below = std::max(b[o.coord].below, z[o.coord]);
  }
  return b;
}

bool all_feasible(const std::vector<Bounds>& b) {
  return std::all_of(b.begin(), b.end(), [](const Bounds& x) { return x.feasible(); });
}

}  // namespace

bool rect_consistent(const RectTranscript& t) { return all_feasible(base_bounds(t)); }

LabelSet rect_label_set(const RectTranscript& t, const Point& probe) {
  if (probe.dim() != t.d) throw ContractViolation("rect probe: dimension mismatch");
  const auto base = base_bounds(t);
  LabelSet out;
  {
    auto b = base;
    for (std::size_t i = 0; i < t.d; ++i) {
      b[i].need_lo = std::min(b[i].need_lo, probe[i]);
      b[i].need_hi = std::max(b[i].need_hi, probe[i]);
    }
    out.positive = all_feasible(b);
  }
  for (std::size_t j = 0; j < t.d && !out.negative; ++j) {
    for (Side s : {Side::too_small, Side::too_large}) {
      auto b = base;
      if (s == Side::too_large)
        b[j].above = std::min(b[j].above, probe[j]);
      else
        b[j].below = std::max(b[j].below, probe[j]);
      if (all_feasible(b)) {
        out.negative = true;
        break;
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------- halfspaces

namespace {

using Vec3 = HalfspaceOracle::Vec3;
using i128 = __int128;

i128 dot3(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }

Vec3 cross3(const Vec3& a, const Vec3& b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}

bool zero3(const Vec3& a) { return a[0] == 0 && a[1] == 0 && a[2] == 0; }

Vec3 neg3(const Vec3& a) { return {-a[0], -a[1], -a[2]}; }

i128 abs128(i128 x) { return x < 0 ? -x : x; }

i128 gcd128(i128 a, i128 b) {
  a = abs128(a);
  b = abs128(b);
  while (b != 0) {
    i128 t = a % b;
    a = b;
    b = t;
  }
  return a;
}

Vec3 reduce(Vec3 v) {
  i128 g = gcd128(gcd128(v[0], v[1]), v[2]);
  if (g > 1)
    for (auto& c : v) c /= g;
  return v;
}

bool satisfies(const std::vector<Vec3>& rows, const Vec3& w) {
  for (const auto& r : rows)
    if (dot3(r, w) < 0) return false;
  return true;
}

void push_unique(std::vector<Vec3>& gens, Vec3 g) {
  if (zero3(g)) return;
  g = reduce(g);
  if (std::find(gens.begin(), gens.end(), g) == gens.end()) gens.push_back(g);
}

// Generators of {w : r.w >= 0 for all rows}.
std::vector<Vec3> cone_generators(const std::vector<Vec3>& rows) {
  std::vector<Vec3> nz;
  for (const auto& r : rows)
    if (!zero3(r)) nz.push_back(reduce(r));
  std::vector<Vec3> gens;
  if (nz.empty()) {
    for (int i = 0; i < 3; ++i) {
      Vec3 e{0, 0, 0};
      e[i] = 1;
      gens.push_back(e);
      gens.push_back(neg3(e));
    }
    return gens;
  }
  const Vec3 a = nz[0];
  std::optional<Vec3> b;
  for (const auto& r : nz)
    if (!zero3(cross3(a, r))) {
      b = r;
      break;
    }
  if (!b) {
    // rank 1: a plane or a halfspace through the origin
    std::vector<Vec3> basis;
    for (int k = 0; k < 3 && basis.size() < 2; ++k) {
      Vec3 e{0, 0, 0};
      e[k] = 1;
      Vec3 c = cross3(a, e);
      if (zero3(c)) continue;
      if (basis.empty() || !zero3(cross3(basis[0], c))) basis.push_back(c);
    }
    for (const auto& u : basis) {
      push_unique(gens, u);
      push_unique(gens, neg3(u));
    }
    bool mixed = std::any_of(nz.begin(), nz.end(), [&](const Vec3& r) { return dot3(r, a) < 0; });
    if (!mixed) push_unique(gens, a);
    return gens;
  }
  const Vec3 n = cross3(a, *b);
  bool rank3 = std::any_of(nz.begin(), nz.end(), [&](const Vec3& r) { return dot3(n, r) != 0; });
  if (!rank3) {
    // lineality line spanned by n; the rest is a pointed 2D cone orthogonal to it
    push_unique(gens, n);
    push_unique(gens, neg3(n));
    for (const auto& r : nz) {
      Vec3 c = cross3(n, r);
      for (const Vec3& cand : {c, neg3(c)})
        if (satisfies(nz, cand)) push_unique(gens, cand);
    }
    return gens;
  }
  // pointed: every extreme ray lies on two facet planes
  for (std::size_t i = 0; i < nz.size(); ++i)
    for (std::size_t j = i + 1; j < nz.size(); ++j) {
      Vec3 c = cross3(nz[i], nz[j]);
      if (zero3(c)) continue;
      for (const Vec3& cand : {c, neg3(c)})
        if (satisfies(nz, cand)) push_unique(gens, cand);
    }
  return gens;
}

// One double-description step: generators of cone(gens) intersected with r.w >= 0.
std::vector<Vec3> intersect(const std::vector<Vec3>& gens, const Vec3& r) {
  std::vector<Vec3> out, pos, neg;
  for (const auto& g : gens) {
    i128 v = dot3(r, g);
    if (v >= 0) push_unique(out, g);
    if (v > 0) pos.push_back(g);
    if (v < 0) neg.push_back(g);
  }
  for (const auto& p : pos)
    for (const auto& q : neg) {
      i128 a = dot3(r, p), b = dot3(r, q);  // a > 0 > b
      Vec3 c{a * q[0] - b * p[0], a * q[1] - b * p[1], a * q[2] - b * p[2]};
      push_unique(out, c);
    }
  return out;
}

constexpr std::int64_t kLatticeLimit = 4096;

Vec3 point_row(const LatticePoint& p) {
  if (std::llabs(p.x) > kLatticeLimit || std::llabs(p.y) > kLatticeLimit)
    throw ContractViolation("lattice point outside the supported range");
  return {p.x, p.y, 1};
}

}  // namespace

HalfspaceOracle::HalfspaceOracle(const HalfspaceTranscript& t) {
  std::vector<Vec3> rows;
  for (const auto& p : t.positives) rows.push_back(point_row(p));
  for (const auto& p : t.negatives) {
    Vec3 r = neg3(point_row(p));
    rows.push_back(r);
    strict_.push_back(r);
  }
  for (const auto& [a, b] : t.ge) {
    Vec3 ra = point_row(a), rb = point_row(b);
    rows.push_back({ra[0] - rb[0], ra[1] - rb[1], 0});
  }
  gens_ = cone_generators(rows);
}

bool HalfspaceOracle::feasible(const std::vector<Vec3>& gens, const std::vector<Vec3>& strict) const {
  // The sum of all generators is strictly inside every row that some
  // generator satisfies strictly; a small push along a generator with a
  // nonzero normal keeps that and makes the normal nonzero.
  for (const auto& s : strict)
    if (std::none_of(gens.begin(), gens.end(), [&](const Vec3& g) { return dot3(s, g) > 0; })) return false;
  return std::any_of(gens.begin(), gens.end(), [](const Vec3& g) { return g[0] != 0 || g[1] != 0; });
}

bool HalfspaceOracle::vacuous() const { return !feasible(gens_, strict_); }

LabelSet HalfspaceOracle::label_set(const LatticePoint& probe) const {
  LabelSet out;
  Vec3 r = point_row(probe);
  out.positive = feasible(intersect(gens_, r), strict_);
  Vec3 nr = neg3(r);
  auto strict = strict_;
  strict.push_back(nr);
  out.negative = feasible(intersect(gens_, nr), strict);
  return out;
}

// ---------------------------------------------------------------- trees

double TreeFamily::threshold(std::size_t j) const {
  return lo + (hi - lo) * static_cast<double>(j + 1) / static_cast<double>(grid + 1);
}

std::size_t TreeFamily::cell(double x) const {
  std::size_t c = 0;
  for (std::size_t j = 0; j < grid; ++j) {
    double t = threshold(j);
    if (x == t) throw ContractViolation("tree family: point lies on a grid threshold");
    if (x > t) c = j + 1;
  }
  return c;
}

DecisionTreeHypothesis random_grid_tree(const TreeFamily& f, std::size_t leaves, std::uint64_t seed) {
  if (f.d == 0 || f.d > 2 || leaves == 0) throw ContractViolation("random_grid_tree: bad family");
  Rng rng(seed);
  using Dir = DecisionTreeHypothesis::Direction;
  DecisionTreeHypothesis t(f.d, Label::negative);
  // cell ranges [l, h] in grid-cell units per node
  std::vector<std::array<std::size_t, 4>> range{{0, f.grid, 0, f.grid}};
  std::vector<std::size_t> open{0};
  std::size_t count = 1;
  while (count < leaves && !open.empty()) {
    std::size_t pick = std::uniform_int_distribution<std::size_t>(0, open.size() - 1)(rng);
    std::size_t node = open[pick];
    auto r = range[node];
    std::vector<std::pair<std::size_t, std::size_t>> splits;  // (coord, threshold)
    for (std::size_t i = 0; i < f.d; ++i)
      for (std::size_t j = r[2 * i]; j < r[2 * i + 1]; ++j) splits.emplace_back(i, j);
    if (splits.empty()) {
      open.erase(open.begin() + static_cast<std::ptrdiff_t>(pick));
      continue;
    }
    auto [coord, j] = splits[std::uniform_int_distribution<std::size_t>(0, splits.size() - 1)(rng)];
    Dir dir = std::bernoulli_distribution(0.5)(rng) ? Dir::ge : Dir::le;
    t.split(node, coord, f.threshold(j), dir, Label::negative, Label::negative);
    const auto& n = t.nodes()[node];
    auto upper = r, lower = r;
    upper[2 * coord] = j + 1;
    lower[2 * coord + 1] = j;
    range.resize(t.nodes().size());
    range[dir == Dir::ge ? n.pass : n.fail] = upper;
    range[dir == Dir::ge ? n.fail : n.pass] = lower;
    open[pick] = n.pass;
    open.push_back(n.fail);
    ++count;
  }
  auto nodes = t.nodes();
  for (auto& n : nodes)
    if (n.leaf) n.label = std::bernoulli_distribution(0.5)(rng) ? Label::positive : Label::negative;
  return DecisionTreeHypothesis(f.d, std::move(nodes));
}

TreeOracle::TreeOracle(const TreeFamily& f, const TreeTranscript& t) : f_(f) {
  if (f.d == 0 || f.d > 2 || f.grid == 0 || f.grid > 10 || f.s == 0)
    throw ContractViolation("tree family: need d <= 2, 1 <= grid <= 10, s >= 1");
  if (t.labels.size() != t.points.size()) throw ContractViolation("tree transcript: one label per point");
  const std::size_t n = t.points.size();
  for (const auto& p : t.points) {
    if (p.dim() != f.d) throw ContractViolation("tree transcript: dimension mismatch");
    std::array<std::size_t, 2> c{0, 0};
    for (std::size_t i = 0; i < f.d; ++i) c[i] = f.cell(p[i]);
    cells_.push_back(c);
  }
  labels_ = t.labels;
  rel_.assign(n, std::vector<int>(n, 0));
  for (const auto& [a, b, same] : t.same_leaf) {
    if (a >= n || b >= n) throw ContractViolation("tree transcript: index out of range");
    int v = same ? 1 : -1;
    if ((rel_[a][b] != 0 && rel_[a][b] != v) || (a == b && !same)) {
      any_ = false;
      return;  // contradictory answers: vacuous
    }
    rel_[a][b] = rel_[b][a] = v;
  }
  // components of the "same leaf" relation, and which components must be apart
  comp_.assign(n, n);
  comp_count_ = 0;
  for (std::size_t p = 0; p < n; ++p) {
    if (comp_[p] != n) continue;
    std::vector<std::size_t> stack{p};
    comp_[p] = comp_count_;
    while (!stack.empty()) {
      std::size_t a = stack.back();
      stack.pop_back();
      for (std::size_t b = 0; b < n; ++b)
        if (rel_[a][b] == 1 && comp_[b] == n) {
          comp_[b] = comp_count_;
          stack.push_back(b);
        }
    }
    ++comp_count_;
  }
  apart_.assign(comp_count_, std::vector<char>(comp_count_, 0));
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = 0; b < n; ++b)
      if (rel_[a][b] == -1) {
        if (comp_[a] == comp_[b]) {
          any_ = false;
          return;  // "same" and "different" chain into a contradiction
        }
        apart_[comp_[a]][comp_[b]] = 1;
      }
  Region root;
  root.h[0] = static_cast<std::uint8_t>(f.grid);
  if (f.d == 2) root.h[1] = static_cast<std::uint8_t>(f.grid);
  Entry e = solve(root, f.s);
  any_ = e.ok;
  pos_ = e.pos;
  neg_ = e.neg;
}

std::size_t TreeOracle::cell_index(const std::array<std::size_t, 2>& c) const { return c[0] * (f_.grid + 1) + c[1]; }

TreeOracle::Mask TreeOracle::region_mask(const Region& r) const {
  Mask m;
  for (std::size_t a = r.l[0]; a <= r.h[0]; ++a)
    for (std::size_t b = r.l[1]; b <= r.h[1]; ++b) m.set(cell_index({a, b}));
  return m;
}

TreeOracle::Entry TreeOracle::solve(const Region& r, std::size_t budget) {
  auto key = std::make_tuple(r.l[0], r.h[0], r.l[1], r.h[1], budget);
  if (auto it = memo_.find(key); it != memo_.end()) return it->second;

  std::vector<std::size_t> inside;
  for (std::size_t p = 0; p < cells_.size(); ++p) {
    bool in = true;
    for (std::size_t i = 0; i < f_.d; ++i) in = in && cells_[p][i] >= r.l[i] && cells_[p][i] <= r.h[i];
    if (in) inside.push_back(p);
  }

  Entry e;
  // as a leaf: one label, and no two components known to be in different leaves
  std::vector<std::size_t> comps;
  bool leaf_ok = true;
  for (std::size_t p : inside) {
    leaf_ok = leaf_ok && labels_[p] == labels_[inside[0]];
    if (std::find(comps.begin(), comps.end(), comp_[p]) == comps.end()) comps.push_back(comp_[p]);
  }
  for (std::size_t a = 0; a < comps.size() && leaf_ok; ++a)
    for (std::size_t b = a + 1; b < comps.size() && leaf_ok; ++b) leaf_ok = !apart_[comps[a]][comps[b]];
  if (leaf_ok) {
    e.ok = true;
    Mask m = region_mask(r);
    if (inside.empty() || labels_[inside[0]] == Label::positive) e.pos |= m;
    if (inside.empty() || labels_[inside[0]] == Label::negative) e.neg |= m;
  }
  // as a split that keeps every component on one side
  if (budget >= 2) {
    for (std::size_t i = 0; i < f_.d; ++i) {
      std::vector<std::size_t> cmin(comp_count_, f_.grid + 1), cmax(comp_count_, 0);
      for (std::size_t p : inside) {
        cmin[comp_[p]] = std::min(cmin[comp_[p]], cells_[p][i]);
        cmax[comp_[p]] = std::max(cmax[comp_[p]], cells_[p][i]);
      }
      std::vector<char> blocked(f_.grid + 1, 0);
      for (std::size_t c : comps)
        for (std::size_t j = cmin[c]; j < cmax[c]; ++j) blocked[j] = 1;
      for (std::size_t j = r.l[i]; j < r.h[i]; ++j) {
        if (blocked[j]) continue;
        Region lo = r, hi = r;
        lo.h[i] = static_cast<std::uint8_t>(j);
        hi.l[i] = static_cast<std::uint8_t>(j + 1);
        for (std::size_t lb = 1; lb < budget; ++lb) {
          Entry a = solve(lo, lb);
          if (!a.ok) continue;
          Entry b = solve(hi, budget - lb);
          if (!b.ok) continue;
          e.ok = true;
          e.pos |= a.pos | b.pos;
          e.neg |= a.neg | b.neg;
        }
      }
    }
  }
  memo_[key] = e;
  return e;
}

LabelSet TreeOracle::label_set(const Point& probe) const {
  if (probe.dim() != f_.d) throw ContractViolation("tree probe: dimension mismatch");
  if (!any_) return {};
  std::array<std::size_t, 2> c{0, 0};
  for (std::size_t i = 0; i < f_.d; ++i) c[i] = f_.cell(probe[i]);
  std::size_t idx = cell_index(c);
  return {pos_.test(idx), neg_.test(idx)};
}

}  // namespace rpu::brute
