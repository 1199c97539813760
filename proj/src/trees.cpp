#include "rpu/trees.hpp"

#include <json.hpp>

#include <cmath>

namespace rpu {

using Direction = DecisionTreeHypothesis::Direction;
using json = nlohmann::json;

DecisionTreeHypothesis::DecisionTreeHypothesis(std::size_t d, Label label) : d_(d) {
  if (d == 0) throw ContractViolation("tree needs dimension >= 1");
  Node n;
  n.label = label;
  nodes_.push_back(n);
  renumber();
}

DecisionTreeHypothesis::DecisionTreeHypothesis(std::size_t d, std::vector<Node> nodes) : d_(d), nodes_(std::move(nodes)) {
  if (d == 0) throw ContractViolation("tree needs dimension >= 1");
  validate();
  renumber();
}

void DecisionTreeHypothesis::validate() const {
  if (nodes_.empty()) throw ContractViolation("tree has no nodes");
  // every non-root node reachable exactly once
  std::vector<int> seen(nodes_.size(), 0);
  std::vector<std::size_t> stack{0};
  while (!stack.empty()) {
    std::size_t i = stack.back();
    stack.pop_back();
    if (i >= nodes_.size() || seen[i]++) throw ContractViolation("tree nodes do not form a tree");
    const Node& n = nodes_[i];
    if (!n.leaf) {
      if (n.coord >= d_ || !std::isfinite(n.threshold)) throw ContractViolation("bad split");
      stack.push_back(n.pass);
      stack.push_back(n.fail);
    }
  }
  for (int s : seen)
    if (s != 1) throw ContractViolation("tree has unreachable nodes");
}

void DecisionTreeHypothesis::renumber() {
  leaves_ = 0;
  for (auto& n : nodes_)
    if (n.leaf) n.leaf_id = leaves_++;
}

std::size_t DecisionTreeHypothesis::leaf_of(const Point& x) const {
  if (x.dim() != d_) throw ContractViolation("tree: dimension mismatch");
  std::size_t i = 0;
  while (!nodes_[i].leaf) {
    const Node& n = nodes_[i];
    bool pass = n.dir == Direction::ge ? x[n.coord] >= n.threshold : x[n.coord] <= n.threshold;
    i = pass ? n.pass : n.fail;
  }
  return nodes_[i].leaf_id;
}

Label DecisionTreeHypothesis::label(const Point& x) const { return leaf_label(leaf_of(x)); }

Label DecisionTreeHypothesis::leaf_label(std::size_t leaf_id) const {
  for (const auto& n : nodes_)
    if (n.leaf && n.leaf_id == leaf_id) return n.label;
  throw ContractViolation("unknown leaf id");
}

void DecisionTreeHypothesis::split(std::size_t node, std::size_t coord, double threshold, Direction dir,
                                   Label pass_label, Label fail_label) {
  if (node >= nodes_.size() || !nodes_[node].leaf) throw ContractViolation("split: not a leaf");
  if (coord >= d_ || !std::isfinite(threshold)) throw ContractViolation("split: bad coordinate or threshold");
  Node p, f;
  p.label = pass_label;
  f.label = fail_label;
  nodes_.push_back(p);
  nodes_.push_back(f);
  Node& n = nodes_[node];
  n.leaf = false;
  n.coord = coord;
  n.threshold = threshold;
  n.dir = dir;
  n.pass = nodes_.size() - 2;
  n.fail = nodes_.size() - 1;
  renumber();
}

namespace {

json node_to_json(const std::vector<DecisionTreeHypothesis::Node>& nodes, std::size_t i) {
  const auto& n = nodes[i];
  if (n.leaf) return json{{"label", std::string(to_string(n.label))}};
  return json{{"coord", n.coord},
              {"threshold", n.threshold},
              {"dir", n.dir == Direction::ge ? "ge" : "le"},
              {"pass", node_to_json(nodes, n.pass)},
              {"fail", node_to_json(nodes, n.fail)}};
}

std::size_t node_from_json(const json& j, std::vector<DecisionTreeHypothesis::Node>& nodes) {
  std::size_t idx = nodes.size();
  nodes.emplace_back();
  if (j.contains("label")) {
    const auto l = j.at("label").get<std::string>();
    if (l != "positive" && l != "negative") throw ContractViolation("tree json: bad label " + l);
    nodes[idx].label = l == "positive" ? Label::positive : Label::negative;
    return idx;
  }
  DecisionTreeHypothesis::Node n;
  n.leaf = false;
  n.coord = j.at("coord").get<std::size_t>();
  n.threshold = j.at("threshold").get<double>();
  const auto dir = j.at("dir").get<std::string>();
  if (dir != "ge" && dir != "le") throw ContractViolation("tree json: bad direction " + dir);
  n.dir = dir == "ge" ? Direction::ge : Direction::le;
  n.pass = node_from_json(j.at("pass"), nodes);
  n.fail = node_from_json(j.at("fail"), nodes);
  nodes[idx] = n;
  return idx;
}

}  // namespace

std::string DecisionTreeHypothesis::to_json() const {
  return json{{"d", d_}, {"root", node_to_json(nodes_, 0)}}.dump();
}

DecisionTreeHypothesis DecisionTreeHypothesis::from_json(const std::string& text) {
  try {
    json j = json::parse(text);
    std::vector<Node> nodes;
    node_from_json(j.at("root"), nodes);
    return DecisionTreeHypothesis(j.at("d").get<std::size_t>(), std::move(nodes));
  } catch (const json::exception& e) {
    throw ContractViolation(std::string("tree json: ") + e.what());
  }
}

bool DecisionTreeHypothesis::operator==(const DecisionTreeHypothesis& o) const { return to_json() == o.to_json(); }

DecisionTreeHypothesis random_tree(std::size_t d, std::size_t s, double lo, double hi, std::uint64_t seed) {
  if (s == 0) throw ContractViolation("random_tree: s must be >= 1");
  if (d == 0 || !(lo < hi)) throw ContractViolation("random_tree: need d >= 1 and lo < hi");
  Rng rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  DecisionTreeHypothesis t(d, Label::negative);
  // cell per node index (only leaves matter)
  std::vector<std::vector<double>> cell_lo{std::vector<double>(d, lo)}, cell_hi{std::vector<double>(d, hi)};
  std::vector<std::size_t> leaves{0};
  while (leaves.size() < s) {
    std::size_t pick = std::uniform_int_distribution<std::size_t>(0, leaves.size() - 1)(rng);
    std::size_t node = leaves[pick];
    std::size_t coord = std::uniform_int_distribution<std::size_t>(0, d - 1)(rng);
    double a = cell_lo[node][coord], b = cell_hi[node][coord];
    double thr = a + (b - a) * u(rng);
    Direction dir = u(rng) < 0.5 ? Direction::ge : Direction::le;
    t.split(node, coord, thr, dir, Label::negative, Label::negative);
    const auto& n = t.nodes()[node];
    std::vector<double> up_lo = cell_lo[node], up_hi = cell_hi[node];
    std::vector<double> dn_lo = cell_lo[node], dn_hi = cell_hi[node];
    up_lo[coord] = thr;
    dn_hi[coord] = thr;
    cell_lo.resize(t.nodes().size());
    cell_hi.resize(t.nodes().size());
    std::size_t upper = dir == Direction::ge ? n.pass : n.fail;
    std::size_t lower = dir == Direction::ge ? n.fail : n.pass;
    cell_lo[upper] = up_lo;
    cell_hi[upper] = up_hi;
    cell_lo[lower] = dn_lo;
    cell_hi[lower] = dn_hi;
    leaves[pick] = n.pass;
    leaves.push_back(n.fail);
  }
  auto nodes = t.nodes();
  for (auto& n : nodes)
    if (n.leaf) n.label = u(rng) < 0.5 ? Label::positive : Label::negative;
  return DecisionTreeHypothesis(d, std::move(nodes));
}

std::vector<QueryResponse> same_leaf(const DecisionTreeHypothesis& h, const Point& x, const Point& y) {
  return {SameLeaf{h.leaf_of(x) == h.leaf_of(y)}};
}

bool LeafGroup::hull_contains(const Point& x) const {
  for (std::size_t i = 0; i < lo.size(); ++i)
    if (x[i] < lo[i] || x[i] > hi[i]) return false;
  return true;
}

std::vector<Sample> LeafGroup::witnesses() const {
  std::vector<Sample> out;
  auto add = [&](const Sample& s) {
    for (const auto& o : out)
      if (o.id == s.id) return;
    out.push_back(s);
  };
  for (std::size_t i = 0; i < min_wit.size(); ++i) {
    add(min_wit[i]);
    add(max_wit[i]);
  }
  return out;
}

std::size_t LeafGroupState::group_count(Label l) const {
  std::size_t n = 0;
  for (const auto& g : groups_) n += g.label == l;
  return n;
}

std::vector<Sample> LeafGroupState::witnesses(Label l) const {
  std::vector<Sample> out;
  for (const auto& g : groups_)
    if (g.label == l)
      for (auto& w : g.witnesses()) out.push_back(std::move(w));
  return out;
}

void LeafGroupState::set_groups(std::vector<LeafGroup> groups) {
  groups_ = std::move(groups);
  disjoint_ = true;
  for (std::size_t a = 0; a < groups_.size() && disjoint_; ++a)
    for (std::size_t b = a + 1; b < groups_.size() && disjoint_; ++b) {
      bool meet = true;
      for (std::size_t i = 0; i < d_ && meet; ++i)
        meet = groups_[a].lo[i] <= groups_[b].hi[i] && groups_[b].lo[i] <= groups_[a].hi[i];
      disjoint_ = !meet;
    }
}

Prediction LeafGroupState::infer(const Point& x) const {
  const LeafGroup* hit = nullptr;
  for (const auto& g : groups_) {
    if (!g.hull_contains(x)) continue;
    if (disjoint_) return to_prediction(g.label);
    if (hit) throw OracleInconsistency("point lies in the hulls of two distinct leaf groups");
    hit = &g;
  }
  return hit ? to_prediction(hit->label) : Prediction::abstain;
}

GroupingResult group_by_leaf(const LeafGroupState& state, std::span<const LabeledSample> points,
                             const SameLeafQuery& query) {
  GroupingResult r{state, 0};
  std::vector<LeafGroup> groups = state.groups();
  const std::size_t d = state.dim();
  for (const auto& p : points) {
    if (p.sample.x.dim() != d) throw ContractViolation("group_by_leaf: dimension mismatch");
    std::size_t found = groups.size();
    for (std::size_t g = 0; g < groups.size(); ++g) {
      if (groups[g].label != p.label) continue;
      ++r.queries;
      if (!query(p.sample, groups[g].rep)) continue;
      if (found != groups.size())
        throw OracleInconsistency("point reported in the same leaf as two different groups");
      found = g;
    }
    const Point& x = p.sample.x;
    if (found == groups.size()) {
      LeafGroup g;
      g.rep = p.sample;
      g.label = p.label;
      g.lo = g.hi = x.coords();
      g.min_wit.assign(d, p.sample);
      g.max_wit.assign(d, p.sample);
      groups.push_back(std::move(g));
      continue;
    }
    LeafGroup& g = groups[found];
    for (std::size_t i = 0; i < d; ++i) {
      if (x[i] < g.lo[i]) {
        g.lo[i] = x[i];
        g.min_wit[i] = p.sample;
      }
      if (x[i] > g.hi[i]) {
        g.hi[i] = x[i];
        g.max_wit[i] = p.sample;
      }
    }
    // keep the representative among the retained witnesses
    g.rep = g.min_wit[0];
  }
  r.state.set_groups(std::move(groups));
  return r;
}

}  // namespace rpu
