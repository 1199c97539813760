// Axis-aligned decision trees, the same-leaf oracle, and leaf-group compression.
#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "rpu/core.hpp"

namespace rpu {

/// A binary decision tree stored as a flat node array (root at index 0).
///
/// Internal node: goes to `pass` when the test holds, otherwise to `fail`.
/// The test is x[coord] >= threshold (Direction::ge) or x[coord] <= threshold
/// (Direction::le); the closed side of the split is the one the test accepts.
class DecisionTreeHypothesis {
 public:
  enum class Direction : std::uint8_t { ge, le };

  struct Node {
    bool leaf = true;
    std::size_t coord = 0;
    double threshold = 0;
    Direction dir = Direction::ge;
    std::size_t pass = 0, fail = 0;
    std::size_t leaf_id = 0;
    Label label = Label::negative;
  };

  /// A single-leaf tree with the given constant label.
  DecisionTreeHypothesis(std::size_t d, Label label);
  DecisionTreeHypothesis(std::size_t d, std::vector<Node> nodes);

  std::size_t dim() const { return d_; }
  std::size_t leaves() const { return leaves_; }
  const std::vector<Node>& nodes() const { return nodes_; }

  std::size_t leaf_of(const Point& x) const;
  Label label(const Point& x) const;
  Label leaf_label(std::size_t leaf_id) const;

  /// Replaces leaf `node` with a split; the new leaves inherit fresh ids.
  void split(std::size_t node, std::size_t coord, double threshold, Direction dir, Label pass_label, Label fail_label);

  /// Nested JSON record: {"d":..,"root":{"coord","threshold","dir","pass","fail"} | {"leaf","label"}}
  std::string to_json() const;
  static DecisionTreeHypothesis from_json(const std::string& text);

  bool operator==(const DecisionTreeHypothesis& o) const;

 private:
  void validate() const;
  void renumber();

  std::size_t d_;
  std::size_t leaves_ = 0;
  std::vector<Node> nodes_;
};

/// Random tree with exactly s leaves: repeatedly split a uniformly chosen leaf
/// on a uniform coordinate at a uniform threshold inside the leaf's cell
/// (cells are clipped to [lo, hi]^d). Leaf labels are fair coin flips.
DecisionTreeHypothesis random_tree(std::size_t d, std::size_t s, double lo, double hi, std::uint64_t seed);

/// Same-leaf oracle; the answer is always unique.
std::vector<QueryResponse> same_leaf(const DecisionTreeHypothesis& h, const Point& x, const Point& y);

struct LabeledSample {
  Sample sample;
  Label label;
};

struct LeafGroup {
  Sample rep;
  Label label;
  std::vector<double> lo, hi;
  std::vector<Sample> min_wit, max_wit;  // per coordinate

  bool hull_contains(const Point& x) const;
  /// Distinct witnesses (at most 2d), the representative always among them.
  std::vector<Sample> witnesses() const;
};

class LeafGroupState {
 public:
  explicit LeafGroupState(std::size_t d) : d_(d) {}

  std::size_t dim() const { return d_; }
  const std::vector<LeafGroup>& groups() const { return groups_; }
  std::size_t group_count(Label l) const;
  std::vector<Sample> witnesses(Label l) const;

  /// Label of the hull holding x, or abstain. Throws OracleInconsistency when
  /// x lies in two hulls.
  Prediction infer(const Point& x) const;

  void set_groups(std::vector<LeafGroup> groups);

 private:
  std::size_t d_;
  std::vector<LeafGroup> groups_;
  bool disjoint_ = true;  // no two closed hulls intersect, so infer may stop at the first hit
};

/// Answers whether two tape points reach the same leaf; implementations count
/// the query.
using SameLeafQuery = std::function<bool(const Sample&, const Sample&)>;

struct GroupingResult {
  LeafGroupState state;
  std::uint64_t queries = 0;
};

/// Routes each new point to the group whose representative answers "same
/// leaf", founding a new group otherwise. Only representatives with the point's
/// label are queried.
GroupingResult group_by_leaf(const LeafGroupState& state, std::span<const LabeledSample> points,
                             const SameLeafQuery& query);

inline Prediction infer_tree(const LeafGroupState& state, const Point& x) { return state.infer(x); }

}  // namespace rpu
