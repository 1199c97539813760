// Halfspaces in the plane, the comparison oracle, and cone compression.
#pragma once

#include <array>
#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "rpu/core.hpp"

namespace rpu {

/// h(x) = <v, x> + b with |v| = 1; the label is positive when h(x) >= 0.
class HalfspaceHypothesis {
 public:
  HalfspaceHypothesis(std::array<double, 2> normal, double bias);

  const std::array<double, 2>& normal() const { return v_; }
  double bias() const { return b_; }
  double value(const Point& x) const;
  Label label(const Point& x) const { return value(x) >= 0 ? Label::positive : Label::negative; }

 private:
  std::array<double, 2> v_;
  double b_;
};

/// Uniform direction; the boundary passes through a uniform point of the
/// middle half of [lo, hi]^2.
HalfspaceHypothesis random_halfspace(double lo, double hi, Rng& rng);

/// Valid answers to "is h(x) >= h(y)?"; both orders when the values tie.
std::vector<QueryResponse> compare(const HalfspaceHypothesis& h, const Point& x, const Point& y);

/// One recorded comparison: value(greater) >= value(lesser). Indices refer to
/// the list that was sorted.
using Relation = std::pair<std::size_t, std::size_t>;

struct SortResult {
  std::vector<std::size_t> order;  // ascending
  std::vector<Relation> comparisons;
  std::uint64_t queries = 0;
};

/// Merge sort driven by `cmp(i, j)`. `known(i, j)`, when given, may answer a
/// pair from stored responses instead of a fresh query.
SortResult sort_by_value(std::size_t n, const std::function<Order(std::size_t, std::size_t)>& cmp,
                         const std::function<std::optional<Order>(std::size_t, std::size_t)>& known = {});

/// Compressed comparison transcript for one sign: the points on which the
/// labels of that sign can be inferred form apex + (cone of increasing
/// directions).
struct ConeState {
  enum class Tag : std::uint8_t { empty, point, ray, proper, line, halfplane };

  Tag tag = Tag::empty;
  Sample apex;
  std::array<double, 2> right{0, 0};  // extreme directions (ray/line use right only)
  std::array<double, 2> left{0, 0};
  int side = 0;  // halfplane: +1 keeps cross(right, u) >= 0, -1 keeps <= 0
  std::vector<Sample> witnesses;      // apex first
  std::vector<Relation> relations;    // among witnesses, transitively closed

  std::size_t stored_responses() const { return relations.size(); }
};

std::string_view to_string(ConeState::Tag t);

/// Builds the cone from arbitrary recorded comparisons among `nodes`.
/// Throws OracleInconsistency if the comparisons admit no halfspace and
/// ContractViolation if they leave the minimum undetermined.
ConeState cone_from_relations(std::vector<Sample> nodes, const std::vector<Relation>& relations);

using CompareQuery = std::function<Order(const Sample&, const Sample&)>;

struct ConeBuild {
  ConeState state;
  std::uint64_t queries = 0;
};

/// Merges a batch into `prior`: sorts prior witnesses and new points with
/// `cmp` (pairs of prior witnesses are answered from stored relations), then
/// recompresses. For the negative side pass a comparator that reports the
/// reverse order.
ConeBuild build_cone(const ConeState& prior, std::span<const Sample> fresh, const CompareQuery& cmp);

bool cone_contains(const ConeState& c, const Point& y);

/// Euclidean distance from y to the boundary of the cone (for the point tag,
/// to the apex).
double cone_boundary_distance(const ConeState& c, const Point& y);

/// Positive inside the positive cone, negative inside the negative cone.
Prediction infer_halfspace(const ConeState& pos, const ConeState& neg, const Point& x);

}  // namespace rpu
