// Independent exact inference for small instances. Each routine answers:
// which labels can the probe take under some hypothesis consistent with the
// transcript? A label is inferred exactly when the answer is a singleton.
#pragma once

#include <bitset>
#include <cstdint>
#include <map>
#include <optional>
#include <tuple>
#include <vector>

#include "rpu/core.hpp"
#include "rpu/trees.hpp"

namespace rpu::brute {

struct LabelSet {
  bool positive = false;
  bool negative = false;

  /// No consistent hypothesis at all.
  bool vacuous() const { return !positive && !negative; }
  bool singleton() const { return positive != negative; }
  Prediction inferred() const {
    if (!singleton()) return Prediction::abstain;
    return positive ? Prediction::positive : Prediction::negative;
  }
  bool contains(Label l) const { return l == Label::positive ? positive : negative; }
};

// ---------------------------------------------------------------- rectangles

struct RectTranscript {
  std::size_t d = 0;
  std::vector<Point> positives;
  std::vector<std::pair<Point, OddOneOut>> negatives;
};

/// Coordinate-wise interval feasibility.
LabelSet rect_label_set(const RectTranscript& t, const Point& probe);
bool rect_consistent(const RectTranscript& t);

// ---------------------------------------------------------------- halfspaces

struct LatticePoint {
  std::int64_t x = 0, y = 0;
  Point to_point() const { return Point{static_cast<double>(x), static_cast<double>(y)}; }
  auto operator<=>(const LatticePoint&) const = default;
};

/// Ground truth with integer coefficients: a*x + b*y + c, positive when >= 0.
struct LatticeHalfspace {
  std::int64_t a = 0, b = 0, c = 0;
  std::int64_t value(const LatticePoint& p) const { return a * p.x + b * p.y + c; }
  Label label(const LatticePoint& p) const { return value(p) >= 0 ? Label::positive : Label::negative; }
};

struct HalfspaceTranscript {
  std::vector<LatticePoint> positives;
  std::vector<LatticePoint> negatives;
  std::vector<std::pair<LatticePoint, LatticePoint>> ge;  // value(first) >= value(second)
};

/// Exact feasibility over hypotheses (v, b), v != 0, in integer arithmetic.
/// The transcript cone is computed once; each probe adds one constraint.
/// Coordinates must stay within [-4096, 4096].
class HalfspaceOracle {
 public:
  using Vec3 = std::array<__int128, 3>;

  explicit HalfspaceOracle(const HalfspaceTranscript& t);

  bool vacuous() const;
  LabelSet label_set(const LatticePoint& probe) const;

 private:
  bool feasible(const std::vector<Vec3>& gens, const std::vector<Vec3>& strict) const;

  std::vector<Vec3> gens_;    // generators of the closed transcript cone
  std::vector<Vec3> strict_;  // rows that must hold strictly
};

// ---------------------------------------------------------------- trees

/// Trees with at most `s` leaves splitting only at `grid` evenly spaced
/// thresholds per coordinate strictly inside (lo, hi). Points are assumed to
/// avoid the thresholds, so split directions do not matter. Needs d <= 2 and
/// grid <= 10.
struct TreeFamily {
  std::size_t d = 2;
  std::size_t s = 4;
  double lo = 0, hi = 1;
  std::size_t grid = 8;

  double threshold(std::size_t j) const;
  /// Grid cell of x along coordinate i (0..grid). Throws if x sits on a threshold.
  std::size_t cell(double x) const;
};

struct TreeTranscript {
  std::vector<Point> points;
  std::vector<Label> labels;
  std::vector<std::tuple<std::size_t, std::size_t, bool>> same_leaf;
};

/// Random member of the family with exactly `leaves` leaves (fewer if the
/// grid runs out of room).
DecisionTreeHypothesis random_grid_tree(const TreeFamily& f, std::size_t leaves, std::uint64_t seed);

class TreeOracle {
 public:
  TreeOracle(const TreeFamily& f, const TreeTranscript& t);

  bool vacuous() const { return !any_; }
  LabelSet label_set(const Point& probe) const;

 private:
  using Mask = std::bitset<128>;
  struct Region {
    std::array<std::uint8_t, 2> l{0, 0}, h{0, 0};
  };
  struct Entry {
    bool ok = false;
    Mask pos, neg;
  };

  Entry solve(const Region& r, std::size_t budget);
  Mask region_mask(const Region& r) const;
  std::size_t cell_index(const std::array<std::size_t, 2>& c) const;

  TreeFamily f_;
  std::vector<std::array<std::size_t, 2>> cells_;
  std::vector<Label> labels_;
  std::vector<std::vector<int>> rel_;  // +1 same leaf, -1 different, 0 unknown
  std::vector<std::size_t> comp_;
  std::size_t comp_count_ = 0;
  std::vector<std::vector<char>> apart_;
  std::map<std::tuple<std::uint8_t, std::uint8_t, std::uint8_t, std::uint8_t, std::size_t>, Entry> memo_;
  Mask pos_, neg_;
  bool any_ = false;
};

}  // namespace rpu::brute
