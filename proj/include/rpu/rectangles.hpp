// Axis-aligned rectangles with the odd-one-out oracle.
#pragma once

#include <optional>
#include <span>
#include <vector>

#include "rpu/core.hpp"

namespace rpu {

struct Interval {
  double lo;
  double hi;
};

/// Product of closed intervals; an infinite endpoint means "unbounded on that side".
class RectangleHypothesis {
 public:
  explicit RectangleHypothesis(std::vector<Interval> sides);

  std::size_t dim() const { return sides_.size(); }
  const Interval& side(std::size_t i) const { return sides_[i]; }
  const std::vector<Interval>& sides() const { return sides_; }

  bool contains(const Point& x) const;
  Label label(const Point& x) const { return contains(x) ? Label::positive : Label::negative; }

 private:
  std::vector<Interval> sides_;
};

/// Every valid odd-one-out answer for x: {InRectangle} when x is inside,
/// otherwise one OddOneOut per violated (coordinate, side).
std::vector<QueryResponse> odd_one_out(const RectangleHypothesis& h, const Point& x);

/// A random rectangle inside [lo, hi]^d covering roughly half of the box.
RectangleHypothesis random_rectangle(std::size_t d, double lo, double hi, Rng& rng);

struct RectEntry {
  Sample sample;
  QueryResponse response;  // InRectangle for positives, OddOneOut for negatives
};

/// Compressed transcript for one rectangle run. The positive side keeps the
/// bounding box of all positives plus the points attaining each extreme; the
/// negative side keeps, per (coordinate, side), the one point that infers the
/// most.
class RectCompressedState {
 public:
  explicit RectCompressedState(std::size_t d);

  std::size_t dim() const { return d_; }
  bool has_box() const { return has_box_; }
  double box_lo(std::size_t i) const { return lo_[i]; }
  double box_hi(std::size_t i) const { return hi_[i]; }

  /// Representative for (i, side), if any.
  const std::optional<Sample>& rep(std::size_t i, Side side) const { return reps_[2 * i + (side == Side::too_large)]; }

  /// Distinct positive witnesses (at most 2d).
  std::vector<Sample> positive_witnesses() const;
  /// Negative representatives (at most 2d).
  std::vector<Sample> negative_witnesses() const;

  Prediction infer(const Point& x) const;

  friend RectCompressedState compress_rect(const RectCompressedState&, std::span<const RectEntry>);

 private:
  std::size_t d_;
  bool has_box_ = false;
  std::vector<double> lo_, hi_;
  std::vector<Sample> min_wit_, max_wit_;
  std::vector<std::optional<Sample>> reps_;  // index 2*i + side
};

/// Folds new (point, response) pairs into `state`. Throws DataCorruption when
/// the combined responses cannot come from any rectangle.
RectCompressedState compress_rect(const RectCompressedState& state, std::span<const RectEntry> entries);

inline Prediction infer_rect(const RectCompressedState& state, const Point& x) { return state.infer(x); }

}  // namespace rpu
