#include "rpu/rectangles.hpp"

#include <cmath>
#include <string>

namespace rpu {

namespace {

void check_dim(std::size_t expect, const Point& x) {
  if (x.dim() != expect)
    throw ContractViolation("dimension mismatch: expected " + std::to_string(expect) + ", got " +
                            std::to_string(x.dim()));
}

}  // namespace

RectangleHypothesis::RectangleHypothesis(std::vector<Interval> sides) : sides_(std::move(sides)) {
  if (sides_.empty()) throw ContractViolation("rectangle needs dimension >= 1");
  for (const auto& s : sides_)
    if (std::isnan(s.lo) || std::isnan(s.hi) || s.lo > s.hi || s.lo == INFINITY || s.hi == -INFINITY)
      throw ContractViolation("rectangle side needs lo <= hi");
}

bool RectangleHypothesis::contains(const Point& x) const {
  check_dim(dim(), x);
  for (std::size_t i = 0; i < sides_.size(); ++i)
    if (x[i] < sides_[i].lo || x[i] > sides_[i].hi) return false;
  return true;
}

std::vector<QueryResponse> odd_one_out(const RectangleHypothesis& h, const Point& x) {
  check_dim(h.dim(), x);
  std::vector<QueryResponse> out;
  for (std::size_t i = 0; i < h.dim(); ++i) {
    if (x[i] < h.side(i).lo) out.emplace_back(OddOneOut{i, Side::too_small});
    if (x[i] > h.side(i).hi) out.emplace_back(OddOneOut{i, Side::too_large});
  }
  if (out.empty()) out.emplace_back(InRectangle{});
  return out;
}

RectangleHypothesis random_rectangle(std::size_t d, double lo, double hi, Rng& rng) {
  if (d == 0 || !(lo < hi)) throw ContractViolation("random_rectangle: need d >= 1 and lo < hi");
  std::uniform_real_distribution<double> u(0.0, 1.0);
  // Per-side fraction near 0.5^(1/d) so the volume is roughly half the box.
  const double base = std::pow(0.5, 1.0 / static_cast<double>(d));
  std::vector<Interval> sides(d);
  for (std::size_t i = 0; i < d; ++i) {
    double w = std::min(1.0, base * (0.6 + 0.6 * u(rng))) * (hi - lo);
    double a = lo + u(rng) * ((hi - lo) - w);
    sides[i] = {a, a + w};
  }
  return RectangleHypothesis(std::move(sides));
}

RectCompressedState::RectCompressedState(std::size_t d)
    : d_(d), lo_(d), hi_(d), min_wit_(d), max_wit_(d), reps_(2 * d) {
  if (d == 0) throw ContractViolation("rectangle state needs dimension >= 1");
}

std::vector<Sample> RectCompressedState::positive_witnesses() const {
  std::vector<Sample> out;
  if (!has_box_) return out;
  auto add = [&](const Sample& s) {
    for (const auto& o : out)
      if (o.id == s.id) return;
    out.push_back(s);
  };
  for (std::size_t i = 0; i < d_; ++i) {
    add(min_wit_[i]);
    add(max_wit_[i]);
  }
  return out;
}

std::vector<Sample> RectCompressedState::negative_witnesses() const {
  std::vector<Sample> out;
  for (const auto& r : reps_)
    if (r) {
      bool dup = false;
      for (const auto& o : out) dup = dup || o.id == r->id;
      if (!dup) out.push_back(*r);
    }
  return out;
}

Prediction RectCompressedState::infer(const Point& x) const {
  if (has_box_) {
    bool inside = true;
    for (std::size_t i = 0; i < d_ && inside; ++i) inside = x[i] >= lo_[i] && x[i] <= hi_[i];
    if (inside) return Prediction::positive;
  }
  for (std::size_t i = 0; i < d_; ++i) {
    const auto& small = reps_[2 * i];
    if (small && x[i] <= small->x[i]) return Prediction::negative;
    const auto& large = reps_[2 * i + 1];
    if (large && x[i] >= large->x[i]) return Prediction::negative;
  }
  return Prediction::abstain;
}

RectCompressedState compress_rect(const RectCompressedState& state, std::span<const RectEntry> entries) {
  RectCompressedState out = state;
  const std::size_t d = out.d_;
  for (const auto& e : entries) {
    const Point& x = e.sample.x;
    check_dim(d, x);
    if (std::holds_alternative<InRectangle>(e.response)) {
      if (!out.has_box_) {
        out.has_box_ = true;
        for (std::size_t i = 0; i < d; ++i) {
          out.lo_[i] = out.hi_[i] = x[i];
          out.min_wit_[i] = out.max_wit_[i] = e.sample;
        }
        continue;
      }
      for (std::size_t i = 0; i < d; ++i) {
        if (x[i] < out.lo_[i]) {
          out.lo_[i] = x[i];
          out.min_wit_[i] = e.sample;
        }
        if (x[i] > out.hi_[i]) {
          out.hi_[i] = x[i];
          out.max_wit_[i] = e.sample;
        }
      }
    } else if (auto* o = std::get_if<OddOneOut>(&e.response)) {
      if (o->coord >= d) throw DataCorruption("odd-one-out coordinate out of range");
      auto& slot = out.reps_[2 * o->coord + (o->side == Side::too_large)];
      const double v = x[o->coord];
      if (!slot) {
        slot = e.sample;
      } else if (o->side == Side::too_large ? v < slot->x[o->coord] : v > slot->x[o->coord]) {
        slot = e.sample;
      }
    } else {
      throw DataCorruption("rectangle transcript holds a non-rectangle response: " + to_string(e.response));
    }
  }
  // A rectangle explaining everything must put every too_large rep above the
  // box and every too_small rep below it, and keep a nonempty gap between them.
  for (std::size_t i = 0; i < d; ++i) {
    const auto& small = out.reps_[2 * i];
    const auto& large = out.reps_[2 * i + 1];
    if (out.has_box_) {
      if (large && large->x[i] <= out.hi_[i])
        throw DataCorruption("too_large response on coordinate " + std::to_string(i) + " inside the positive range");
      if (small && small->x[i] >= out.lo_[i])
        throw DataCorruption("too_small response on coordinate " + std::to_string(i) + " inside the positive range");
    }
    if (small && large && small->x[i] >= large->x[i])
      throw DataCorruption("too_small and too_large responses on coordinate " + std::to_string(i) + " overlap");
  }
  return out;
}

}  // namespace rpu
