#include "rpu/core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace rpu {

namespace {

void require_finite(const std::vector<double>& c) {
  if (c.empty()) throw ContractViolation("point must have dimension >= 1");
  for (double v : c)
    if (!std::isfinite(v)) throw ContractViolation("point coordinates must be finite");
}

constexpr std::uint64_t kFnvOffset = 1469598103934665603ULL;
constexpr std::uint64_t kFnvPrime = 1099511628211ULL;

std::uint64_t fnv_bytes(std::uint64_t h, const void* data, std::size_t n) {
  auto p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= kFnvPrime;
  }
  return h;
}

}  // namespace

Point::Point(std::vector<double> coords) : coords_(std::move(coords)) { require_finite(coords_); }

Point::Point(std::initializer_list<double> coords) : coords_(coords) { require_finite(coords_); }

std::string_view to_string(Label l) { return l == Label::positive ? "positive" : "negative"; }

std::string_view to_string(Prediction p) {
  switch (p) {
    case Prediction::positive:
      return "positive";
    case Prediction::negative:
      return "negative";
    case Prediction::abstain:
      break;
  }
  return "abstain";
}

std::string to_string(const QueryResponse& r) {
  struct V {
    std::string operator()(const LabelAnswer& a) const { return "Label(" + std::string(to_string(a.label)) + ")"; }
    std::string operator()(const OddOneOut& o) const {
      return "OddOneOut(" + std::to_string(o.coord) + "," + (o.side == Side::too_small ? "too_small" : "too_large") +
             ")";
    }
    std::string operator()(const InRectangle&) const { return "InRectangle"; }
    std::string operator()(const SameLeaf& s) const { return s.same ? "SameLeaf(true)" : "SameLeaf(false)"; }
    std::string operator()(const Comparison& c) const {
      return c.order == Order::first_ge_second ? "Comparison(first_ge_second)" : "Comparison(second_ge_first)";
    }
  };
  return std::visit(V{}, r);
}

ResponsePolicy ResponsePolicy::lowest_index() {
  ResponsePolicy p;
  p.mode = Mode::lowest_index;
  return p;
}

ResponsePolicy ResponsePolicy::seeded_random(std::uint64_t seed) {
  ResponsePolicy p;
  p.mode = Mode::seeded_random;
  p.seed = seed;
  return p;
}

ResponsePolicy ResponsePolicy::adversarial(Callback pick) {
  if (!pick) throw ContractViolation("adversarial policy needs a callback");
  ResponsePolicy p;
  p.mode = Mode::adversarial;
  p.pick = std::move(pick);
  return p;
}

std::uint64_t query_identity(std::string_view oracle, std::initializer_list<const Point*> payload) {
  std::uint64_t h = fnv_bytes(kFnvOffset, oracle.data(), oracle.size());
  for (const Point* p : payload) {
    const std::uint64_t d = p->dim();
    h = fnv_bytes(h, &d, sizeof d);
    for (double c : p->coords()) {
      // normalise -0.0 so equal points hash equally
      double v = c == 0.0 ? 0.0 : c;
      h = fnv_bytes(h, &v, sizeof v);
    }
  }
  return h;
}

QueryResponse adversary_select(std::vector<QueryResponse> valid, const ResponsePolicy& policy,
                               std::uint64_t query_key) {
  if (valid.empty()) throw ContractViolation("adversary_select: empty valid response set");
  if (valid.size() == 1) return valid.front();
  std::sort(valid.begin(), valid.end());
  valid.erase(std::unique(valid.begin(), valid.end()), valid.end());
  switch (policy.mode) {
    case ResponsePolicy::Mode::lowest_index:
      return valid.front();
    case ResponsePolicy::Mode::seeded_random:
      return valid[mix_seed(policy.seed, query_key) % valid.size()];
    case ResponsePolicy::Mode::adversarial: {
      std::size_t i = policy.pick(std::span<const QueryResponse>(valid), query_key);
      if (i >= valid.size()) throw ContractViolation("adversarial policy returned an out-of-range index");
      return valid[i];
    }
  }
  return valid.front();
}

void TapeAccount::set_points(std::uint64_t n) {
  points_ = n;
  peak_points_ = std::max(peak_points_, n);
}

void TapeAccount::set_responses(std::uint64_t n) {
  responses_ = n;
  peak_responses_ = std::max(peak_responses_, n);
}

Handle QueryTape::store(Point x) {
  Handle h = next_++;
  points_.emplace(h, std::move(x));
  account_->set_points(points_.size());
  return h;
}

void QueryTape::erase(Handle h) {
  points_.erase(h);
  account_->set_points(points_.size());
}

const Point& QueryTape::at(Handle h) const {
  auto it = points_.find(h);
  if (it == points_.end()) throw ContractViolation("query on a point that is not on the query tape");
  return it->second;
}

std::uint64_t mix_seed(std::uint64_t base, std::uint64_t stream) {
  std::uint64_t z = base + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

Distribution::Distribution(std::size_t d, std::vector<Component> parts, std::vector<double> weights)
    : dim_(d), parts_(std::move(parts)), weights_(std::move(weights)) {
  cumulative_.resize(weights_.size());
  std::partial_sum(weights_.begin(), weights_.end(), cumulative_.begin());
}

Distribution Distribution::uniform_box(std::vector<double> lo, std::vector<double> hi) {
  return mixture({UniformBox{std::move(lo), std::move(hi)}}, {1.0});
}

Distribution Distribution::cube(std::size_t d, double lo, double hi) {
  return uniform_box(std::vector<double>(d, lo), std::vector<double>(d, hi));
}

Distribution Distribution::gaussian(std::vector<double> center, double scale) {
  return mixture({Gaussian{std::move(center), scale}}, {1.0});
}

Distribution Distribution::mixture(std::vector<Component> parts, std::vector<double> weights) {
  if (parts.empty() || parts.size() != weights.size())
    throw ContractViolation("distribution: need one weight per component");
  std::size_t d = 0;
  for (const auto& c : parts) {
    std::size_t cd = 0;
    if (auto* b = std::get_if<UniformBox>(&c)) {
      if (b->lo.size() != b->hi.size()) throw ContractViolation("uniform box: lo/hi size mismatch");
      for (std::size_t i = 0; i < b->lo.size(); ++i)
        if (!(b->lo[i] <= b->hi[i]) || !std::isfinite(b->lo[i]) || !std::isfinite(b->hi[i]))
          throw ContractViolation("uniform box: need finite lo <= hi");
      cd = b->lo.size();
    } else {
      const auto& g = std::get<Gaussian>(c);
      if (!(g.scale >= 0) || !std::isfinite(g.scale)) throw ContractViolation("gaussian: bad scale");
      cd = g.center.size();
    }
    if (cd == 0) throw ContractViolation("distribution: dimension must be >= 1");
    if (d != 0 && cd != d) throw ContractViolation("distribution: component dimensions differ");
    d = cd;
  }
  double sum = 0;
  for (double w : weights) {
    if (!(w >= 0)) throw ContractViolation("distribution: negative weight");
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw ContractViolation("distribution: weights must sum to 1");
  return Distribution(d, std::move(parts), std::move(weights));
}

void Distribution::sample_into(Rng& rng, Point& out) const {
  std::size_t idx = 0;
  if (parts_.size() > 1) {
    double u = unit_draw(rng) * cumulative_.back();
    idx = std::upper_bound(cumulative_.begin(), cumulative_.end(), u) - cumulative_.begin();
    if (idx >= parts_.size()) idx = parts_.size() - 1;
  }
  auto& c = out.mutable_coords();
  c.resize(dim_);
  if (auto* b = std::get_if<UniformBox>(&parts_[idx])) {
    for (std::size_t i = 0; i < dim_; ++i)
      c[i] = b->lo[i] + (b->hi[i] - b->lo[i]) * unit_draw(rng);
  } else {
    const auto& g = std::get<Gaussian>(parts_[idx]);
    std::normal_distribution<double> n(0.0, 1.0);
    for (std::size_t i = 0; i < dim_; ++i) c[i] = g.center[i] + g.scale * n(rng);
  }
}

Point Distribution::sample(Rng& rng) const {
  Point p;
  sample_into(rng, p);
  return p;
}

std::pair<std::vector<double>, std::vector<double>> Distribution::bounding_box() const {
  std::vector<double> lo(dim_, INFINITY), hi(dim_, -INFINITY);
  for (const auto& c : parts_) {
    for (std::size_t i = 0; i < dim_; ++i) {
      double a, b;
      if (auto* box = std::get_if<UniformBox>(&c)) {
        a = box->lo[i];
        b = box->hi[i];
      } else {
        const auto& g = std::get<Gaussian>(c);
        a = g.center[i] - 3 * g.scale;
        b = g.center[i] + 3 * g.scale;
      }
      lo[i] = std::min(lo[i], a);
      hi[i] = std::max(hi[i], b);
    }
  }
  return {lo, hi};
}

}  // namespace rpu
