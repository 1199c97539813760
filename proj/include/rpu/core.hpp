// Shared domain types for bounded-memory active RPU learning: points, labels,
// query responses, the response adversary, tapes and counters, and the
// instance distributions the learners sample from.
#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <variant>
#include <vector>

namespace rpu {

// ----------------------------------------------------------------------------
// Errors
// ----------------------------------------------------------------------------

/// A caller broke a documented precondition (bad dimension, empty set, ...).
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Stored responses cannot have come from any hypothesis in the class.
class DataCorruption : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Oracle answers contradict each other; a correct oracle never triggers this.
class OracleInconsistency : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ----------------------------------------------------------------------------
// Points and labels
// ----------------------------------------------------------------------------

/// A point of R^d. Coordinates are always finite.
class Point {
 public:
  Point() = default;
  explicit Point(std::vector<double> coords);
  Point(std::initializer_list<double> coords);

  std::size_t dim() const { return coords_.size(); }
  double operator[](std::size_t i) const { return coords_[i]; }
  const std::vector<double>& coords() const { return coords_; }

  /// Unchecked mutable access for samplers that refill a buffer in place.
  std::vector<double>& mutable_coords() { return coords_; }

  bool operator==(const Point&) const = default;

 private:
  std::vector<double> coords_;
};

enum class Label : std::uint8_t { negative = 0, positive = 1 };

/// Output of a partial classifier: a label, or "I don't know".
enum class Prediction : std::uint8_t { negative = 0, positive = 1, abstain = 2 };

inline Prediction to_prediction(Label l) {
  return l == Label::positive ? Prediction::positive : Prediction::negative;
}

inline Label opposite(Label l) {
  return l == Label::positive ? Label::negative : Label::positive;
}

std::string_view to_string(Label l);
std::string_view to_string(Prediction p);

// ----------------------------------------------------------------------------
// Query responses
// ----------------------------------------------------------------------------

enum class Side : std::uint8_t { too_small = 0, too_large = 1 };
enum class Order : std::uint8_t { first_ge_second = 0, second_ge_first = 1 };

struct LabelAnswer {
  Label label;
  auto operator<=>(const LabelAnswer&) const = default;
};

/// Rectangle oracle: coordinate `coord` is outside the accepted range on `side`.
struct OddOneOut {
  std::size_t coord;
  Side side;
  auto operator<=>(const OddOneOut&) const = default;
};

/// Rectangle oracle "*" answer: the point is inside.
struct InRectangle {
  auto operator<=>(const InRectangle&) const = default;
};

struct SameLeaf {
  bool same;
  auto operator<=>(const SameLeaf&) const = default;
};

struct Comparison {
  Order order;
  auto operator<=>(const Comparison&) const = default;
};

using QueryResponse = std::variant<LabelAnswer, OddOneOut, InRectangle, SameLeaf, Comparison>;

std::string to_string(const QueryResponse& r);

// ----------------------------------------------------------------------------
// Adversary
// ----------------------------------------------------------------------------

/// How the adversary picks one answer out of a set of valid answers.
struct ResponsePolicy {
  enum class Mode : std::uint8_t { lowest_index, seeded_random, adversarial };
  using Callback = std::function<std::size_t(std::span<const QueryResponse> valid, std::uint64_t query_key)>;

  Mode mode = Mode::seeded_random;
  std::uint64_t seed = 0;
  Callback pick;

  static ResponsePolicy lowest_index();
  static ResponsePolicy seeded_random(std::uint64_t seed);
  static ResponsePolicy adversarial(Callback pick);
};

/// Stable 64-bit identity of a query: oracle name plus ordered point payloads.
std::uint64_t query_identity(std::string_view oracle, std::initializer_list<const Point*> payload);

/// Picks a member of `valid` (sorted into canonical order first).
/// Throws ContractViolation when `valid` is empty.
QueryResponse adversary_select(std::vector<QueryResponse> valid, const ResponsePolicy& policy,
                               std::uint64_t query_key);

// ----------------------------------------------------------------------------
// Counters, tapes
// ----------------------------------------------------------------------------

struct Counters {
  std::uint64_t samples_drawn = 0;
  std::uint64_t queries_made = 0;
};

/// Current and peak occupancy of the query tape (points) and work tape
/// (stored responses).
class TapeAccount {
 public:
  void set_points(std::uint64_t n);
  void set_responses(std::uint64_t n);

  std::uint64_t points() const { return points_; }
  std::uint64_t responses() const { return responses_; }
  std::uint64_t peak_points() const { return peak_points_; }
  std::uint64_t peak_responses() const { return peak_responses_; }

 private:
  std::uint64_t points_ = 0;
  std::uint64_t responses_ = 0;
  std::uint64_t peak_points_ = 0;
  std::uint64_t peak_responses_ = 0;
};

/// Identity of a stored point. Two samples with equal coordinates are still
/// different points on the tape.
using Handle = std::uint64_t;

struct Sample {
  Handle id = 0;
  Point x;
};

/// The learner's query tape. Oracles resolve handles through `at`, so a point
/// that has been erased can no longer be queried.
class QueryTape {
 public:
  explicit QueryTape(TapeAccount& account) : account_(&account) {}

  Handle store(Point x);
  void erase(Handle h);
  bool contains(Handle h) const { return points_.contains(h); }
  std::size_t size() const { return points_.size(); }

  /// Throws ContractViolation if `h` is not on the tape.
  const Point& at(Handle h) const;
  Sample sample(Handle h) const { return Sample{h, at(h)}; }

 private:
  std::unordered_map<Handle, Point> points_;
  Handle next_ = 1;
  TapeAccount* account_;
};

// ----------------------------------------------------------------------------
// Distributions and sampling
// ----------------------------------------------------------------------------

using Rng = std::mt19937_64;

/// Uniform double in [0, 1) from the top 53 bits of one engine output.
inline double unit_draw(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

/// splitmix64 finalizer over (base, stream); used to derive independent seeds.
std::uint64_t mix_seed(std::uint64_t base, std::uint64_t stream);

/// Uniform boxes, isotropic gaussians, or finite mixtures of them.
class Distribution {
 public:
  struct UniformBox {
    std::vector<double> lo, hi;
  };
  struct Gaussian {
    std::vector<double> center;
    double scale;
  };
  using Component = std::variant<UniformBox, Gaussian>;

  static Distribution uniform_box(std::vector<double> lo, std::vector<double> hi);
  static Distribution cube(std::size_t d, double lo, double hi);
  static Distribution gaussian(std::vector<double> center, double scale);
  static Distribution mixture(std::vector<Component> parts, std::vector<double> weights);

  std::size_t dim() const { return dim_; }
  const std::vector<Component>& components() const { return parts_; }
  const std::vector<double>& weights() const { return weights_; }

  /// Overwrites `out` with a fresh draw; reuses its storage.
  void sample_into(Rng& rng, Point& out) const;
  Point sample(Rng& rng) const;

  /// Box that holds (almost) all of the mass; gaussians contribute center +- 3 scale.
  std::pair<std::vector<double>, std::vector<double>> bounding_box() const;

 private:
  Distribution(std::size_t d, std::vector<Component> parts, std::vector<double> weights);

  std::size_t dim_ = 0;
  std::vector<Component> parts_;
  std::vector<double> weights_;
  std::vector<double> cumulative_;
};

/// A classifier that may abstain.
class PartialClassifier {
 public:
  using Fn = std::function<Prediction(const Point&)>;

  PartialClassifier() : fn_([](const Point&) { return Prediction::abstain; }) {}
  explicit PartialClassifier(Fn fn) : fn_(std::move(fn)) {}

  Prediction operator()(const Point& x) const { return fn_(x); }

 private:
  Fn fn_;
};

/// Draws from `dist` until `classify` abstains or `budget` draws are spent.
/// Every draw counts toward `counters.samples_drawn`. Returns nullopt when the
/// budget runs out first.
template <class Classifier>
std::optional<Point> draw_uninferred(const Distribution& dist, const Classifier& classify, std::uint64_t budget,
                                     Counters& counters, Rng& rng) {
  Point x;
  for (std::uint64_t i = 0; i < budget; ++i) {
    dist.sample_into(rng, x);
    ++counters.samples_drawn;
    if (classify(x) == Prediction::abstain) return x;
  }
  return std::nullopt;
}

}  // namespace rpu
