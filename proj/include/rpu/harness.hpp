// Seeded experiment runner: builds hypotheses and distributions from an
// ExperimentSpec, runs trials, and emits one JSON record per trial.
#pragma once

#include <map>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "rpu/learner.hpp"

namespace rpu {

inline constexpr int kSchemaVersion = 1;

enum class ConceptClass : std::uint8_t { rect, tree, halfspace2d };
enum class RunMode : std::uint8_t { bounded, passive, doubling };

std::string_view to_string(ConceptClass c);
std::string_view to_string(RunMode m);
ConceptClass parse_class(std::string_view s);
RunMode parse_mode(std::string_view s);

/// Thrown for malformed experiment specs and CLI input.
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct ExperimentSpec {
  std::string id = "experiment";
  ConceptClass cls = ConceptClass::rect;
  std::size_t d = 2;
  std::size_t s = 4;  // tree size
  std::string distribution = "uniform";  // uniform | gaussian | mixture, all over [0, 1]^d
  std::vector<double> epsilons{0.1};
  double delta = 0.1;
  std::size_t trials = 1;
  std::uint64_t seed = 1;
  RunMode mode = RunMode::bounded;
  std::string policy = "seeded_random";  // seeded_random | lowest_index
  LearnerConfig learner;                 // epsilon, delta and seed are overwritten per trial
  DoublingConfig doubling;
  std::size_t threads = 0;               // 0: hardware concurrency

  void validate() const;
  /// Applies "key=value,key=value" overrides for learner and doubling constants.
  void apply_constants(const std::string& kv);

  nlohmann::json to_json() const;
  static ExperimentSpec from_json(const nlohmann::json& j);
};

Distribution make_distribution(const std::string& kind, std::size_t d);

/// Result of one trial in flat form.
struct MetricRecord {
  std::string experiment_id;
  ConceptClass cls;
  std::size_t d;
  std::size_t s;
  double epsilon;
  double delta;
  std::uint64_t seed;
  std::size_t trial;
  RunMode mode;
  bool failed = false;
  std::string error;
  TrialMetrics metrics;

  nlohmann::json to_json() const;
  static MetricRecord from_json(const nlohmann::json& j);
};

/// Runs one trial; exceptions from the learner are caught and mark the record failed.
MetricRecord run_trial(const ExperimentSpec& spec, double epsilon, std::size_t trial);

struct CellSummary {
  double epsilon = 0;
  std::size_t trials = 0;
  std::size_t failed = 0;
  std::uint64_t mislabels = 0;
  double median_queries = 0;
  double median_batch_queries = 0;
  double median_samples = 0;
  double median_abstention = 0;
  std::uint64_t min_peak_points = 0;
  std::uint64_t max_peak_points = 0;
  double useful_fraction = 0;  // trials with abstention <= epsilon
};

struct LinearFit {
  double slope = 0, intercept = 0, r2 = 0;
};

/// Least squares fit of y on x. r2 is 1 when y is constant and fits exactly.
LinearFit fit_line(const std::vector<double>& x, const std::vector<double>& y);

struct Summary {
  std::vector<CellSummary> cells;
  LinearFit queries_vs_log_eps;  // median queries_total against log2(1/eps)
  LinearFit batch_vs_log_eps;    // median batch_queries against log2(1/eps)
  std::uint64_t mislabels = 0;
  std::size_t failed = 0;

  nlohmann::json to_json() const;
};

/// Runs trials x |epsilons| trials, writing records to `sink` (may be null)
/// in (epsilon, trial) order. `records`, when given, receives them too.
Summary run_experiment(const ExperimentSpec& spec, std::ostream* sink, std::vector<MetricRecord>* records = nullptr);

double median(std::vector<double> v);

}  // namespace rpu
