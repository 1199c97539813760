// Bounded-memory active RPU learner, the passive baseline, and the doubling
// learner for decision trees of unknown size.
#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rpu/core.hpp"
#include "rpu/halfspaces2d.hpp"
#include "rpu/rectangles.hpp"
#include "rpu/trees.hpp"

namespace rpu {

struct LearnerConfig {
  double epsilon = 0.1;
  double delta = 0.1;
  double c1 = 8;   // round cap constant
  double c2 = 60;  // sample cap constant
  double c3 = 2;   // passive sample size constant
  std::size_t batch_factor = 6;
  double eval_factor = 50;     // evaluation draws = ceil(eval_factor / epsilon)
  std::size_t eval_size = 0;   // overrides eval_factor when nonzero
  std::uint64_t seed = 0;

  void validate() const;
};

/// ceil(c1 * log2(1 / (eps * delta)))
std::uint64_t round_cap(const LearnerConfig& cfg);
/// ceil(c2 * k * ln(k / (eps * delta)) * ln(1 / (eps * delta)) / eps)
std::uint64_t sample_cap(const LearnerConfig& cfg, std::size_t k);
/// ceil(c3 * (k * ln(1 / eps) + ln(1 / delta)) / eps)
std::uint64_t passive_size(const LearnerConfig& cfg, std::size_t k);
std::uint64_t eval_size(const LearnerConfig& cfg);

enum class AbortReason : std::uint8_t { none, round_cap, sample_cap, guess_overflow };
std::string_view to_string(AbortReason r);

struct TrialMetrics {
  std::uint64_t queries_total = 0;
  std::uint64_t race_label_queries = 0;
  std::uint64_t batch_queries = 0;
  std::uint64_t samples_total = 0;
  std::uint64_t rounds = 0;
  std::uint64_t peak_points = 0;
  std::uint64_t peak_responses = 0;
  AbortReason abort_reason = AbortReason::none;
  double abstention = 1.0;
  double abstention_halfwidth = 0.0;
  std::uint64_t mislabels = 0;
  std::uint64_t eval_size = 0;
  std::uint64_t retained_positive = 0;
  std::uint64_t retained_negative = 0;
  std::uint64_t final_guess = 0;  // doubling learner only
  std::uint64_t stages = 0;       // doubling learner only
};

/// One learner's view of a hidden hypothesis: the query tape, counters, and
/// the class-specific compressed state for each sign.
class LearningSession {
 public:
  explicit LearningSession(ResponsePolicy policy) : tape_(account_), policy_(std::move(policy)) {}
  virtual ~LearningSession() = default;
  LearningSession(const LearningSession&) = delete;
  LearningSession& operator=(const LearningSession&) = delete;

  virtual std::string_view class_name() const = 0;
  virtual std::size_t dim() const = 0;
  virtual std::size_t lcs_size() const = 0;

  virtual Prediction infer(const Point& x) const = 0;
  /// Ground truth; instrumentation only, never counted as a query.
  virtual Label truth(const Point& x) const = 0;
  virtual std::vector<Sample> retained(Label sign) const = 0;
  /// True once the tree session has seen more leaf groups than its guess.
  virtual bool overflowed() const { return false; }

  /// Puts x on the query tape.
  Sample admit(Point x);
  /// One label query on a tape point.
  Label query_label(const Sample& s);
  /// Issues the class's batch queries on `batch` plus the retained points of
  /// `sign`, compresses, and erases everything not retained. Returns the
  /// number of queries issued.
  std::uint64_t compress(Label sign, std::span<const Sample> batch);
  /// Drops a point that will never be compressed.
  void discard(const Sample& s);

  Counters& counters() { return counters_; }
  const Counters& counters() const { return counters_; }
  const TapeAccount& account() const { return account_; }
  const QueryTape& tape() const { return tape_; }

  /// Work-tape entries: one label per buffered point plus the stored
  /// responses of both compressed states.
  void set_buffered_responses(std::uint64_t n);

 protected:
  virtual std::uint64_t do_compress(Label sign, std::span<const Sample> batch) = 0;
  virtual std::uint64_t stored_responses() const = 0;

  /// Selects one answer from `valid` under the policy and counts the query.
  QueryResponse ask(std::string_view oracle, std::initializer_list<const Point*> payload,
                    std::vector<QueryResponse> valid);
  const Point& on_tape(const Sample& s) const { return tape_.at(s.id); }

 private:
  Counters counters_;
  TapeAccount account_;
  QueryTape tape_;
  ResponsePolicy policy_;
  std::uint64_t buffered_ = 0;
};

std::shared_ptr<LearningSession> make_rect_session(RectangleHypothesis h, ResponsePolicy policy);
/// `leaf_guess` sets k = 2 d leaf_guess; the session reports overflow once it
/// has formed more groups than that.
std::shared_ptr<LearningSession> make_tree_session(DecisionTreeHypothesis h, std::size_t leaf_guess,
                                                   ResponsePolicy policy);
std::shared_ptr<LearningSession> make_halfspace_session(HalfspaceHypothesis h, ResponsePolicy policy);

/// Called after every compression round.
using RoundObserver = std::function<void(const LearningSession&, std::uint64_t round)>;

struct LearnResult {
  PartialClassifier classifier;
  TrialMetrics metrics;
  std::shared_ptr<LearningSession> session;
};

/// Monochromatic race with lossless compression. Throws ContractViolation if
/// the query tape ever holds more than 14k points.
LearnResult run_bounded(std::shared_ptr<LearningSession> session, const Distribution& dist, const LearnerConfig& cfg,
                        const RoundObserver& observer = {});

/// Draws passive_size(cfg, k) points, queries them all, keeps everything.
LearnResult run_passive(std::shared_ptr<LearningSession> session, const Distribution& dist, const LearnerConfig& cfg);

struct DoublingConfig {
  double c_eps = 1.0;   // stage epsilon = c_eps * eps / (s' ln(s'/delta))
  double c_m = 1.0;     // validation draws = ceil(c_m ln(s'/delta) / eps)
  double stage_c1 = 8;
  double stage_c2 = 1;  // stage epsilon is already small; 60 here costs ~1e9 draws at s' = 32
  std::size_t max_guess = 1024;
};

/// Runs the bounded learner with guesses s' = 2, 4, 8, ... until a stage's
/// validation sample is fully inferred. Every stage is charged exactly
/// sample_cap + validation draws.
LearnResult run_doubling_tree(const DecisionTreeHypothesis& hidden, const Distribution& dist, const LearnerConfig& cfg,
                              const DoublingConfig& dcfg, ResponsePolicy policy);

/// Abstention and mislabels of `session` on fresh draws labelled by ground truth.
void evaluate(const LearningSession& session, const Distribution& dist, const LearnerConfig& cfg,
              TrialMetrics& metrics);

}  // namespace rpu
