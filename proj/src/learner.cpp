#include "rpu/learner.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

namespace rpu {

void LearnerConfig::validate() const {
  if (!(epsilon > 0 && epsilon < 1)) throw ContractViolation("epsilon must lie in (0, 1)");
  if (!(delta > 0 && delta < 1)) throw ContractViolation("delta must lie in (0, 1)");
  if (!(c1 > 0) || !(c2 > 0) || !(c3 > 0)) throw ContractViolation("learner constants must be positive");
  if (batch_factor == 0) throw ContractViolation("batch factor must be positive");
  if (eval_size == 0 && !(eval_factor > 0)) throw ContractViolation("eval factor must be positive");
}

std::uint64_t round_cap(const LearnerConfig& cfg) {
  cfg.validate();
  return static_cast<std::uint64_t>(std::ceil(cfg.c1 * std::log2(1.0 / (cfg.epsilon * cfg.delta))));
}

std::uint64_t sample_cap(const LearnerConfig& cfg, std::size_t k) {
  cfg.validate();
  const double ed = cfg.epsilon * cfg.delta;
  const double kk = static_cast<double>(k);
  return static_cast<std::uint64_t>(std::ceil(cfg.c2 * kk * std::log(kk / ed) * std::log(1.0 / ed) / cfg.epsilon));
}

std::uint64_t passive_size(const LearnerConfig& cfg, std::size_t k) {
  cfg.validate();
  const double kk = static_cast<double>(k);
  return static_cast<std::uint64_t>(
      std::ceil(cfg.c3 * (kk * std::log(1.0 / cfg.epsilon) + std::log(1.0 / cfg.delta)) / cfg.epsilon));
}

std::uint64_t eval_size(const LearnerConfig& cfg) {
  if (cfg.eval_size) return cfg.eval_size;
  return static_cast<std::uint64_t>(std::ceil(cfg.eval_factor / cfg.epsilon));
}

std::string_view to_string(AbortReason r) {
  switch (r) {
    case AbortReason::none:
      return "none";
    case AbortReason::round_cap:
      return "round_cap";
    case AbortReason::sample_cap:
      return "sample_cap";
    case AbortReason::guess_overflow:
      break;
  }
  return "guess_overflow";
}

// ---------------------------------------------------------------- session base

Sample LearningSession::admit(Point x) {
  Handle h = tape_.store(std::move(x));
  return tape_.sample(h);
}

Label LearningSession::query_label(const Sample& s) {
  const Point& x = on_tape(s);
  auto r = ask("label", {&x}, {LabelAnswer{truth(x)}});
  return std::get<LabelAnswer>(r).label;
}

QueryResponse LearningSession::ask(std::string_view oracle, std::initializer_list<const Point*> payload,
                                   std::vector<QueryResponse> valid) {
  ++counters_.queries_made;
  if (valid.size() == 1) return valid.front();
  return adversary_select(std::move(valid), policy_, query_identity(oracle, payload));
}

std::uint64_t LearningSession::compress(Label sign, std::span<const Sample> batch) {
  std::unordered_set<Handle> before;
  for (const auto& s : retained(sign)) before.insert(s.id);
  for (const auto& s : batch) {
    if (!tape_.contains(s.id)) throw ContractViolation("compress: batch point not on the query tape");
    before.insert(s.id);
  }
  const std::uint64_t q = do_compress(sign, batch);
  std::unordered_set<Handle> keep;
  for (const auto& s : retained(sign)) keep.insert(s.id);
  for (Handle h : before)
    if (!keep.contains(h)) tape_.erase(h);
  set_buffered_responses(buffered_ >= batch.size() ? buffered_ - batch.size() : 0);
  return q;
}

void LearningSession::discard(const Sample& s) { tape_.erase(s.id); }

void LearningSession::set_buffered_responses(std::uint64_t n) {
  buffered_ = n;
  account_.set_responses(buffered_ + stored_responses());
}

// ---------------------------------------------------------------- rectangles

namespace {

class RectSession final : public LearningSession {
 public:
  RectSession(RectangleHypothesis h, ResponsePolicy p)
      : LearningSession(std::move(p)), h_(std::move(h)), state_(h_.dim()) {}

  std::string_view class_name() const override { return "rect"; }
  std::size_t dim() const override { return h_.dim(); }
  std::size_t lcs_size() const override { return 2 * h_.dim(); }
  Prediction infer(const Point& x) const override { return state_.infer(x); }
  Label truth(const Point& x) const override { return h_.label(x); }
  std::vector<Sample> retained(Label sign) const override {
    return sign == Label::positive ? state_.positive_witnesses() : state_.negative_witnesses();
  }
  const RectCompressedState& state() const { return state_; }

 protected:
  std::uint64_t do_compress(Label sign, std::span<const Sample> batch) override {
    std::vector<RectEntry> entries;
    entries.reserve(batch.size());
    std::uint64_t q = 0;
    for (const auto& s : batch) {
      if (sign == Label::positive) {
        // a positive point has the single valid answer "*"; nothing to ask
        entries.push_back({s, InRectangle{}});
      } else {
        const Point& x = on_tape(s);
        entries.push_back({s, ask("odd_one_out", {&x}, odd_one_out(h_, x))});
        ++q;
      }
    }
    state_ = compress_rect(state_, entries);
    return q;
  }
  std::uint64_t stored_responses() const override {
    return state_.positive_witnesses().size() + state_.negative_witnesses().size();
  }

 private:
  RectangleHypothesis h_;
  RectCompressedState state_;
};

class TreeSession final : public LearningSession {
 public:
  TreeSession(DecisionTreeHypothesis h, std::size_t guess, ResponsePolicy p)
      : LearningSession(std::move(p)), h_(std::move(h)), guess_(guess), state_(h_.dim()) {
    if (guess == 0) throw ContractViolation("tree session: leaf guess must be >= 1");
  }

  std::string_view class_name() const override { return "tree"; }
  std::size_t dim() const override { return h_.dim(); }
  std::size_t lcs_size() const override { return 2 * h_.dim() * guess_; }
  Prediction infer(const Point& x) const override { return state_.infer(x); }
  Label truth(const Point& x) const override { return h_.label(x); }
  std::vector<Sample> retained(Label sign) const override { return state_.witnesses(sign); }
  bool overflowed() const override { return state_.groups().size() > guess_; }

 protected:
  std::uint64_t do_compress(Label sign, std::span<const Sample> batch) override {
    std::vector<LabeledSample> pts;
    pts.reserve(batch.size());
    for (const auto& s : batch) pts.push_back({s, sign});
    auto query = [this](const Sample& a, const Sample& b) {
      const Point& x = on_tape(a);
      const Point& y = on_tape(b);
      return std::get<SameLeaf>(ask("same_leaf", {&x, &y}, same_leaf(h_, x, y))).same;
    };
    auto r = group_by_leaf(state_, pts, query);
    state_ = std::move(r.state);
    return r.queries;
  }
  std::uint64_t stored_responses() const override {
    return state_.witnesses(Label::positive).size() + state_.witnesses(Label::negative).size();
  }

 private:
  DecisionTreeHypothesis h_;
  std::size_t guess_;
  LeafGroupState state_;
};

class HalfspaceSession final : public LearningSession {
 public:
  HalfspaceSession(HalfspaceHypothesis h, ResponsePolicy p) : LearningSession(std::move(p)), h_(h) {}

  std::string_view class_name() const override { return "halfspace2d"; }
  std::size_t dim() const override { return 2; }
  std::size_t lcs_size() const override { return 5; }
  Prediction infer(const Point& x) const override { return infer_halfspace(pos_, neg_, x); }
  Label truth(const Point& x) const override { return h_.label(x); }
  std::vector<Sample> retained(Label sign) const override {
    return sign == Label::positive ? pos_.witnesses : neg_.witnesses;
  }

 protected:
  std::uint64_t do_compress(Label sign, std::span<const Sample> batch) override {
    const bool flip = sign == Label::negative;
    auto cmp = [this, flip](const Sample& a, const Sample& b) {
      const Point& x = on_tape(a);
      const Point& y = on_tape(b);
      Order o = std::get<Comparison>(ask("compare", {&x, &y}, compare(h_, x, y))).order;
      if (flip) o = o == Order::first_ge_second ? Order::second_ge_first : Order::first_ge_second;
      return o;
    };
    ConeState& c = flip ? neg_ : pos_;
    auto built = build_cone(c, batch, cmp);
    c = std::move(built.state);
    return built.queries;
  }
  std::uint64_t stored_responses() const override {
    return pos_.witnesses.size() + pos_.stored_responses() + neg_.witnesses.size() + neg_.stored_responses();
  }

 private:
  HalfspaceHypothesis h_;
  ConeState pos_, neg_;
};

double wilson_halfwidth(double p, double n) {
  if (n <= 0) return 1.0;
  const double z = 1.959963984540054;
  const double denom = 1 + z * z / n;
  return z * std::sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / denom;
}

PartialClassifier classifier_of(const std::shared_ptr<LearningSession>& s) {
  return PartialClassifier([s](const Point& x) { return s->infer(x); });
}

}  // namespace

std::shared_ptr<LearningSession> make_rect_session(RectangleHypothesis h, ResponsePolicy policy) {
  return std::make_shared<RectSession>(std::move(h), std::move(policy));
}

std::shared_ptr<LearningSession> make_tree_session(DecisionTreeHypothesis h, std::size_t leaf_guess,
                                                   ResponsePolicy policy) {
  return std::make_shared<TreeSession>(std::move(h), leaf_guess, std::move(policy));
}

std::shared_ptr<LearningSession> make_halfspace_session(HalfspaceHypothesis h, ResponsePolicy policy) {
  return std::make_shared<HalfspaceSession>(h, std::move(policy));
}

// ---------------------------------------------------------------- runs

void evaluate(const LearningSession& session, const Distribution& dist, const LearnerConfig& cfg,
              TrialMetrics& m) {
  Rng rng(mix_seed(cfg.seed, 3));
  const std::uint64_t n = eval_size(cfg);
  std::uint64_t abstain = 0, wrong = 0;
  Point x;
  for (std::uint64_t i = 0; i < n; ++i) {
    dist.sample_into(rng, x);
    Prediction p = session.infer(x);
    if (p == Prediction::abstain)
      ++abstain;
    else if (p != to_prediction(session.truth(x)))
      ++wrong;
  }
  m.eval_size = n;
  m.abstention = n ? static_cast<double>(abstain) / static_cast<double>(n) : 1.0;
  m.abstention_halfwidth = wilson_halfwidth(m.abstention, static_cast<double>(n));
  m.mislabels = wrong;
}

namespace {

void fill_common(const LearningSession& s, TrialMetrics& m) {
  m.queries_total = s.counters().queries_made;
  m.samples_total = s.counters().samples_drawn;
  m.peak_points = s.account().peak_points();
  m.peak_responses = s.account().peak_responses();
  m.retained_positive = s.retained(Label::positive).size();
  m.retained_negative = s.retained(Label::negative).size();
}

// The race itself, without evaluation.
TrialMetrics race(LearningSession& session, const Distribution& dist, const LearnerConfig& cfg,
                  const RoundObserver& observer) {
  cfg.validate();
  if (dist.dim() != session.dim()) throw ContractViolation("distribution and hypothesis dimensions differ");
  const std::size_t k = session.lcs_size();
  const std::size_t batch = cfg.batch_factor * k;
  const std::uint64_t t1 = round_cap(cfg);
  const std::uint64_t t2 = sample_cap(cfg, k);
  if (t1 == 0 || t2 == 0) throw ContractViolation("round and sample caps must be positive");
  const std::uint64_t memory_cap = 14 * static_cast<std::uint64_t>(k);

  TrialMetrics m;
  Rng rng(mix_seed(cfg.seed, 2));
  std::vector<Sample> buffers[2];
  auto classify = [&session](const Point& x) { return session.infer(x); };
  while (true) {
    if (m.rounds >= t1) {
      m.abort_reason = AbortReason::round_cap;
      break;
    }
    const std::uint64_t drawn = session.counters().samples_drawn;
    if (drawn >= t2) {
      m.abort_reason = AbortReason::sample_cap;
      break;
    }
    auto x = draw_uninferred(dist, classify, t2 - drawn, session.counters(), rng);
    if (!x) {
      m.abort_reason = AbortReason::sample_cap;
      break;
    }
    Sample s = session.admit(std::move(*x));
    Label l = session.query_label(s);
    ++m.race_label_queries;
    auto& buf = buffers[l == Label::positive];
    buf.push_back(std::move(s));
    session.set_buffered_responses(buffers[0].size() + buffers[1].size());
    if (session.account().points() > memory_cap)
      throw ContractViolation("query tape exceeded 14k points");
    if (buf.size() < batch) continue;

    m.batch_queries += session.compress(l, buf);
    buf.clear();
    ++m.rounds;
    if (session.account().peak_points() > memory_cap)
      throw ContractViolation("query tape exceeded 14k points");
    if (observer) observer(session, m.rounds);
    if (session.overflowed()) {
      m.abort_reason = AbortReason::guess_overflow;
      break;
    }
  }
  // leftover race buffers are never compressed
  for (auto& b : buffers)
    for (const auto& s : b) session.discard(s);
  session.set_buffered_responses(0);
  fill_common(session, m);
  return m;
}

}  // namespace

LearnResult run_bounded(std::shared_ptr<LearningSession> session, const Distribution& dist, const LearnerConfig& cfg,
                        const RoundObserver& observer) {
  if (!session) throw ContractViolation("run_bounded: null session");
  TrialMetrics m = race(*session, dist, cfg, observer);
  evaluate(*session, dist, cfg, m);
  return {classifier_of(session), m, session};
}

LearnResult run_passive(std::shared_ptr<LearningSession> session, const Distribution& dist, const LearnerConfig& cfg) {
  if (!session) throw ContractViolation("run_passive: null session");
  cfg.validate();
  if (dist.dim() != session->dim()) throw ContractViolation("distribution and hypothesis dimensions differ");
  const std::uint64_t m_size = passive_size(cfg, session->lcs_size());
  Rng rng(mix_seed(cfg.seed, 2));
  std::vector<Sample> by_sign[2];
  TrialMetrics m;
  for (std::uint64_t i = 0; i < m_size; ++i) {
    Point x = dist.sample(rng);
    ++session->counters().samples_drawn;
    Sample s = session->admit(std::move(x));
    Label l = session->query_label(s);
    ++m.race_label_queries;
    by_sign[l == Label::positive].push_back(std::move(s));
  }
  session->set_buffered_responses(m_size);
  for (Label l : {Label::negative, Label::positive}) {
    auto& b = by_sign[l == Label::positive];
    if (b.empty()) continue;
    m.batch_queries += session->compress(l, b);
    ++m.rounds;
  }
  m.abort_reason = AbortReason::sample_cap;
  fill_common(*session, m);
  evaluate(*session, dist, cfg, m);
  return {classifier_of(session), m, session};
}

LearnResult run_doubling_tree(const DecisionTreeHypothesis& hidden, const Distribution& dist, const LearnerConfig& cfg,
                              const DoublingConfig& dcfg, ResponsePolicy policy) {
  cfg.validate();
  if (!(dcfg.c_eps > 0) || !(dcfg.c_m > 0)) throw ContractViolation("doubling constants must be positive");
  const double eps = cfg.epsilon, delta = cfg.delta;
  TrialMetrics total;
  std::shared_ptr<LearningSession> session;
  for (std::size_t guess = 2, stage = 0; guess <= dcfg.max_guess; guess *= 2, ++stage) {
    const double g = static_cast<double>(guess);
    LearnerConfig sc = cfg;
    sc.epsilon = std::min(0.5, dcfg.c_eps * eps / (g * std::log(g / delta)));
    sc.delta = delta / g;
    sc.c1 = dcfg.stage_c1;
    sc.c2 = dcfg.stage_c2;
    sc.seed = mix_seed(cfg.seed, 100 + stage);
    ResponsePolicy p = policy;
    if (p.mode == ResponsePolicy::Mode::seeded_random) p.seed = mix_seed(policy.seed, stage);
    session = make_tree_session(hidden, guess, p);

    TrialMetrics m = race(*session, dist, sc, {});
    const std::uint64_t n_cap = sample_cap(sc, session->lcs_size());
    const auto m_val = static_cast<std::uint64_t>(std::ceil(dcfg.c_m * std::log(g / delta) / eps));

    bool accepted = m.abort_reason != AbortReason::guess_overflow;
    Rng vrng(mix_seed(sc.seed, 4));
    Point x;
    for (std::uint64_t i = 0; i < m_val && accepted; ++i) {
      dist.sample_into(vrng, x);
      accepted = session->infer(x) != Prediction::abstain;
    }

    // the stage is charged its full budget whether or not it stopped early
    total.samples_total += n_cap + m_val;
    total.queries_total += m.queries_total;
    total.race_label_queries += m.race_label_queries;
    total.batch_queries += m.batch_queries;
    total.rounds += m.rounds;
    total.peak_points = std::max(total.peak_points, m.peak_points);
    total.peak_responses = std::max(total.peak_responses, m.peak_responses);
    total.abort_reason = m.abort_reason;
    total.final_guess = guess;
    total.stages = stage + 1;
    if (accepted) break;
  }
  TrialMetrics out = total;
  out.queries_total = total.race_label_queries + total.batch_queries;
  out.retained_positive = session->retained(Label::positive).size();
  out.retained_negative = session->retained(Label::negative).size();
  evaluate(*session, dist, cfg, out);
  return {classifier_of(session), out, session};
}

}  // namespace rpu
