#include <gtest/gtest.h>

#include <sstream>

#include "rpu/harness.hpp"

using namespace rpu;

namespace {

ExperimentSpec small_spec(ConceptClass c) {
  ExperimentSpec s;
  s.cls = c;
  s.d = 2;
  s.s = 3;
  s.epsilons = {0.1};
  s.trials = 3;
  s.seed = 11;
  s.learner.eval_size = 500;
  s.threads = 2;
  return s;
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  for (std::string l; std::getline(ss, l);) out.push_back(l);
  return out;
}

}  // namespace

TEST(Spec, ValidateRejectsBadInput) {
  auto s = small_spec(ConceptClass::rect);
  EXPECT_NO_THROW(s.validate());
  auto bad = s;
  bad.epsilons = {};
  EXPECT_THROW(bad.validate(), UsageError);
  bad = s;
  bad.epsilons = {1.5};
  EXPECT_THROW(bad.validate(), UsageError);
  bad = s;
  bad.trials = 0;
  EXPECT_THROW(bad.validate(), UsageError);
  bad = small_spec(ConceptClass::halfspace2d);
  bad.d = 3;
  EXPECT_THROW(bad.validate(), UsageError);
  bad = s;
  bad.mode = RunMode::doubling;
  EXPECT_THROW(bad.validate(), UsageError);
  bad = s;
  bad.distribution = "cauchy";
  EXPECT_THROW(bad.validate(), UsageError);
  EXPECT_THROW(parse_class("nonsense"), UsageError);
  EXPECT_THROW(parse_mode("lazy"), UsageError);
}

TEST(Spec, Constants) {
  auto s = small_spec(ConceptClass::rect);
  s.apply_constants("c1=4,c2=30.5,stage_c2=2,eval_size=100");
  EXPECT_EQ(s.learner.c1, 4);
  EXPECT_EQ(s.learner.c2, 30.5);
  EXPECT_EQ(s.doubling.stage_c2, 2);
  EXPECT_EQ(s.learner.eval_size, 100u);
  EXPECT_THROW(s.apply_constants("c9=1"), UsageError);
  EXPECT_THROW(s.apply_constants("c1"), UsageError);
  EXPECT_THROW(s.apply_constants("c1=abc"), UsageError);
  s.apply_constants("c1=-1");
  EXPECT_THROW(s.validate(), UsageError);
}

TEST(Spec, JsonRoundTrip) {
  auto s = small_spec(ConceptClass::tree);
  s.epsilons = {0.1, 0.02};
  s.mode = RunMode::passive;
  s.apply_constants("c2=12");
  auto back = ExperimentSpec::from_json(s.to_json());
  EXPECT_EQ(back.to_json(), s.to_json());
  EXPECT_THROW(ExperimentSpec::from_json(nlohmann::json{{"trials", "many"}}), UsageError);
}

TEST(RunExperiment, OneRecordPerTrial) {
  auto s = small_spec(ConceptClass::rect);
  s.trials = 1;
  std::stringstream out;
  auto sum = run_experiment(s, &out);
  EXPECT_EQ(lines(out.str()).size(), 1u);
  EXPECT_EQ(sum.cells.size(), 1u);

  s.trials = 4;
  s.epsilons = {0.2, 0.1};
  std::stringstream out2;
  std::vector<MetricRecord> recs;
  run_experiment(s, &out2, &recs);
  auto ls = lines(out2.str());
  ASSERT_EQ(ls.size(), 8u);
  ASSERT_EQ(recs.size(), 8u);
  for (std::size_t i = 0; i < ls.size(); ++i) {
    auto j = nlohmann::json::parse(ls[i]);
    EXPECT_EQ(j.at("schema_version"), kSchemaVersion);
    EXPECT_EQ(j.at("trial"), i % 4);
    EXPECT_EQ(j.at("mislabels"), 0);
    EXPECT_EQ(j.at("status"), "ok");
  }
}

TEST(RunExperiment, ByteIdenticalAcrossRunsAndThreads) {
  for (auto c : {ConceptClass::rect, ConceptClass::tree, ConceptClass::halfspace2d}) {
    auto s = small_spec(c);
    std::stringstream a, b;
    run_experiment(s, &a);
    s.threads = 1;
    run_experiment(s, &b);
    EXPECT_EQ(a.str(), b.str());
  }
}

TEST(RunExperiment, SweepSharesTrialSeeds) {
  auto s = small_spec(ConceptClass::halfspace2d);
  s.epsilons = {0.2, 0.1};
  std::vector<MetricRecord> recs;
  run_experiment(s, nullptr, &recs);
  for (std::size_t t = 0; t < s.trials; ++t) EXPECT_EQ(recs[t].seed, recs[t + s.trials].seed);
}

TEST(RunExperiment, ModesAndDistributions) {
  for (std::string dist : {"uniform", "gaussian", "mixture"}) {
    auto s = small_spec(ConceptClass::tree);
    s.distribution = dist;
    for (auto m : {RunMode::bounded, RunMode::passive, RunMode::doubling}) {
      s.mode = m;
      std::vector<MetricRecord> recs;
      auto sum = run_experiment(s, nullptr, &recs);
      EXPECT_EQ(sum.mislabels, 0u);
      EXPECT_EQ(sum.failed, 0u);
      for (const auto& r : recs) {
        if (m == RunMode::doubling) EXPECT_GE(r.metrics.final_guess, 2u);
        EXPECT_EQ(r.mode, m);
      }
    }
  }
}

TEST(MetricRecord, RoundTrip) {
  auto s = small_spec(ConceptClass::halfspace2d);
  auto r = run_trial(s, 0.1, 2);
  auto j = r.to_json();
  auto back = MetricRecord::from_json(j);
  EXPECT_EQ(back.to_json(), j);
  j["schema_version"] = kSchemaVersion + 1;
  EXPECT_THROW(MetricRecord::from_json(j), UsageError);

  MetricRecord failed = r;
  failed.failed = true;
  failed.error = "boom";
  auto fj = failed.to_json();
  EXPECT_EQ(fj.at("status"), "failed");
  EXPECT_TRUE(MetricRecord::from_json(fj).failed);
}

TEST(Stats, MedianAndFit) {
  EXPECT_EQ(median({3, 1, 2}), 2);
  EXPECT_EQ(median({4, 1, 2, 3}), 2.5);
  EXPECT_EQ(median({}), 0);
  auto f = fit_line({1, 2, 3}, {3, 5, 7});
  EXPECT_NEAR(f.slope, 2, 1e-12);
  EXPECT_NEAR(f.intercept, 1, 1e-12);
  EXPECT_NEAR(f.r2, 1, 1e-12);
  auto g = fit_line({1, 2, 3}, {1, 3, 2});
  EXPECT_LT(g.r2, 0.5);
}

TEST(Distributions, Kinds) {
  EXPECT_EQ(make_distribution("uniform", 3).dim(), 3u);
  EXPECT_EQ(make_distribution("gaussian", 2).dim(), 2u);
  EXPECT_EQ(make_distribution("mixture", 4).weights().size(), 2u);
  EXPECT_THROW(make_distribution("beta", 2), UsageError);
}
