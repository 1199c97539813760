#include "rpu/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <sstream>
#include <thread>

namespace rpu {

using json = nlohmann::json;

std::string_view to_string(ConceptClass c) {
  switch (c) {
    case ConceptClass::rect:
      return "rect";
    case ConceptClass::tree:
      return "tree";
    case ConceptClass::halfspace2d:
      break;
  }
  return "halfspace2d";
}

std::string_view to_string(RunMode m) {
  switch (m) {
    case RunMode::bounded:
      return "bounded";
    case RunMode::passive:
      return "passive";
    case RunMode::doubling:
      break;
  }
  return "doubling";
}

ConceptClass parse_class(std::string_view s) {
  if (s == "rect") return ConceptClass::rect;
  if (s == "tree") return ConceptClass::tree;
  if (s == "halfspace2d" || s == "halfspace") return ConceptClass::halfspace2d;
  throw UsageError("unknown class '" + std::string(s) + "' (rect, tree, halfspace2d)");
}

RunMode parse_mode(std::string_view s) {
  if (s == "bounded") return RunMode::bounded;
  if (s == "passive") return RunMode::passive;
  if (s == "doubling") return RunMode::doubling;
  throw UsageError("unknown mode '" + std::string(s) + "' (bounded, passive, doubling)");
}

void ExperimentSpec::validate() const {
  if (d == 0) throw UsageError("--dim must be >= 1");
  if (cls == ConceptClass::halfspace2d && d != 2) throw UsageError("halfspace2d needs --dim 2");
  if (cls == ConceptClass::tree && s == 0) throw UsageError("--tree-size must be >= 1");
  if (mode == RunMode::doubling && cls != ConceptClass::tree) throw UsageError("doubling mode is for trees only");
  if (epsilons.empty()) throw UsageError("need at least one epsilon");
  for (double e : epsilons)
    if (!(e > 0 && e < 1)) throw UsageError("epsilon must lie in (0, 1)");
  if (!(delta > 0 && delta < 1)) throw UsageError("delta must lie in (0, 1)");
  if (trials == 0) throw UsageError("--trials must be >= 1");
  if (policy != "seeded_random" && policy != "lowest_index") throw UsageError("unknown policy " + policy);
  if (distribution != "uniform" && distribution != "gaussian" && distribution != "mixture")
    throw UsageError("unknown distribution " + distribution);
  LearnerConfig probe = learner;
  probe.epsilon = epsilons.front();
  probe.delta = delta;
  try {
    probe.validate();
  } catch (const ContractViolation& e) {
    throw UsageError(e.what());
  }
  if (!(doubling.c_eps > 0) || !(doubling.c_m > 0) || !(doubling.stage_c1 > 0) || !(doubling.stage_c2 > 0))
    throw UsageError("doubling constants must be positive");
}

void ExperimentSpec::apply_constants(const std::string& kv) {
  std::stringstream ss(kv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    auto eq = item.find('=');
    if (eq == std::string::npos) throw UsageError("constant '" + item + "' is not key=value");
    std::string key = item.substr(0, eq);
    double v;
    try {
      std::size_t used = 0;
      v = std::stod(item.substr(eq + 1), &used);
      if (used != item.size() - eq - 1) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw UsageError("constant '" + item + "' has a non-numeric value");
    }
    if (key == "c1") learner.c1 = v;
    else if (key == "c2") learner.c2 = v;
    else if (key == "c3") learner.c3 = v;
    else if (key == "batch_factor") learner.batch_factor = static_cast<std::size_t>(v);
    else if (key == "eval_factor") learner.eval_factor = v;
    else if (key == "eval_size") learner.eval_size = static_cast<std::size_t>(v);
    else if (key == "c_eps") doubling.c_eps = v;
    else if (key == "c_m") doubling.c_m = v;
    else if (key == "stage_c1") doubling.stage_c1 = v;
    else if (key == "stage_c2") doubling.stage_c2 = v;
    else throw UsageError("unknown constant '" + key + "'");
  }
}

json ExperimentSpec::to_json() const {
  return json{{"id", id},
              {"class", std::string(to_string(cls))},
              {"dim", d},
              {"tree_size", s},
              {"distribution", distribution},
              {"epsilon", epsilons},
              {"delta", delta},
              {"trials", trials},
              {"seed", seed},
              {"mode", std::string(to_string(mode))},
              {"policy", policy},
              {"threads", threads},
              {"constants",
               {{"c1", learner.c1},
                {"c2", learner.c2},
                {"c3", learner.c3},
                {"batch_factor", learner.batch_factor},
                {"eval_factor", learner.eval_factor},
                {"eval_size", learner.eval_size},
                {"c_eps", doubling.c_eps},
                {"c_m", doubling.c_m},
                {"stage_c1", doubling.stage_c1},
                {"stage_c2", doubling.stage_c2}}}};
}

ExperimentSpec ExperimentSpec::from_json(const json& j) {
  ExperimentSpec s;
  try {
    if (j.contains("id")) s.id = j.at("id").get<std::string>();
    if (j.contains("class")) s.cls = parse_class(j.at("class").get<std::string>());
    if (j.contains("dim")) s.d = j.at("dim").get<std::size_t>();
    if (j.contains("tree_size")) s.s = j.at("tree_size").get<std::size_t>();
    if (j.contains("distribution")) s.distribution = j.at("distribution").get<std::string>();
    if (j.contains("epsilon")) {
      const auto& e = j.at("epsilon");
      s.epsilons = e.is_array() ? e.get<std::vector<double>>() : std::vector<double>{e.get<double>()};
    }
    if (j.contains("delta")) s.delta = j.at("delta").get<double>();
    if (j.contains("trials")) s.trials = j.at("trials").get<std::size_t>();
    if (j.contains("seed")) s.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("mode")) s.mode = parse_mode(j.at("mode").get<std::string>());
    if (j.contains("policy")) s.policy = j.at("policy").get<std::string>();
    if (j.contains("threads")) s.threads = j.at("threads").get<std::size_t>();
    if (j.contains("constants")) {
      std::string kv;
      for (const auto& [k, v] : j.at("constants").items()) kv += k + "=" + v.dump() + ",";
      s.apply_constants(kv);
    }
  } catch (const json::exception& e) {
    throw UsageError(std::string("bad config: ") + e.what());
  }
  return s;
}

Distribution make_distribution(const std::string& kind, std::size_t d) {
  if (kind == "uniform") return Distribution::cube(d, 0.0, 1.0);
  if (kind == "gaussian") return Distribution::gaussian(std::vector<double>(d, 0.5), 0.2);
  if (kind == "mixture")
    return Distribution::mixture({Distribution::UniformBox{std::vector<double>(d, 0.0), std::vector<double>(d, 1.0)},
                                  Distribution::Gaussian{std::vector<double>(d, 0.3), 0.05}},
                                 {0.7, 0.3});
  throw UsageError("unknown distribution " + kind);
}

json MetricRecord::to_json() const {
  const auto& m = metrics;
  json j{{"schema_version", kSchemaVersion},
         {"experiment_id", experiment_id},
         {"class", std::string(to_string(cls))},
         {"d", d},
         {"s", s},
         {"epsilon", epsilon},
         {"delta", delta},
         {"seed", seed},
         {"trial", trial},
         {"mode", std::string(to_string(mode))},
         {"status", failed ? "failed" : "ok"},
         {"error", error},
         {"queries_total", m.queries_total},
         {"race_label_queries", m.race_label_queries},
         {"batch_queries", m.batch_queries},
         {"samples_total", m.samples_total},
         {"rounds", m.rounds},
         {"peak_points", m.peak_points},
         {"peak_responses", m.peak_responses},
         {"abort_reason", std::string(to_string(m.abort_reason))},
         {"abstention", m.abstention},
         {"abstention_halfwidth", m.abstention_halfwidth},
         {"mislabels", m.mislabels},
         {"eval_size", m.eval_size},
         {"retained_positive", m.retained_positive},
         {"retained_negative", m.retained_negative},
         {"final_guess", m.final_guess},
         {"stages", m.stages}};
  return j;
}

MetricRecord MetricRecord::from_json(const json& j) {
  if (j.at("schema_version").get<int>() != kSchemaVersion) throw UsageError("unsupported record schema version");
  MetricRecord r;
  r.experiment_id = j.at("experiment_id").get<std::string>();
  r.cls = parse_class(j.at("class").get<std::string>());
  r.d = j.at("d").get<std::size_t>();
  r.s = j.at("s").get<std::size_t>();
  r.epsilon = j.at("epsilon").get<double>();
  r.delta = j.at("delta").get<double>();
  r.seed = j.at("seed").get<std::uint64_t>();
  r.trial = j.at("trial").get<std::size_t>();
  r.mode = parse_mode(j.at("mode").get<std::string>());
  r.failed = j.at("status").get<std::string>() == "failed";
  r.error = j.at("error").get<std::string>();
  auto& m = r.metrics;
  m.queries_total = j.at("queries_total").get<std::uint64_t>();
  m.race_label_queries = j.at("race_label_queries").get<std::uint64_t>();
  m.batch_queries = j.at("batch_queries").get<std::uint64_t>();
  m.samples_total = j.at("samples_total").get<std::uint64_t>();
  m.rounds = j.at("rounds").get<std::uint64_t>();
  m.peak_points = j.at("peak_points").get<std::uint64_t>();
  m.peak_responses = j.at("peak_responses").get<std::uint64_t>();
  const auto ar = j.at("abort_reason").get<std::string>();
  m.abort_reason = ar == "round_cap"        ? AbortReason::round_cap
                   : ar == "sample_cap"     ? AbortReason::sample_cap
                   : ar == "guess_overflow" ? AbortReason::guess_overflow
                                            : AbortReason::none;
  m.abstention = j.at("abstention").get<double>();
  m.abstention_halfwidth = j.at("abstention_halfwidth").get<double>();
  m.mislabels = j.at("mislabels").get<std::uint64_t>();
  m.eval_size = j.at("eval_size").get<std::uint64_t>();
  m.retained_positive = j.at("retained_positive").get<std::uint64_t>();
  m.retained_negative = j.at("retained_negative").get<std::uint64_t>();
  m.final_guess = j.at("final_guess").get<std::uint64_t>();
  m.stages = j.at("stages").get<std::uint64_t>();
  return r;
}

MetricRecord run_trial(const ExperimentSpec& spec, double epsilon, std::size_t trial) {
  MetricRecord rec;
  rec.experiment_id = spec.id;
  rec.cls = spec.cls;
  rec.d = spec.d;
  rec.s = spec.cls == ConceptClass::tree ? spec.s : 0;
  rec.epsilon = epsilon;
  rec.delta = spec.delta;
  rec.trial = trial;
  rec.mode = spec.mode;
  // The trial seed ignores epsilon, so cells of a sweep share hypotheses.
  const std::uint64_t tseed = mix_seed(spec.seed, trial);
  rec.seed = tseed;

  LearnerConfig cfg = spec.learner;
  cfg.epsilon = epsilon;
  cfg.delta = spec.delta;
  cfg.seed = tseed;
  ResponsePolicy policy = spec.policy == "lowest_index" ? ResponsePolicy::lowest_index()
                                                        : ResponsePolicy::seeded_random(mix_seed(tseed, 5));
  try {
    const Distribution dist = make_distribution(spec.distribution, spec.d);
    Rng hyp_rng(mix_seed(tseed, 1));
    LearnResult r;
    if (spec.mode == RunMode::doubling) {
      auto tree = random_tree(spec.d, spec.s, 0.0, 1.0, mix_seed(tseed, 1));
      r = run_doubling_tree(tree, dist, cfg, spec.doubling, policy);
    } else {
      std::shared_ptr<LearningSession> session;
      switch (spec.cls) {
        case ConceptClass::rect:
          session = make_rect_session(random_rectangle(spec.d, 0.0, 1.0, hyp_rng), policy);
          break;
        case ConceptClass::tree:
          session = make_tree_session(random_tree(spec.d, spec.s, 0.0, 1.0, mix_seed(tseed, 1)), spec.s, policy);
          break;
        case ConceptClass::halfspace2d:
          session = make_halfspace_session(random_halfspace(0.0, 1.0, hyp_rng), policy);
          break;
      }
      r = spec.mode == RunMode::passive ? run_passive(session, dist, cfg) : run_bounded(session, dist, cfg);
    }
    rec.metrics = r.metrics;
  } catch (const std::exception& e) {
    rec.failed = true;
    rec.error = e.what();
  }
  return rec;
}

double median(std::vector<double> v) {
  if (v.empty()) return 0;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

LinearFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  LinearFit f;
  const std::size_t n = std::min(x.size(), y.size());
  if (n == 0) return f;
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  f.slope = sxx > 0 ? sxy / sxx : 0;
  f.intercept = my - f.slope * mx;
  f.r2 = syy > 0 ? (sxy * sxy) / (sxx * syy) : 1.0;
  return f;
}

json Summary::to_json() const {
  json cs = json::array();
  for (const auto& c : cells)
    cs.push_back({{"epsilon", c.epsilon},
                  {"trials", c.trials},
                  {"failed", c.failed},
                  {"mislabels", c.mislabels},
                  {"median_queries", c.median_queries},
                  {"median_batch_queries", c.median_batch_queries},
                  {"median_samples", c.median_samples},
                  {"median_abstention", c.median_abstention},
                  {"min_peak_points", c.min_peak_points},
                  {"max_peak_points", c.max_peak_points},
                  {"useful_fraction", c.useful_fraction}});
  auto fit = [](const LinearFit& f) { return json{{"slope", f.slope}, {"intercept", f.intercept}, {"r2", f.r2}}; };
  return json{{"cells", cs},
              {"queries_vs_log2_inv_eps", fit(queries_vs_log_eps)},
              {"batch_vs_log2_inv_eps", fit(batch_vs_log_eps)},
              {"mislabels", mislabels},
              {"failed", failed}};
}

Summary run_experiment(const ExperimentSpec& spec, std::ostream* sink, std::vector<MetricRecord>* records) {
  spec.validate();
  Summary sum;
  std::vector<double> xs, ys, yb;
  std::size_t threads = spec.threads ? spec.threads : std::max(1u, std::thread::hardware_concurrency());
  for (double eps : spec.epsilons) {
    std::vector<MetricRecord> cell(spec.trials);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
      for (std::size_t t; (t = next.fetch_add(1)) < spec.trials;) cell[t] = run_trial(spec, eps, t);
    };
    std::vector<std::thread> pool;
    for (std::size_t i = 1; i < std::min(threads, spec.trials); ++i) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();

    CellSummary c;
    c.epsilon = eps;
    c.trials = spec.trials;
    std::vector<double> q, b, smp, ab;
    std::size_t useful = 0;
    c.min_peak_points = UINT64_MAX;
    for (const auto& r : cell) {
      if (sink) *sink << r.to_json().dump() << '\n';
      if (r.failed) {
        ++c.failed;
        continue;
      }
      const auto& m = r.metrics;
      c.mislabels += m.mislabels;
      q.push_back(static_cast<double>(m.queries_total));
      b.push_back(static_cast<double>(m.batch_queries));
      smp.push_back(static_cast<double>(m.samples_total));
      ab.push_back(m.abstention);
      useful += m.abstention <= eps;
      c.min_peak_points = std::min(c.min_peak_points, m.peak_points);
      c.max_peak_points = std::max(c.max_peak_points, m.peak_points);
    }
    if (c.min_peak_points == UINT64_MAX) c.min_peak_points = 0;
    c.median_queries = median(q);
    c.median_batch_queries = median(b);
    c.median_samples = median(smp);
    c.median_abstention = median(ab);
    c.useful_fraction = static_cast<double>(useful) / static_cast<double>(spec.trials);
    sum.mislabels += c.mislabels;
    sum.failed += c.failed;
    sum.cells.push_back(c);
    xs.push_back(std::log2(1.0 / eps));
    ys.push_back(c.median_queries);
    yb.push_back(c.median_batch_queries);
    if (records) records->insert(records->end(), cell.begin(), cell.end());
  }
  if (sink) sink->flush();
  sum.queries_vs_log_eps = fit_line(xs, ys);
  sum.batch_vs_log_eps = fit_line(xs, yb);
  return sum;
}

}  // namespace rpu
