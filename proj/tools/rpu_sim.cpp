// rpu-sim: run seeded learner experiments and certification suites.
//
//   rpu-sim run     --class rect --dim 2 --epsilon 0.05 --trials 20
//   rpu-sim sweep   --class halfspace2d --epsilon 0.1,0.02,0.004 --trials 50 --out records.jsonl
//   rpu-sim certify --class tree --trials 1000
//
// Records go to --out (or stdout); the summary goes to stderr.
// Exit status: 0 ok, 1 usage error, 2 a trial mislabelled or a certification failed.
#include <CLI11.hpp>

#include <fstream>
#include <iostream>

#include "rpu/certify.hpp"
#include "rpu/harness.hpp"

namespace {

struct Flags {
  std::string config;
  std::string cls;
  std::size_t dim = 0;
  std::size_t tree_size = 0;
  std::vector<double> epsilons;
  double delta = 0;
  std::size_t trials = 0;
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::string mode;
  std::string constants;
  std::string distribution;
  std::string policy;
  std::size_t threads = 0;
  std::string out;
  std::size_t probes = 500;
};

void add_common(CLI::App* sub, Flags& f) {
  sub->add_option("--config", f.config, "JSON experiment spec; flags override it");
  sub->add_option("--class", f.cls, "rect | tree | halfspace2d");
  sub->add_option("--dim", f.dim, "instance dimension");
  sub->add_option("--tree-size", f.tree_size, "number of tree leaves");
  sub->add_option("--epsilon", f.epsilons, "accuracy parameter(s)")->delimiter(',');
  sub->add_option("--delta", f.delta, "confidence parameter");
  sub->add_option("--trials", f.trials, "trials per epsilon (instances for certify)");
  sub->add_option("--seed", f.seed, "seed base")->each([&f](const std::string&) { f.seed_set = true; });
  sub->add_option("--out", f.out, "output file for records (default stdout)");
}

rpu::ExperimentSpec build_spec(const Flags& f) {
  rpu::ExperimentSpec spec;
  if (!f.config.empty()) {
    std::ifstream in(f.config);
    if (!in) throw rpu::UsageError("cannot read config " + f.config);
    try {
      spec = rpu::ExperimentSpec::from_json(nlohmann::json::parse(in));
    } catch (const nlohmann::json::exception& e) {
      throw rpu::UsageError(std::string("config is not valid JSON: ") + e.what());
    }
  }
  if (!f.cls.empty()) spec.cls = rpu::parse_class(f.cls);
  if (spec.cls == rpu::ConceptClass::halfspace2d) spec.d = 2;
  if (f.dim) spec.d = f.dim;
  if (f.tree_size) spec.s = f.tree_size;
  if (!f.epsilons.empty()) spec.epsilons = f.epsilons;
  if (f.delta > 0) spec.delta = f.delta;
  if (f.trials) spec.trials = f.trials;
  if (f.seed_set) spec.seed = f.seed;
  if (!f.mode.empty()) spec.mode = rpu::parse_mode(f.mode);
  if (!f.distribution.empty()) spec.distribution = f.distribution;
  if (!f.policy.empty()) spec.policy = f.policy;
  if (f.threads) spec.threads = f.threads;
  if (!f.constants.empty()) spec.apply_constants(f.constants);
  spec.validate();
  return spec;
}

int run_experiment_cmd(const Flags& f, bool single) {
  rpu::ExperimentSpec spec = build_spec(f);
  if (single && spec.epsilons.size() != 1) throw rpu::UsageError("run takes exactly one --epsilon; use sweep");
  std::ofstream file;
  std::ostream* sink = &std::cout;
  if (!f.out.empty()) {
    file.open(f.out);
    if (!file) throw rpu::UsageError("cannot write " + f.out);
    sink = &file;
  }
  rpu::Summary s = rpu::run_experiment(spec, sink);
  std::cerr << s.to_json().dump(2) << '\n';
  return s.mislabels > 0 ? 2 : 0;
}

int certify_cmd(const Flags& f) {
  rpu::CertifyOptions o;
  if (f.trials) o.instances = f.trials;
  if (f.seed_set) o.seed = f.seed;
  o.probes = f.probes;
  std::vector<rpu::CertifyReport> reports;
  const std::string cls = f.cls.empty() ? "all" : f.cls;
  if (cls == "rect" || cls == "all") reports.push_back(rpu::certify_rectangles(o));
  if (cls == "tree" || cls == "all") reports.push_back(rpu::certify_trees(o));
  if (cls == "halfspace2d" || cls == "halfspace" || cls == "all") {
    reports.push_back(rpu::certify_halfspaces(o));
    reports.push_back(rpu::certify_halfspace_exactness(o));
  }
  if (reports.empty()) throw rpu::UsageError("unknown class '" + cls + "'");
  bool ok = true;
  for (const auto& r : reports) {
    std::cout << r.to_json().dump() << '\n';
    ok = ok && r.ok();
  }
  return ok ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bounded-memory active RPU learning simulator"};
  app.require_subcommand(1);
  Flags f;
  auto* run = app.add_subcommand("run", "one epsilon, seeded trials");
  auto* sweep = app.add_subcommand("sweep", "several epsilons, same trial seeds in every cell");
  auto* cert = app.add_subcommand("certify", "compare compression against brute-force inference");
  for (auto* sub : {run, sweep}) {
    add_common(sub, f);
    sub->add_option("--mode", f.mode, "bounded | passive | doubling");
    sub->add_option("--constants", f.constants, "overrides, e.g. c1=8,c2=2,eval_size=10000");
    sub->add_option("--distribution", f.distribution, "uniform | gaussian | mixture");
    sub->add_option("--policy", f.policy, "seeded_random | lowest_index");
    sub->add_option("--threads", f.threads, "worker threads (default: all cores)");
  }
  cert->add_option("--class", f.cls, "rect | tree | halfspace2d | all");
  cert->add_option("--trials", f.trials, "instances per suite");
  cert->add_option("--probes", f.probes, "probes per instance");
  cert->add_option("--seed", f.seed, "seed")->each([&f](const std::string&) { f.seed_set = true; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }
  try {
    if (*run) return run_experiment_cmd(f, true);
    if (*sweep) return run_experiment_cmd(f, false);
    return certify_cmd(f);
  } catch (const rpu::UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
