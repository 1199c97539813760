// Agreement suites between the compression schemes and the brute-force
// inference oracle. Used by the `certify` subcommand and the acceptance run.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

namespace rpu {

struct CertifyReport {
  std::string suite;
  std::size_t instances = 0;
  std::size_t probes = 0;           // probes compared
  std::size_t excluded_probes = 0;  // boundary probes skipped (halfspaces only)
  std::size_t size_violations = 0;  // compressed set above the cap
  std::size_t lossless_violations = 0;  // oracle disagrees between compressed and full transcript
  std::size_t rule_violations = 0;      // class inference disagrees with the oracle
  std::size_t unsound = 0;              // an inferred label contradicts ground truth
  std::size_t vacuous = 0;              // transcripts the oracle found inconsistent
  std::vector<std::string> examples;    // first few failures, for diagnostics

  bool ok() const {
    return size_violations == 0 && lossless_violations == 0 && rule_violations == 0 && unsound == 0 && vacuous == 0;
  }
  nlohmann::json to_json() const;
};

struct CertifyOptions {
  std::size_t instances = 1000;
  std::size_t probes = 500;
  std::size_t max_sample = 40;
  std::uint64_t seed = 1;
};

/// Rectangles in d = 1..5, monochromatic samples, odd-one-out answers
/// chosen by a seeded adversary.
CertifyReport certify_rectangles(const CertifyOptions& o);

/// Grid trees with at most 4 leaves in d = 1..2. Checks the hull rule and
/// full family inference on compressed versus full transcripts.
CertifyReport certify_trees(const CertifyOptions& o);

/// Lattice halfspaces with monochromatic samples; compares cone inference
/// against exact feasibility (boundary probes within 1e-9 excluded).
CertifyReport certify_halfspaces(const CertifyOptions& o);

/// Both signs at once: infer_halfspace against the exact per-sign oracles,
/// and every label checked against ground truth.
CertifyReport certify_halfspace_exactness(const CertifyOptions& o);

}  // namespace rpu
