#pragma once

// Acceptance batteries. Each criterion runs a fixed, seeded experiment and
// reports a single pass/fail verdict with a one-line detail string.

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "ddc/lp.hpp"

namespace ddc::battery {

struct CriterionResult {
  int id = 0;
  std::string name;
  bool pass = false;
  std::string detail;
  double seconds = 0.0;
  double time_limit = 0.0;  // seconds; 0 means no limit
};

struct Options {
  std::uint64_t seed = 20240611;
  /// Multiplies every instance count; unit tests run the batteries at < 1.
  double scale = 1.0;
  bool quiet = true;
};

/// Violations per primitive from the interval soundness fuzz.
struct FuzzReport {
  std::map<std::string, std::size_t> violations;
  std::size_t instances = 0;
  std::size_t total_violations() const;
};

FuzzReport fuzz_interval_soundness(std::size_t per_op, std::uint64_t seed);

/// Minimum over all feasible vertices; requires finite bounds on every
/// variable. nullopt when no vertex is feasible.
std::optional<double> vertex_enumeration(const lp::LinearProgram& lp, double tol = 1e-9);
/// Random LP with n <= max_vars variables, m <= max_rows rows and finite boxes.
lp::LinearProgram random_lp(std::mt19937_64& rng, std::size_t max_vars = 6, std::size_t max_rows = 8);

CriterionResult interval_soundness(const Options& opt);
CriterionResult contraction_optimality(const Options& opt);
CriterionResult inclusion_soundness(const Options& opt);
CriterionResult reach_containment(const Options& opt);
CriterionResult monotonicity(const Options& opt);
CriterionResult scp_vs_oracle(const Options& opt);
CriterionResult suboptimality(const Options& opt);
CriterionResult end_to_end(const Options& opt);
CriterionResult lp_correctness(const Options& opt);

/// Criterion ids grouped by suite name: interval, contraction, reach, scp,
/// theorem3, all. Unknown names return an empty list.
std::vector<int> suite_criteria(std::string_view suite);
CriterionResult run_criterion(int id, const Options& opt);

std::string format_result(const CriterionResult& r);

}  // namespace ddc::battery
