#pragma once

// Config-driven commands behind the ddc executable.

#include <cstdint>
#include <exception>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ddc/harness.hpp"

namespace ddc::cli {

/// Process exit codes. Every failure class has its own code.
enum Exit : int {
  kOk = 0,
  kUsage = 1,              // bad flags, unreadable or invalid config
  kInconsistentData = 2,
  kEnclosureFailure = 3,
  kNumericalBreakdown = 4,
  kEmptyEnvelope = 5,
  kEmptyAfterContraction = 6,
  kMaxSweeps = 7,
  kOracle = 8,             // ground-truth integration failed
  kIo = 9,
  kVerifyFailed = 10,
  kAblationViolated = 11,
  kLibrary = 12,           // any other library error, e.g. the plant left X
  kInternal = 13,          // anything not raised by the library
};

/// Maps an exception to its exit code.
int exit_code(const std::exception& e);

struct TrustOverrides {
  std::optional<double> r0, r_min, r_max, rho_accept, rho_good, beta_shrink, beta_grow, lambda;
  std::optional<int> max_iters;
  std::optional<lp::Norm> trust_norm, penalty_norm;
};

struct SideOverrides {
  std::optional<Vec> lipschitz_f;
  std::optional<Matrix> lipschitz_g;
  std::optional<double> bound;
  std::optional<std::size_t> estimate_samples;  // replace the declared bounds by estimates
  double estimate_safety = 1.5;
};

struct RunConfig {
  std::string environment;
  SideTier side_info = SideTier::Constraints;
  std::vector<SideTier> tiers{SideTier::Lipschitz, SideTier::KnownTerms, SideTier::Constraints};
  std::size_t steps = 200;
  std::optional<std::size_t> horizon;
  std::optional<double> dt;
  std::optional<Vec> x0;
  Vec theta{0.5};
  double p_ex = 0.0;
  std::uint64_t seed = 0;
  std::string out = "out";
  bool drop_inconsistent = false;
  bool second_order = true;
  bool compute_bound = true;
  double xdot_rel_pad = 1e-14;
  TrustOverrides trust;
  SideOverrides side;
};

/// Validates against the schema. Throws ConfigError naming the offending key.
RunConfig parse_config(const nlohmann::json& j);
/// Throws IoError when unreadable, ConfigError on malformed JSON or schema errors.
RunConfig load_config(const std::string& path);

std::string to_string(SideTier t);

/// Everything one run needs, resolved from the config and the environment.
struct Setup {
  harness::Environment env;
  SideInfo side;
  InclusionOptions inclusion;
  scp::EpisodeConfig episode;
};

Setup resolve(const RunConfig& cfg, SideTier tier);

struct RunOutput {
  scp::EpisodeLog log;
  Dataset data;
  std::vector<std::size_t> dropped;
};

/// Runs one episode and writes episode.csv, timing.csv, summary.json,
/// dataset.jsonl, envelopes.json and tube.json into dir.
RunOutput run_to(const RunConfig& cfg, SideTier tier, const std::string& dir, bool quiet);

/// Fixed-column CSV of the per-step log (no timing, so byte-reproducible).
void write_episode_csv(std::ostream& os, const scp::EpisodeLog& log, std::size_t n, std::size_t m);

struct AblationRow {
  SideTier tier;
  double total_cost = 0.0;
  double mean_width = 0.0;         // mean ||wd(R^{j+1})|| over the tier's own episode
  std::size_t failed_tubes = 0;    // steps without a certified tube, left out of mean_width
  double replay_mean_width = 0.0;  // mean ||wd(h(x^j, u^j))|| on the shared replay
  std::vector<double> replay_widths;
};

struct Ablation {
  std::vector<AblationRow> rows;
  /// Steps where a richer tier gave a wider replay enclosure than a poorer one.
  std::vector<std::size_t> violations;
};

/// Replays `data` through inclusions of the given tiers. Width at step j is
/// taken before sample j is observed.
Ablation replay_widths(const RunConfig& cfg, const std::vector<SideTier>& tiers, const Dataset& data);

void write_ablation_csv(std::ostream& os, const Ablation& a);

int cmd_run(const std::string& config_path, const std::optional<std::string>& out,
            std::optional<std::uint64_t> seed, bool quiet);
int cmd_verify(const std::string& suite, std::optional<std::uint64_t> seed, bool quiet);
int cmd_ablate(const std::string& config_path, const std::optional<std::string>& out,
               std::optional<std::uint64_t> seed, bool quiet);

}  // namespace ddc::cli
