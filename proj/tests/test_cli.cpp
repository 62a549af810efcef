#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "cli.hpp"
#include "ddc/error.hpp"
#include "ddc/io.hpp"

using namespace ddc;
using namespace ddc::cli;
using nlohmann::json;

namespace {

std::string temp_dir(const std::string& name) {
  const auto p = std::filesystem::temp_directory_path() / ("ddc_cli_" + name);
  std::filesystem::remove_all(p);
  return p.string();
}

std::string slurp(const std::string& path) {
  std::ifstream is(path);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

RunConfig small(const std::string& env, std::size_t steps) {
  return parse_config(json{{"environment", env}, {"steps", steps}, {"p_ex", 0.2}, {"seed", 11}});
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("schema defaults") {
  const RunConfig c = parse_config(json{{"environment", "duffing"}});
  CHECK(c.side_info == SideTier::Constraints);
  CHECK(c.tiers.size() == 3);
  CHECK(c.steps == 200);
  CHECK(c.theta == Vec{0.5});
  CHECK(c.p_ex == 0.0);
  CHECK(!c.drop_inconsistent);
}

TEST_CASE("schema rejects bad configs") {
  auto rejects = [](const json& j, const std::string& key) {
    try {
      parse_config(j);
    } catch (const ConfigError& e) {
      return std::string(e.what()).find(key) != std::string::npos;
    }
    return false;
  };
  CHECK(rejects(json{{"steps", 3}}, "environment"));
  CHECK(rejects(json{{"environment", "pendulum"}, {"dt", -0.05}}, "dt"));
  CHECK(rejects(json{{"environment", "pendulum"}, {"dt", 0}}, "dt"));
  CHECK(rejects(json{{"environment", "pendulum"}, {"colour", 1}}, "colour"));
  CHECK(rejects(json{{"environment", "pendulum"}, {"trust_region", {{"radius", 1}}}}, "trust_region.radius"));
  CHECK(rejects(json{{"environment", "pendulum"}, {"steps", -1}}, "steps"));
  CHECK(rejects(json{{"environment", "pendulum"}, {"steps", 2.5}}, "steps"));
  CHECK(rejects(json{{"environment", "pendulum"}, {"theta", 1.5}}, "theta"));
  CHECK(rejects(json{{"environment", "pendulum"}, {"theta", {0.1, 0.2, 0.3}}}, "theta"));
  CHECK(rejects(json{{"environment", "pendulum"}, {"p_ex", 2}}, "p_ex"));
  CHECK(rejects(json{{"environment", "pendulum"}, {"x0", {1.0}}}, "x0"));
  CHECK(rejects(json{{"environment", "pendulum"}, {"x0", {100.0, 0.0}}}, "x0"));
  CHECK(rejects(json{{"environment", "pendulum"}, {"side_info", "everything"}}, "side_info"));
  CHECK(rejects(json{{"environment", "pendulum"}, {"tiers", {"constraints", "lipschitz"}}}, "tiers"));
  CHECK(rejects(json{{"environment", "pendulum"}, {"on_inconsistent", "ignore"}}, "on_inconsistent"));
  CHECK(rejects(json{{"environment", "pendulum"}, {"side_overrides", {{"bound", -1}}}}, "bound"));
  CHECK(rejects(json{{"environment", "pendulum"}, {"side_overrides", {{"lipschitz_f", {1.0}}}}}, "lipschitz_f"));
  CHECK(rejects(json{{"environment", "pendulum"}, {"trust_region", {{"trust_norm", "two"}}}}, "trust_norm"));
  CHECK_THROWS_AS(parse_config(json{{"environment", "cartpole"}}), ConfigError);
  CHECK_THROWS_AS(load_config(std::string(DDC_TEST_CONFIGS) + "/missing.json"), IoError);
}

TEST_CASE("overrides reach the episode settings") {
  const RunConfig c = parse_config(json{{"environment", "unicycle"},
                                        {"dt", 0.02},
                                        {"horizon", 1},
                                        {"theta", {0.2, 0.4, 0.6}},
                                        {"trust_region", {{"r0", 0.3}, {"max_iters", 5}, {"trust_norm", "one"}}},
                                        {"side_overrides", {{"bound", 50.0}}}});
  const Setup s = resolve(c, SideTier::KnownTerms);
  CHECK(s.env.dt == 0.02);
  CHECK(s.episode.scp.dt == 0.02);
  CHECK(s.episode.scp.horizon == 1);
  CHECK(s.episode.scp.selector.theta == Vec{0.2, 0.4, 0.6});
  CHECK(s.episode.scp.trust.r == 0.3);
  CHECK(s.episode.scp.trust.max_iters == 5);
  CHECK(s.episode.scp.trust.trust_norm == lp::Norm::One);
  CHECK(s.side.bound == 50.0);
  CHECK(s.side.known_terms.has_value());
  CHECK(s.side.constraints.empty());
  CHECK(s.inclusion.tier == SideTier::KnownTerms);
}

TEST_CASE("estimated bounds replace the declared ones") {
  const RunConfig c = parse_config(
      json{{"environment", "pendulum"}, {"side_overrides", {{"estimate", {{"samples", 200}, {"safety", 2.0}}}}}});
  const Setup s = resolve(c, SideTier::Lipschitz);
  const auto& env = harness::environment("pendulum");
  CHECK(s.side.lipschitz_f != env.lipschitz_f);
  const SideInfo est = harness::estimate_lipschitz(env, 200, 2.0, c.seed + 1);
  CHECK(s.side.lipschitz_f == est.lipschitz_f);
  CHECK(s.side.bound == est.bound);
}

TEST_CASE("exit codes are distinct per failure class") {
  CHECK(exit_code(ConfigError("x")) == kUsage);
  CHECK(exit_code(InconsistentData("x", 3)) == kInconsistentData);
  CHECK(exit_code(EnclosureFailure("x")) == kEnclosureFailure);
  CHECK(exit_code(NumericalBreakdown("x")) == kNumericalBreakdown);
  CHECK(exit_code(EmptyEnvelope("x", {})) == kEmptyEnvelope);
  CHECK(exit_code(EmptyAfterContraction("x")) == kEmptyAfterContraction);
  CHECK(exit_code(OracleError("x")) == kOracle);
  CHECK(exit_code(IoError("x")) == kIo);
  CHECK(exit_code(Error("x")) == kLibrary);
  CHECK(exit_code(std::runtime_error("x")) == kInternal);
}

TEST_CASE("run writes reproducible logs") {
  const RunConfig c = small("duffing", 12);
  const std::string a = temp_dir("run_a"), b = temp_dir("run_b");
  const RunOutput r = run_to(c, c.side_info, a, true);
  run_to(c, c.side_info, b, true);
  for (const char* f : {"episode.csv", "summary.json", "dataset.jsonl", "envelopes.json", "tube.json"}) {
    CAPTURE(f);
    CHECK(std::filesystem::exists(a + "/" + f));
    CHECK(slurp(a + "/" + f) == slurp(b + "/" + f));
  }
  CHECK(std::filesystem::exists(a + "/timing.csv"));

  std::istringstream csv(slurp(a + "/episode.csv"));
  std::string header, line;
  std::getline(csv, header);
  CHECK(header ==
        "step,t,x0,x1,u0,stage_cost,J,L,r,bound,width,excited,no_progress,scp_iterations,lp_solves,lp_failures");
  std::size_t rows = 0;
  while (std::getline(csv, line)) ++rows;
  CHECK(rows == 12);

  const Dataset d = io::read_dataset_file(a + "/dataset.jsonl");
  REQUIRE(d.size() == r.data.size());
  for (std::size_t i = 0; i < d.size(); ++i) CHECK(d[i].x == r.data[i].x);

  const json s = json::parse(slurp(a + "/summary.json"));
  CHECK(s["steps"] == 12);
  CHECK(s["total_cost"].get<double>() == doctest::Approx(r.log.total_cost));
  const json env = json::parse(slurp(a + "/envelopes.json"));
  CHECK(env["plain"]["records"].size() == 13);
  CHECK(env.contains("constrained"));
}

TEST_CASE("understated bound is reported with the sample index") {
  json j{{"environment", "pendulum"}, {"side_info", "lipschitz"}, {"steps", 5},
         {"p_ex", 1.0}, {"side_overrides", {{"bound", 0.5}}}};
  const std::string dir = temp_dir("bad");
  try {
    run_to(parse_config(j), SideTier::Lipschitz, dir, true);
    FAIL("expected InconsistentData");
  } catch (const InconsistentData& e) {
    CHECK(exit_code(e) == kInconsistentData);
    CHECK(std::string(e.what()).find("sample " + std::to_string(e.sample())) != std::string::npos);
  }
  j["on_inconsistent"] = "drop";
  const RunOutput r = run_to(parse_config(j), SideTier::Lipschitz, dir, true);
  CHECK(!r.dropped.empty());
}

TEST_CASE("side-information tiers never widen the replayed enclosures") {
  for (const char* name : {"pendulum", "unicycle", "duffing", "double_integrator"}) {
    CAPTURE(name);
    const RunConfig c = small(name, 25);
    const RunOutput r = run_to(c, SideTier::Lipschitz, temp_dir(std::string("abl_") + name), true);
    const Ablation a = replay_widths(c, c.tiers, r.data);
    REQUIRE(a.rows.size() == 3);
    CHECK(a.violations.empty());
    CHECK(a.rows[2].replay_mean_width <= a.rows[1].replay_mean_width);
    CHECK(a.rows[1].replay_mean_width <= a.rows[0].replay_mean_width);
  }
}

TEST_CASE("ablation table is deterministic and degenerates to one row") {
  const std::string cfg = std::string(DDC_TEST_CONFIGS) + "/ablate_single.json";
  const std::string a = temp_dir("abl1_a"), b = temp_dir("abl1_b");
  CHECK(cmd_ablate(cfg, a, std::nullopt, true) == kOk);
  CHECK(cmd_ablate(cfg, b, std::nullopt, true) == kOk);
  const std::string ta = slurp(a + "/ablation.csv");
  CHECK(ta == slurp(b + "/ablation.csv"));
  CHECK(std::count(ta.begin(), ta.end(), '\n') == 2);
}

TEST_CASE("seed flag overrides the config") {
  const std::string dir = temp_dir("seed");
  std::filesystem::create_directories(dir);
  const std::string cfg = dir + "/config.json";
  std::ofstream(cfg) << json{{"environment", "pendulum"}, {"steps", 6}, {"p_ex", 1.0}, {"seed", 5}}.dump();
  CHECK(cmd_run(cfg, dir + "/a", 1, true) == kOk);
  CHECK(cmd_run(cfg, dir + "/b", 1, true) == kOk);
  CHECK(cmd_run(cfg, dir + "/c", std::nullopt, true) == kOk);
  CHECK(slurp(dir + "/a/episode.csv") == slurp(dir + "/b/episode.csv"));
  CHECK(slurp(dir + "/a/episode.csv") != slurp(dir + "/c/episode.csv"));
  CHECK(json::parse(slurp(dir + "/c/summary.json"))["seed"] == 5);
}

}  // TEST_SUITE
