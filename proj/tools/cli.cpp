#include "cli.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include "ddc/battery.hpp"
#include "ddc/error.hpp"
#include "ddc/io.hpp"
#include "ddc/reach.hpp"

namespace ddc::cli {

using nlohmann::json;

int exit_code(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e)) return kUsage;
  if (dynamic_cast<const InconsistentData*>(&e)) return kInconsistentData;
  if (dynamic_cast<const EnclosureFailure*>(&e)) return kEnclosureFailure;
  if (dynamic_cast<const NumericalBreakdown*>(&e)) return kNumericalBreakdown;
  if (dynamic_cast<const EmptyEnvelope*>(&e)) return kEmptyEnvelope;
  if (dynamic_cast<const EmptyAfterContraction*>(&e)) return kEmptyAfterContraction;
  if (dynamic_cast<const MaxSweepsExceeded*>(&e)) return kMaxSweeps;
  if (dynamic_cast<const OracleError*>(&e)) return kOracle;
  if (dynamic_cast<const IoError*>(&e)) return kIo;
  if (dynamic_cast<const Error*>(&e)) return kLibrary;
  return kInternal;
}

std::string to_string(SideTier t) {
  switch (t) {
    case SideTier::Lipschitz: return "lipschitz";
    case SideTier::KnownTerms: return "known_terms";
    case SideTier::Constraints: return "constraints";
  }
  return "?";
}

namespace {

[[noreturn]] void bad(const std::string& key, const std::string& why) {
  throw ConfigError("config: '" + key + "' " + why);
}

SideTier parse_tier(const json& v, const std::string& key) {
  if (!v.is_string()) bad(key, "must be a string");
  const auto s = v.get<std::string>();
  if (s == "lipschitz") return SideTier::Lipschitz;
  if (s == "known_terms") return SideTier::KnownTerms;
  if (s == "constraints") return SideTier::Constraints;
  bad(key, "must be one of lipschitz, known_terms, constraints (got '" + s + "')");
}

lp::Norm parse_norm(const json& v, const std::string& key) {
  if (v == "one") return lp::Norm::One;
  if (v == "inf") return lp::Norm::Inf;
  bad(key, "must be \"one\" or \"inf\"");
}

double number(const json& v, const std::string& key) {
  if (!v.is_number()) bad(key, "must be a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) bad(key, "must be finite");
  return x;
}

double positive(const json& v, const std::string& key) {
  const double x = number(v, key);
  if (!(x > 0)) bad(key, "must be positive");
  return x;
}

std::uint64_t count(const json& v, const std::string& key) {
  if (!v.is_number_integer() || v.get<std::int64_t>() < 0) bad(key, "must be a nonnegative integer");
  return v.get<std::uint64_t>();
}

bool boolean(const json& v, const std::string& key) {
  if (!v.is_boolean()) bad(key, "must be true or false");
  return v.get<bool>();
}

Vec vector(const json& v, const std::string& key) {
  if (!v.is_array() || v.empty()) bad(key, "must be a nonempty array of numbers");
  Vec out;
  for (std::size_t i = 0; i < v.size(); ++i) out.push_back(number(v[i], key + "[" + std::to_string(i) + "]"));
  return out;
}

void only_keys(const json& j, const std::string& where, const std::set<std::string>& allowed) {
  if (!j.is_object()) bad(where.empty() ? "<root>" : where, "must be an object");
  for (const auto& [k, v] : j.items())
    if (!allowed.count(k)) bad(where.empty() ? k : where + "." + k, "is not a known key");
}

std::string fmt(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cli: cannot create output directory " + dir + ": " + ec.message());
}

std::ofstream open_out(const std::string& path) {
  std::ofstream os(path);
  if (!os) throw IoError("cli: cannot open " + path + " for writing");
  return os;
}

void close_out(std::ofstream& os, const std::string& path) {
  os.close();
  if (!os) throw IoError("cli: write to " + path + " failed");
}

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

}  // namespace

RunConfig parse_config(const json& j) {
  only_keys(j, "", {"environment", "side_info", "tiers", "steps", "horizon", "dt", "x0", "theta", "p_ex",
                    "seed", "out", "on_inconsistent", "second_order", "compute_bound", "xdot_rel_pad",
                    "trust_region", "side_overrides"});
  RunConfig c;
  if (!j.contains("environment")) bad("environment", "is required");
  if (!j["environment"].is_string()) bad("environment", "must be a string");
  c.environment = j["environment"].get<std::string>();
  const auto& env = harness::environment(c.environment);

  if (j.contains("side_info")) c.side_info = parse_tier(j["side_info"], "side_info");
  if (j.contains("tiers")) {
    const auto& t = j["tiers"];
    if (!t.is_array() || t.empty()) bad("tiers", "must be a nonempty array");
    c.tiers.clear();
    for (std::size_t i = 0; i < t.size(); ++i) c.tiers.push_back(parse_tier(t[i], "tiers[" + std::to_string(i) + "]"));
    for (std::size_t i = 1; i < c.tiers.size(); ++i)
      if (static_cast<int>(c.tiers[i]) <= static_cast<int>(c.tiers[i - 1]))
        bad("tiers", "must list distinct tiers in increasing order");
  }
  if (j.contains("steps")) c.steps = count(j["steps"], "steps");
  if (j.contains("horizon")) c.horizon = count(j["horizon"], "horizon");
  if (j.contains("dt")) c.dt = positive(j["dt"], "dt");
  if (j.contains("x0")) {
    c.x0 = vector(j["x0"], "x0");
    if (c.x0->size() != env.n) bad("x0", "must have " + std::to_string(env.n) + " entries");
    if (!env.X.contains(*c.x0)) bad("x0", "must lie in the state domain");
  }
  if (j.contains("theta")) {
    c.theta = j["theta"].is_array() ? vector(j["theta"], "theta") : Vec{number(j["theta"], "theta")};
    if (c.theta.size() != 1 && c.theta.size() != env.n)
      bad("theta", "must be a number or an array of " + std::to_string(env.n));
    for (double t : c.theta)
      if (t < 0 || t > 1) bad("theta", "entries must lie in [0, 1]");
  }
  if (j.contains("p_ex")) {
    c.p_ex = number(j["p_ex"], "p_ex");
    if (c.p_ex < 0 || c.p_ex > 1) bad("p_ex", "must lie in [0, 1]");
  }
  if (j.contains("seed")) c.seed = count(j["seed"], "seed");
  if (j.contains("out")) {
    if (!j["out"].is_string() || j["out"].get<std::string>().empty()) bad("out", "must be a nonempty string");
    c.out = j["out"].get<std::string>();
  }
  if (j.contains("on_inconsistent")) {
    const auto& v = j["on_inconsistent"];
    if (v == "fail") c.drop_inconsistent = false;
    else if (v == "drop") c.drop_inconsistent = true;
    else bad("on_inconsistent", "must be \"fail\" or \"drop\"");
  }
  if (j.contains("second_order")) c.second_order = boolean(j["second_order"], "second_order");
  if (j.contains("compute_bound")) c.compute_bound = boolean(j["compute_bound"], "compute_bound");
  if (j.contains("xdot_rel_pad")) {
    c.xdot_rel_pad = number(j["xdot_rel_pad"], "xdot_rel_pad");
    if (c.xdot_rel_pad < 0) bad("xdot_rel_pad", "must be nonnegative");
  }

  if (j.contains("trust_region")) {
    const auto& t = j["trust_region"];
    only_keys(t, "trust_region", {"r0", "r_min", "r_max", "rho_accept", "rho_good", "beta_shrink", "beta_grow",
                                  "lambda", "max_iters", "trust_norm", "penalty_norm"});
    auto num = [&](const char* k, std::optional<double>& dst) {
      if (t.contains(k)) dst = number(t[k], std::string("trust_region.") + k);
    };
    num("r0", c.trust.r0);
    num("r_min", c.trust.r_min);
    num("r_max", c.trust.r_max);
    num("rho_accept", c.trust.rho_accept);
    num("rho_good", c.trust.rho_good);
    num("beta_shrink", c.trust.beta_shrink);
    num("beta_grow", c.trust.beta_grow);
    num("lambda", c.trust.lambda);
    if (t.contains("max_iters")) c.trust.max_iters = static_cast<int>(count(t["max_iters"], "trust_region.max_iters"));
    if (t.contains("trust_norm")) c.trust.trust_norm = parse_norm(t["trust_norm"], "trust_region.trust_norm");
    if (t.contains("penalty_norm")) c.trust.penalty_norm = parse_norm(t["penalty_norm"], "trust_region.penalty_norm");
  }

  if (j.contains("side_overrides")) {
    const auto& s = j["side_overrides"];
    only_keys(s, "side_overrides", {"lipschitz_f", "lipschitz_g", "bound", "estimate"});
    if (s.contains("lipschitz_f")) {
      c.side.lipschitz_f = vector(s["lipschitz_f"], "side_overrides.lipschitz_f");
      if (c.side.lipschitz_f->size() != env.n) bad("side_overrides.lipschitz_f", "must have n entries");
    }
    if (s.contains("lipschitz_g")) {
      const auto& g = s["lipschitz_g"];
      if (!g.is_array() || g.size() != env.d()) bad("side_overrides.lipschitz_g", "must have d rows");
      Matrix L(env.d(), env.n);
      for (std::size_t p = 0; p < env.d(); ++p) {
        const Vec row = vector(g[p], "side_overrides.lipschitz_g[" + std::to_string(p) + "]");
        if (row.size() != env.n) bad("side_overrides.lipschitz_g", "rows must have n entries");
        for (std::size_t k = 0; k < env.n; ++k) L(p, k) = row[k];
      }
      c.side.lipschitz_g = L;
    }
    if (s.contains("bound")) c.side.bound = positive(s["bound"], "side_overrides.bound");
    if (s.contains("estimate")) {
      const auto& e = s["estimate"];
      only_keys(e, "side_overrides.estimate", {"samples", "safety"});
      if (!e.contains("samples")) bad("side_overrides.estimate.samples", "is required");
      c.side.estimate_samples = count(e["samples"], "side_overrides.estimate.samples");
      if (*c.side.estimate_samples < 2) bad("side_overrides.estimate.samples", "must be at least 2");
      if (e.contains("safety")) c.side.estimate_safety = number(e["safety"], "side_overrides.estimate.safety");
      if (c.side.estimate_safety < 1) bad("side_overrides.estimate.safety", "must be at least 1");
    }
  }
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cli: cannot open config " + path);
  json j;
  try {
    j = json::parse(is);
  } catch (const json::parse_error& e) {
    throw ConfigError("config: " + path + " is not valid JSON: " + e.what());
  }
  return parse_config(j);
}

Setup resolve(const RunConfig& cfg, SideTier tier) {
  Setup s;
  s.env = harness::environment(cfg.environment);
  if (cfg.dt) s.env.dt = *cfg.dt;
  if (cfg.horizon) s.env.horizon = *cfg.horizon;
  if (cfg.x0) s.env.x0 = *cfg.x0;

  s.side = s.env.side_info(tier);
  if (cfg.side.estimate_samples) {
    const SideInfo est = harness::estimate_lipschitz(s.env, *cfg.side.estimate_samples, cfg.side.estimate_safety,
                                                     cfg.seed + 1);
    s.side.lipschitz_f = est.lipschitz_f;
    s.side.lipschitz_g = est.lipschitz_g;
    s.side.bound = est.bound;
  }
  if (cfg.side.lipschitz_f) s.side.lipschitz_f = *cfg.side.lipschitz_f;
  if (cfg.side.lipschitz_g) s.side.lipschitz_g = *cfg.side.lipschitz_g;
  if (cfg.side.bound) s.side.bound = *cfg.side.bound;
  s.side.validate();

  s.inclusion.tier = tier;
  if (cfg.drop_inconsistent) s.inclusion.refine.on_inconsistent = OnInconsistent::Drop;

  s.episode = harness::episode_config(s.env, cfg.steps);
  s.episode.p_ex = cfg.p_ex;
  s.episode.seed = cfg.seed;
  s.episode.compute_bound = cfg.compute_bound;
  s.episode.xdot_rel_pad = cfg.xdot_rel_pad;
  s.episode.scp.linearize.second_order = cfg.second_order;
  s.episode.scp.selector = cfg.theta.size() == 1 ? scp::Selector::uniform(s.env.n, cfg.theta[0])
                                                 : scp::Selector{cfg.theta};
  auto& tr = s.episode.scp.trust;
  const auto& o = cfg.trust;
  if (o.r0) tr.r = *o.r0;
  if (o.r_min) tr.r_min = *o.r_min;
  if (o.r_max) tr.r_max = *o.r_max;
  if (o.rho_accept) tr.rho_accept = *o.rho_accept;
  if (o.rho_good) tr.rho_good = *o.rho_good;
  if (o.beta_shrink) tr.beta_shrink = *o.beta_shrink;
  if (o.beta_grow) tr.beta_grow = *o.beta_grow;
  if (o.lambda) tr.lambda = *o.lambda;
  if (o.max_iters) tr.max_iters = *o.max_iters;
  if (o.trust_norm) tr.trust_norm = *o.trust_norm;
  if (o.penalty_norm) tr.penalty_norm = *o.penalty_norm;
  tr.validate();
  return s;
}

void write_episode_csv(std::ostream& os, const scp::EpisodeLog& log, std::size_t n, std::size_t m) {
  os << "step,t";
  for (std::size_t k = 0; k < n; ++k) os << ",x" << k;
  for (std::size_t i = 0; i < m; ++i) os << ",u" << i;
  os << ",stage_cost,J,L,r,bound,width,excited,no_progress,scp_iterations,lp_solves,lp_failures\n";
  for (const auto& s : log.steps) {
    os << s.step << ',' << fmt(s.t);
    for (double v : s.x) os << ',' << fmt(v);
    for (double v : s.u) os << ',' << fmt(v);
    os << ',' << fmt(s.stage_cost) << ',' << fmt(s.J) << ',' << fmt(s.L) << ',' << fmt(s.r) << ','
       << fmt(s.bound) << ',' << fmt(s.width) << ',' << int(s.excited) << ',' << int(s.no_progress) << ','
       << s.scp_iterations << ',' << s.lp_solves << ',' << s.lp_failures << '\n';
  }
}

RunOutput run_to(const RunConfig& cfg, SideTier tier, const std::string& dir, bool quiet) {
  const Setup s = resolve(cfg, tier);
  DiffInclusion di(s.side, s.inclusion);
  RunOutput out;
  out.log = scp::run_episode(s.env.plant(), s.env.x0, di, s.env.cost, s.episode);
  out.data = di.data();
  out.dropped = di.dropped();

  ensure_dir(dir);
  const std::string p = dir + "/";
  {
    auto os = open_out(p + "episode.csv");
    write_episode_csv(os, out.log, s.env.n, s.env.m);
    close_out(os, p + "episode.csv");
  }
  {
    auto os = open_out(p + "timing.csv");
    os << "step,ms\n";
    for (const auto& st : out.log.steps) os << st.step << ',' << fmt(st.ms) << '\n';
    close_out(os, p + "timing.csv");
  }
  io::write_dataset_file(p + "dataset.jsonl", out.data);
  {
    json env{{"plain", io::to_json(di.plain())}};
    if (di.factored()) env["factored"] = io::to_json(*di.factored());
    if (di.constrained()) env["constrained"] = io::to_json(*di.constrained());
    auto os = open_out(p + "envelopes.json");
    os << env.dump(1) << '\n';
    close_out(os, p + "envelopes.json");
  }
  {
    // Reach tube from the final state over the planning horizon, controls free in U.
    json tube{{"x0", out.log.final_x}, {"dt", s.env.dt}, {"horizon", s.env.horizon}};
    try {
      json boxes = json::array();
      for (const auto& B : reach_over_controls(di, IntervalVector::point(out.log.final_x), s.env.U, s.env.dt,
                                               s.env.horizon))
        boxes.push_back(io::to_json(B));
      tube["boxes"] = boxes;
    } catch (const EnclosureFailure& e) {
      tube["error"] = e.what();
    }
    auto os = open_out(p + "tube.json");
    os << tube.dump(1) << '\n';
    close_out(os, p + "tube.json");
  }
  {
    std::size_t excited = 0, stalled = 0, finite = 0;
    double width = 0.0;
    for (const auto& st : out.log.steps) {
      excited += st.excited;
      stalled += st.no_progress;
      if (std::isfinite(st.width)) {
        width += st.width;
        ++finite;
      }
    }
    json base = nullptr;
    try {
      double c0 = 0.0;
      for (double c : harness::zero_control_costs(s.env, s.env.cost, s.env.x0, cfg.steps, s.env.dt)) c0 += c;
      base = finite_or_null(c0);
    } catch (const Error&) {
    }
    json summary{{"environment", s.env.name},
                 {"side_info", to_string(tier)},
                 {"steps", out.log.steps.size()},
                 {"horizon", s.env.horizon},
                 {"dt", s.env.dt},
                 {"theta", s.episode.scp.selector.theta},
                 {"p_ex", cfg.p_ex},
                 {"seed", cfg.seed},
                 {"x0", s.env.x0},
                 {"final_x", out.log.final_x},
                 {"total_cost", out.log.total_cost},
                 {"zero_control_cost", base},
                 {"mean_width", finite ? width / double(finite) : 0.0},
                 {"failed_tubes", out.log.steps.size() - finite},
                 {"excited_steps", excited},
                 {"no_progress_steps", stalled},
                 {"lp_solves", out.log.lp_solves},
                 {"lp_failures", out.log.lp_failures},
                 {"samples", out.data.size()},
                 {"dropped_samples", out.dropped}};
    auto os = open_out(p + "summary.json");
    os << summary.dump(1) << '\n';
    close_out(os, p + "summary.json");
  }
  if (!quiet)
    std::cerr << "run: " << s.env.name << " [" << to_string(tier) << "] " << out.log.steps.size()
              << " steps, total cost " << out.log.total_cost << ", outputs in " << dir << "\n";
  return out;
}

Ablation replay_widths(const RunConfig& cfg, const std::vector<SideTier>& tiers, const Dataset& data) {
  Ablation a;
  for (SideTier tier : tiers) {
    const Setup s = resolve(cfg, tier);
    DiffInclusion di(s.side, s.inclusion);
    AblationRow row;
    row.tier = tier;
    double sum = 0.0;
    for (std::size_t j = 0; j < data.size(); ++j) {
      const auto& p = data[j];
      const double w = norm2(inclusion_eval(di, IntervalVector::point(p.x), IntervalVector::point(p.u)).width());
      row.replay_widths.push_back(w);
      sum += w;
      di.observe(data.timestamps()[j], p);
    }
    row.replay_mean_width = data.empty() ? 0.0 : sum / double(data.size());
    a.rows.push_back(std::move(row));
  }
  for (std::size_t j = 0; j < data.size(); ++j)
    for (std::size_t t = 1; t < a.rows.size(); ++t)
      if (a.rows[t].replay_widths[j] > a.rows[t - 1].replay_widths[j]) {
        a.violations.push_back(j);
        break;
      }
  return a;
}

void write_ablation_csv(std::ostream& os, const Ablation& a) {
  os << "tier,total_cost,mean_width,failed_tubes,replay_mean_width\n";
  for (const auto& r : a.rows)
    os << to_string(r.tier) << ',' << fmt(r.total_cost) << ',' << fmt(r.mean_width) << ',' << r.failed_tubes
       << ',' << fmt(r.replay_mean_width) << '\n';
}

int cmd_run(const std::string& config_path, const std::optional<std::string>& out,
            std::optional<std::uint64_t> seed, bool quiet) {
  RunConfig cfg = load_config(config_path);
  if (seed) cfg.seed = *seed;
  if (out) cfg.out = *out;
  run_to(cfg, cfg.side_info, cfg.out, quiet);
  return kOk;
}

int cmd_verify(const std::string& suite, std::optional<std::uint64_t> seed, bool quiet) {
  const auto ids = battery::suite_criteria(suite);
  if (ids.empty())
    throw ConfigError("verify: unknown suite '" + suite + "' (interval, contraction, reach, scp, theorem3, all)");
  battery::Options opt;
  if (seed) opt.seed = *seed;
  opt.quiet = quiet;
  int failed = 0;
  for (int id : ids) {
    const auto r = battery::run_criterion(id, opt);
    std::cout << battery::format_result(r) << std::endl;
    failed += !r.pass;
  }
  std::cout << "verify " << suite << ": " << (failed ? "FAIL" : "PASS") << std::endl;
  return failed ? kVerifyFailed : kOk;
}

int cmd_ablate(const std::string& config_path, const std::optional<std::string>& out,
               std::optional<std::uint64_t> seed, bool quiet) {
  RunConfig cfg = load_config(config_path);
  if (seed) cfg.seed = *seed;
  if (out) cfg.out = *out;

  std::vector<RunOutput> runs;
  for (SideTier tier : cfg.tiers) runs.push_back(run_to(cfg, tier, cfg.out + "/" + to_string(tier), quiet));

  // Widths are compared on one trajectory: the data of the first tier's run.
  Ablation a = replay_widths(cfg, cfg.tiers, runs.front().data);
  for (std::size_t t = 0; t < runs.size(); ++t) {
    auto& row = a.rows[t];
    row.total_cost = runs[t].log.total_cost;
    double w = 0.0;
    std::size_t finite = 0;
    for (const auto& st : runs[t].log.steps) {
      if (std::isfinite(st.width)) {
        w += st.width;
        ++finite;
      } else {
        ++row.failed_tubes;
      }
    }
    row.mean_width = finite ? w / double(finite) : 0.0;
  }

  std::ostringstream table;
  write_ablation_csv(table, a);
  const std::string path = cfg.out + "/ablation.csv";
  auto os = open_out(path);
  os << table.str();
  close_out(os, path);
  std::cout << table.str();

  if (!a.violations.empty()) {
    std::cerr << "ablate: enclosure width grew with more side information at " << a.violations.size()
              << " replay steps (first " << a.violations.front() << ")\n";
    return kAblationViolated;
  }
  return kOk;
}

}  // namespace ddc::cli
