#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <iomanip>
#include <limits>
#include <random>
#include <sstream>

#include "ddc/battery.hpp"
#include "ddc/harness.hpp"
#include "ddc/inclusion.hpp"
#include "ddc/reach.hpp"
#include "ddc/scp.hpp"

namespace ddc::battery {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::size_t scaled(double count, const Options& opt) {
  return static_cast<std::size_t>(std::max(1.0, std::round(count * opt.scale)));
}

CriterionResult start(int id, std::string name, double limit) {
  CriterionResult r;
  r.id = id;
  r.name = std::move(name);
  r.time_limit = limit;
  return r;
}

void finish(CriterionResult& r, Clock::time_point t0, bool ok, const std::ostringstream& os) {
  r.seconds = since(t0);
  r.detail = os.str();
  r.pass = ok && (r.time_limit <= 0.0 || r.seconds < r.time_limit);
}

double ulp(double x) {
  return std::nextafter(std::fabs(x), kInf) - std::fabs(x);
}

Vec sample_box(const IntervalVector& B, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> U(0.0, 1.0);
  Vec x(B.size());
  for (std::size_t i = 0; i < B.size(); ++i) x[i] = B[i].lo() + U(rng) * B[i].width();
  return x;
}

// Sub-box of B shrunk about its center by `frac`.
IntervalVector inner(const IntervalVector& B, double frac) {
  IntervalVector out(B.size());
  for (std::size_t i = 0; i < B.size(); ++i) {
    const double c = B[i].mid(), h = 0.5 * B[i].width() * frac;
    out[i] = Interval(c - h, c + h);
  }
  return out;
}

// Data along a seeded episode, with exploration so the samples spread over X.
Dataset episode_data(const harness::Environment& env, SideTier tier, std::size_t steps, std::uint64_t seed) {
  DiffInclusion di(env.side_info(tier), InclusionOptions{tier, {}});
  auto cfg = harness::episode_config(env, steps);
  cfg.p_ex = 0.3;
  cfg.seed = seed;
  cfg.compute_bound = false;
  scp::run_episode(env.plant(), env.x0, di, env.cost, cfg);
  return di.data();
}

DiffInclusion inclusion_from(const harness::Environment& env, SideTier tier, const Dataset& data,
                             std::size_t count) {
  DiffInclusion di(env.side_info(tier), InclusionOptions{tier, {}});
  for (std::size_t i = 0; i < std::min(count, data.size()); ++i) di.observe(data.timestamps()[i], data[i]);
  return di;
}

double tube_bound(const DiffInclusion& di, const Vec& x, const IntervalVector& U, double dt, std::size_t N,
                  double Lc) {
  try {
    std::vector<Vec> widths;
    for (const auto& R : reach_over_controls(di, IntervalVector::point(x), U, dt, N)) widths.push_back(R.width());
    return suboptimality_bound(widths, Lc);
  } catch (const EnclosureFailure&) {
    return kInf;
  }
}

// Feasible range of sum_p c_p G_p (exact for point coefficients up to rounding).
Interval linear_range(const std::vector<double>& c, const std::vector<Interval>& G, std::size_t skip_a,
                      std::size_t skip_b) {
  Interval s(0.0);
  for (std::size_t p = 0; p < c.size(); ++p)
    if (p != skip_a && p != skip_b) s = s + Interval(c[p]) * G[p];
  return s;
}

}  // namespace

CriterionResult contraction_optimality(const Options& opt) {
  auto r = start(2, "per-sample contraction optimality", 30.0);
  const auto t0 = Clock::now();
  std::mt19937_64 rng(opt.seed + 2);
  std::uniform_real_distribution<double> U01(0.0, 1.0);
  const std::size_t instances = scaled(200, opt);
  const double step = 1e-3;
  std::size_t failures = 0;
  double worst = 0.0;
  for (std::size_t i = 0; i < instances; ++i) {
    const std::size_t d = i % 3;
    SideInfo side;
    side.n = 1;
    side.m = 1;
    side.lipschitz_f = {1.0};
    side.lipschitz_g = Matrix(d, 1, 1.0);
    for (std::size_t p = 0; p < d; ++p) side.exponents.push_back(MultiIndex{static_cast<int>(p + 1)});
    side.weights = {1.0};
    side.bound = 10.0;
    side.X = IntervalVector{Interval(-5, 5)};
    side.U = IntervalVector{Interval(-2, 2)};

    // Domains of f, g_1, g_2 with widths in (0.05, 1].
    std::vector<Interval> V(1 + d);
    for (auto& v : V) {
      const double lo = -1.5 + 2.0 * U01(rng), w = 0.05 + 0.95 * U01(rng);
      v = Interval(lo, lo + w);
    }
    const double u = -2.0 + 4.0 * U01(rng);
    std::vector<double> c(1 + d, 1.0);
    for (std::size_t p = 0; p < d; ++p) c[p + 1] = std::pow(u, static_cast<double>(p + 1));
    // xdot from a point inside the domains, optionally padded.
    double xd = 0.0;
    for (std::size_t t = 0; t <= d; ++t) xd += c[t] * (V[t].lo() + U01(rng) * V[t].width());
    const double pad = (i % 2) ? 0.0 : 0.05 * U01(rng);
    DataPoint dp{{0.0}, {xd}, {u}, {pad}};

    IntervalVector F{V[0]};
    IntervalMatrix G(d, 1);
    for (std::size_t p = 0; p < d; ++p) G(p, 0) = V[p + 1];
    IntervalVector Fc;
    IntervalMatrix Gc;
    try {
      std::tie(Fc, Gc) = contract_datapoint(dp, F, G, side);
    } catch (const InconsistentData&) {
      ++failures;
      continue;
    }
    std::vector<Interval> got{Fc[0]};
    for (std::size_t p = 0; p < d; ++p) got.push_back(Gc(p, 0));

    // Brute force over grid cells of the target variable and (for d = 2) one
    // more, with the remaining variable as an exact linear range. The outer
    // hull joins every cell meeting the constraint; the inner hull joins the
    // grid points that satisfy it.
    const Interval S(xd - pad, xd + pad);
    const double h = 0.5 * step;
    for (std::size_t t = 0; t <= d; ++t) {
      const std::size_t other = d == 2 ? (t + 1) % 3 : 99;
      const Interval rest = linear_range(c, V, t, other);
      double olo = kInf, ohi = -kInf, ilo = kInf, ihi = -kInf;
      const std::size_t nt = static_cast<std::size_t>(std::ceil(V[t].width() / step));
      const std::size_t no = other == 99 ? 0 : static_cast<std::size_t>(std::ceil(V[other].width() / step));
      for (std::size_t a = 0; a <= nt; ++a) {
        const double vt = std::min(V[t].lo() + step * static_cast<double>(a), V[t].hi());
        const Interval cell_t = *intersect(Interval(vt - h, vt + h), V[t]);
        bool outer = false, point = false;
        for (std::size_t b = 0; b <= no && !(outer && point); ++b) {
          Interval cell_sum = Interval(c[t]) * cell_t + rest;
          Interval point_sum = Interval(c[t]) * Interval(vt) + rest;
          if (other != 99) {
            const double vo = std::min(V[other].lo() + step * static_cast<double>(b), V[other].hi());
            cell_sum = cell_sum + Interval(c[other]) * *intersect(Interval(vo - h, vo + h), V[other]);
            point_sum = point_sum + Interval(c[other]) * Interval(vo);
          }
          outer = outer || intersect(cell_sum, S).has_value();
          point = point || intersect(point_sum, S).has_value();
        }
        if (outer) {
          olo = std::min(olo, cell_t.lo());
          ohi = std::max(ohi, cell_t.hi());
        }
        if (point) {
          ilo = std::min(ilo, vt);
          ihi = std::max(ihi, vt);
        }
      }
      const double tol_lo = 2.0 * ulp(got[t].lo()), tol_hi = 2.0 * ulp(got[t].hi());
      // Optimal: nothing outside the outer hull survives.
      bool ok = olo <= ohi && got[t].lo() >= olo - tol_lo && got[t].hi() <= ohi + tol_hi;
      // Sound: every feasible grid point survives.
      if (ilo <= ihi) {
        ok = ok && got[t].lo() <= ilo + tol_lo && got[t].hi() >= ihi - tol_hi;
        worst = std::max({worst, ilo - got[t].lo(), got[t].hi() - ihi});
      }
      failures += !ok;
    }
  }
  std::ostringstream os;
  os << instances << " instances (d <= 2), failures=" << failures << ", max excess over feasible grid points="
     << std::setprecision(3) << worst;
  finish(r, t0, failures == 0, os);
  return r;
}

CriterionResult inclusion_soundness(const Options& opt) {
  auto r = start(3, "inclusion soundness (Lipschitz tier)", 60.0);
  const auto t0 = Clock::now();
  const std::size_t probes = scaled(1000, opt);
  std::size_t violations = 0, total = 0;
  std::ostringstream os;
  for (const auto& env : harness::builtin_environments()) {
    const Dataset data = episode_data(env, SideTier::Lipschitz, 50, opt.seed + 3);
    const DiffInclusion di = inclusion_from(env, SideTier::Lipschitz, data, data.size());
    std::mt19937_64 rng(opt.seed + 30);
    std::size_t bad = 0;
    for (std::size_t i = 0; i < probes; ++i) {
      const Vec x = sample_box(env.X, rng), u = sample_box(env.U, rng);
      const IntervalVector h = inclusion_eval(di, IntervalVector::point(x), IntervalVector::point(u));
      const Vec truth = env.xdot(x, u);
      for (std::size_t k = 0; k < env.n; ++k) bad += !h[k].contains(truth[k]);
      ++total;
    }
    violations += bad;
    os << env.name << ':' << bad << ' ';
  }
  os << "violations=" << violations << " over " << total << " probes";
  finish(r, t0, violations == 0, os);
  return r;
}

CriterionResult reach_containment(const Options& opt) {
  auto r = start(4, "reach step containment", 120.0);
  const auto t0 = Clock::now();
  const std::size_t steps = scaled(1000, opt);
  // Endpoints are accurate to the oracle tolerance; an endpoint counts as
  // outside once it clears the box by more than that.
  const harness::OdeOptions oracle;
  std::size_t violations = 0, failures = 0, total = 0, raw_outside = 0;
  double max_excess = 0.0;
  std::ostringstream os;
  for (const auto& env : harness::builtin_environments()) {
    const Dataset data = episode_data(env, SideTier::Constraints, 50, opt.seed + 4);
    std::vector<DiffInclusion> tiers;
    for (SideTier t : {SideTier::Lipschitz, SideTier::KnownTerms, SideTier::Constraints})
      tiers.push_back(inclusion_from(env, t, data, data.size()));
    std::mt19937_64 rng(opt.seed + 40);
    std::uniform_real_distribution<double> U01(0.0, 1.0);
    const IntervalVector centers = inner(env.X, 0.5);
    std::size_t bad = 0;
    for (std::size_t i = 0; i < steps; ++i) {
      const DiffInclusion& di = tiers[i % 3];
      const Vec c = sample_box(centers, rng);
      IntervalVector R(env.n);
      const double rad = (i % 4 == 0) ? 0.0 : 0.05 * U01(rng);
      for (std::size_t k = 0; k < env.n; ++k) R[k] = Interval(c[k] - rad * U01(rng), c[k] + rad * U01(rng));
      const Vec u = sample_box(env.U, rng);
      const double dt = 0.05 * (0.1 + 0.9 * U01(rng));
      ReachStep step;
      try {
        step = reach_step(di, R, IntervalVector::point(u), dt);
      } catch (const EnclosureFailure&) {
        ++failures;
        continue;
      }
      ++total;
      // Corners and random interior points of R through the true flow.
      std::vector<Vec> starts;
      for (std::size_t mask = 0; mask < (std::size_t{1} << env.n); ++mask) {
        Vec x(env.n);
        for (std::size_t k = 0; k < env.n; ++k) x[k] = (mask >> k) & 1 ? R[k].hi() : R[k].lo();
        starts.push_back(x);
      }
      for (int s = 0; s < 4; ++s) starts.push_back(sample_box(R, rng));
      for (const auto& x : starts) {
        const Vec xn = harness::ode_oracle(env, x, {u}, dt, oracle).back();
        bool outside = false, raw = false;
        for (std::size_t k = 0; k < env.n; ++k) {
          const double excess = std::max(step.R_next[k].lo() - xn[k], xn[k] - step.R_next[k].hi());
          if (excess <= 0.0) continue;
          raw = true;
          max_excess = std::max(max_excess, excess);
          outside = outside || excess > oracle.abs_tol * (1.0 + std::fabs(xn[k]));
        }
        bad += outside;
        raw_outside += raw;
      }
    }
    violations += bad;
    os << env.name << ':' << bad << ' ';
  }
  os << "violations=" << violations << " over " << total << " steps, enclosure failures=" << failures
     << ", endpoints within oracle tolerance of a face=" << raw_outside << " (max " << std::setprecision(2)
     << max_excess << ')';
  finish(r, t0, violations == 0, os);
  return r;
}

CriterionResult monotonicity(const Options& opt) {
  auto r = start(5, "enclosure width monotonicity", 0.0);
  const auto t0 = Clock::now();
  const std::size_t probes = scaled(100, opt);
  std::size_t data_viol = 0, tier_viol = 0;
  std::ostringstream os;
  for (const auto& env : harness::builtin_environments()) {
    const Dataset data = episode_data(env, SideTier::Constraints, 50, opt.seed + 5);
    std::mt19937_64 rng(opt.seed + 50);
    std::uniform_real_distribution<double> U01(0.0, 1.0);
    std::vector<std::pair<IntervalVector, IntervalVector>> set;
    for (std::size_t i = 0; i < probes; ++i) {
      const Vec c = sample_box(inner(env.X, 0.8), rng), u = sample_box(env.U, rng);
      IntervalVector A(env.n);
      const double rad = (i % 2) ? 0.0 : 0.1 * U01(rng);
      for (std::size_t k = 0; k < env.n; ++k) A[k] = Interval(c[k] - rad, c[k] + rad);
      set.emplace_back(A, IntervalVector::point(u));
    }
    std::vector<DiffInclusion> tiers;
    for (SideTier t : {SideTier::Lipschitz, SideTier::KnownTerms, SideTier::Constraints})
      tiers.emplace_back(env.side_info(t), InclusionOptions{t, {}});
    std::vector<std::vector<Vec>> prev(3, std::vector<Vec>(probes, Vec(env.n, kInf)));
    for (std::size_t k = 0; k < data.size(); ++k) {
      for (auto& di : tiers) di.observe(data.timestamps()[k], data[k]);
      for (std::size_t i = 0; i < probes; ++i) {
        std::vector<Vec> w;
        for (const auto& di : tiers) w.push_back(inclusion_eval(di, set[i].first, set[i].second).width());
        for (std::size_t t = 0; t < 3; ++t)
          for (std::size_t c = 0; c < env.n; ++c) {
            data_viol += w[t][c] > prev[t][i][c];
            if (t > 0) tier_viol += w[t][c] > w[t - 1][c];
          }
        for (std::size_t t = 0; t < 3; ++t) prev[t][i] = w[t];
      }
    }
  }
  os << probes << " probes x 4 environments x 50 prefixes: data violations=" << data_viol
     << ", tier violations=" << tier_viol;
  finish(r, t0, data_viol == 0 && tier_viol == 0, os);
  return r;
}

namespace {

// The double integrator with f and g pinned exactly by side constraints, so
// every enclosure is a point up to rounding.
SideInfo exact_double_integrator(const harness::Environment& env) {
  SideInfo side = env.side_info(SideTier::Constraints);
  const ConstraintVars cv = side.vars();
  side.constraints.push_back({"no drift on velocity", cv.f(1), expr::Relation::Equal});
  side.constraints.push_back({"unit input gain", cv.g(0, 1) - 1.0, expr::Relation::Equal});
  side.constraints.push_back({"df2/dx1", cv.jf(1, 0), expr::Relation::Equal});
  side.constraints.push_back({"df2/dx2", cv.jf(1, 1), expr::Relation::Equal});
  for (std::size_t k = 0; k < 2; ++k)
    for (std::size_t l = 0; l < 2; ++l)
      side.constraints.push_back({"constant input gain", cv.jg(0, k, l), expr::Relation::Equal});
  return side;
}

}  // namespace

CriterionResult scp_vs_oracle(const Options& opt) {
  auto r = start(6, "SCP vs discrete LQR (double integrator)", 60.0);
  const auto t0 = Clock::now();
  const auto& env = harness::environment("double_integrator");
  const DiffInclusion di(exact_double_integrator(env), InclusionOptions{SideTier::Constraints, {}});
  const auto [A, B] = harness::double_integrator_zoh(env.dt);
  const Matrix Q = Matrix::identity(2), R(1, 1, 0.1);
  const auto cfg = harness::episode_config(env, 0);
  std::mt19937_64 rng(opt.seed + 6);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  const std::size_t trials = scaled(20, opt);
  double worst = 0.0;
  std::size_t failures = 0, saturated = 0;
  for (std::size_t t = 0; t < trials; ++t) {
    const Vec x{U(rng), U(rng)};
    const auto l = harness::lqr(A, B, Q, R, cfg.scp.horizon + 1, x);
    for (const auto& u : l.controls) saturated += !env.U[0].contains(u[0]);
    const auto s = scp::scp_solve(x, di, env.cost, cfg.scp);
    const double gap = std::fabs(s.best.J - l.cost);
    worst = std::max(worst, gap);
    failures += gap > 1e-4;
  }
  std::ostringstream os;
  os << trials << " initial states: max |J - J_lqr|=" << std::scientific << std::setprecision(2) << worst
     << " (tol 1e-4), LQR controls outside U=" << saturated;
  finish(r, t0, failures == 0 && saturated == 0, os);
  return r;
}

CriterionResult suboptimality(const Options& opt) {
  auto r = start(7, "suboptimality bound", 300.0);
  const auto t0 = Clock::now();
  const std::size_t trials = scaled(100, opt);
  std::size_t held = 0, total = 0, mono_viol = 0;
  double min_margin = kInf;
  const std::vector<std::string> names{"pendulum", "duffing"};
  for (std::size_t e = 0; e < names.size(); ++e) {
    const auto& env = harness::environment(names[e]);
    const Dataset data = episode_data(env, SideTier::Constraints, 50, opt.seed + 7);
    // States visited by the data-collecting run; x^k is the state after k samples.
    std::vector<Vec> states;
    for (std::size_t k = 0; k < data.size(); ++k) states.push_back(data[k].x);
    for (std::size_t N = 1; N <= 3; ++N) {
      // Bound at one fixed state while the data grows from 5 to 50 points.
      const Vec x_fixed = states[data.size() / 2];
      double prev = kInf;
      DiffInclusion grow(env.side_info(SideTier::Constraints), InclusionOptions{SideTier::Constraints, {}});
      for (std::size_t k = 0; k < data.size(); ++k) {
        grow.observe(data.timestamps()[k], data[k]);
        if (k + 1 < 5) continue;
        const double b = tube_bound(grow, x_fixed, env.U, env.dt, N, env.cost.Lc);
        mono_viol += b > prev;
        prev = b;
      }
      // Gap trials spread over the data size.
      const std::size_t per = (trials + 5) / 6;
      for (std::size_t t = 0; t < per && total < trials; ++t) {
        const std::size_t k = 5 + (t * 13 + N * 7) % 45;
        const DiffInclusion di = inclusion_from(env, SideTier::Constraints, data, k);
        const Vec& x = states[k];
        auto cfg = harness::episode_config(env, 0);
        cfg.scp.horizon = N;
        const auto s = scp::scp_solve(x, di, env.cost, cfg.scp);
        const auto best = harness::optimal_oracle(env, env.cost, x, N, env.dt);
        const double bound = tube_bound(di, x, env.U, env.dt, N, env.cost.Lc);
        const double gap = std::fabs(best.cost - s.best.J);
        ++total;
        held += gap <= bound;
        min_margin = std::min(min_margin, bound - gap);
      }
    }
  }
  std::ostringstream os;
  os << "bound held " << held << '/' << total << " (pendulum, duffing; N=1..3), min margin="
     << std::setprecision(3) << min_margin << ", bound increases over data 5->50: " << mono_viol;
  finish(r, t0, held == total && mono_viol == 0, os);
  return r;
}

CriterionResult end_to_end(const Options& opt) {
  auto r = start(8, "end-to-end pendulum episode", 0.0);
  const auto t0 = Clock::now();
  const auto& env = harness::environment("pendulum");
  const std::size_t steps = 200;
  DiffInclusion di(env.side_info(SideTier::Constraints), InclusionOptions{SideTier::Constraints, {}});
  auto cfg = harness::episode_config(env, steps);
  cfg.seed = opt.seed;
  const auto log = scp::run_episode(env.plant(), env.x0, di, env.cost, cfg);
  const auto base = harness::zero_control_costs(env, env.cost, env.x0, steps, env.dt);
  double ctrl = 0.0, zero = 0.0;
  for (std::size_t j = steps * 3 / 4; j < steps; ++j) {
    ctrl += log.steps[j].stage_cost;
    zero += base[j];
  }
  const double q = static_cast<double>(steps - steps * 3 / 4);
  std::vector<double> ms;
  for (const auto& s : log.steps) ms.push_back(s.ms);
  std::sort(ms.begin(), ms.end());
  const double median = ms[ms.size() / 2];
  const double ratio = ctrl / zero;
  std::ostringstream os;
  os << std::setprecision(4) << "final-quarter mean cost " << ctrl / q << " vs zero-control " << zero / q
     << " (ratio " << ratio << ", need <= 0.5), median step " << median << " ms (need < 100), lp failures "
     << log.lp_failures << '/' << log.lp_solves;
  finish(r, t0, ratio <= 0.5 && median < 100.0, os);
  return r;
}

CriterionResult lp_correctness(const Options& opt) {
  auto r = start(9, "LP correctness", 0.0);
  const auto t0 = Clock::now();
  std::mt19937_64 rng(opt.seed + 9);
  const std::size_t count = scaled(1000, opt);
  std::size_t mismatches = 0, feasible = 0;
  for (std::size_t i = 0; i < count; ++i) {
    const auto p = random_lp(rng);
    const auto ref = vertex_enumeration(p);
    const auto s = lp::solve(p);
    if (!ref) {
      mismatches += s.status != lp::Status::Infeasible;
      continue;
    }
    ++feasible;
    mismatches += s.status != lp::Status::Optimal || std::fabs(s.objective_value - *ref) > 1e-7;
  }
  // Subproblems across episodes of every environment and tier.
  std::size_t solves = 0, failed = 0;
  const std::size_t steps = scaled(30, opt);
  for (const auto& env : harness::builtin_environments())
    for (SideTier t : {SideTier::Lipschitz, SideTier::KnownTerms, SideTier::Constraints}) {
      DiffInclusion di(env.side_info(t), InclusionOptions{t, {}});
      auto cfg = harness::episode_config(env, steps);
      cfg.compute_bound = false;
      const auto log = scp::run_episode(env.plant(), env.x0, di, env.cost, cfg);
      solves += log.lp_solves;
      failed += log.lp_failures;
    }
  std::ostringstream os;
  os << count << " random LPs (" << feasible << " feasible): mismatches=" << mismatches << "; episode subproblems "
     << solves << ", not optimal=" << failed;
  finish(r, t0, mismatches == 0 && failed == 0, os);
  return r;
}

std::vector<int> suite_criteria(std::string_view suite) {
  if (suite == "interval") return {1};
  if (suite == "contraction") return {2, 3, 5};
  if (suite == "reach") return {4};
  if (suite == "scp") return {6, 8, 9};
  if (suite == "theorem3") return {7};
  if (suite == "all") return {1, 2, 3, 4, 5, 6, 7, 8, 9};
  return {};
}

CriterionResult run_criterion(int id, const Options& opt) {
  switch (id) {
    case 1: return interval_soundness(opt);
    case 2: return contraction_optimality(opt);
    case 3: return inclusion_soundness(opt);
    case 4: return reach_containment(opt);
    case 5: return monotonicity(opt);
    case 6: return scp_vs_oracle(opt);
    case 7: return suboptimality(opt);
    case 8: return end_to_end(opt);
    case 9: return lp_correctness(opt);
    default: throw ConfigError("battery: unknown criterion " + std::to_string(id));
  }
}

std::string format_result(const CriterionResult& r) {
  std::ostringstream os;
  os << (r.pass ? "PASS" : "FAIL") << " [" << r.id << "] " << r.name << ": " << r.detail << " ("
     << std::fixed << std::setprecision(2) << r.seconds << " s";
  if (r.time_limit > 0.0) os << ", limit " << r.time_limit << " s";
  os << ')';
  return os.str();
}

}  // namespace ddc::battery
