#include "ddc/scp.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <random>

namespace ddc::scp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Vec clamp_to(const Vec& x, const IntervalVector& B) {
  Vec y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = std::clamp(x[i], B[i].lo(), B[i].hi());
  return y;
}

IntervalVector point(const Vec& x) { return IntervalVector::point(x); }

// Stage costs, selected next states and the realized cost in one pass.
struct Realized {
  double J = 0.0;
  Vec cost;               // per stage
  std::vector<Vec> h;     // h^theta(x^q, u^q)
};

Realized evaluate(const ScpIterate& traj, const CostModel& cm, const DiffInclusion& di,
                  const Selector& sel, double lambda, double dt, lp::Norm norm,
                  const ReachOptions& ropt) {
  Realized r;
  const Vec* prev = &traj.x0;
  for (std::size_t q = 0; q < traj.stages(); ++q) {
    const Vec h = next_state(di, sel, *prev, traj.us[q], dt, ropt);
    const double c = cm(*prev, traj.us[q], traj.xs[q]);
    r.cost.push_back(c);
    r.J += c + lambda * vec_norm(traj.xs[q] - h, norm);
    r.h.push_back(h);
    prev = &traj.xs[q];
  }
  return r;
}

// Costs of a rolled-out trajectory, whose slack term is zero.
Realized evaluate_rolled(const ScpIterate& traj, const CostModel& cm) {
  Realized r;
  const Vec* prev = &traj.x0;
  for (std::size_t q = 0; q < traj.stages(); ++q) {
    const double c = cm(*prev, traj.us[q], traj.xs[q]);
    r.cost.push_back(c);
    r.J += c;
    r.h.push_back(traj.xs[q]);
    prev = &traj.xs[q];
  }
  return r;
}

// States of the controls through the selector; the slack term of J vanishes.
void roll_out(ScpIterate& traj, const DiffInclusion& di, const Selector& sel, double dt,
              const ReachOptions& ropt) {
  const Vec* prev = &traj.x0;
  traj.xs.resize(traj.us.size());
  for (std::size_t q = 0; q < traj.stages(); ++q) {
    traj.xs[q] = next_state(di, sel, *prev, traj.us[q], dt, ropt);
    prev = &traj.xs[q];
  }
}

}  // namespace

void Selector::validate(std::size_t n) const {
  if (theta.size() != n) throw DimensionMismatch("scp: selector dimension mismatch");
  for (double t : theta)
    if (!(t >= 0.0 && t <= 1.0)) throw ConfigError("scp: selector theta must lie in [0, 1]");
}

Vec select_next_state(const Selector& sel, const IntervalVector& R_next) {
  sel.validate(R_next.size());
  Vec x(R_next.size());
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double lo = R_next[k].lo(), hi = R_next[k].hi();
    x[k] = std::clamp(sel.theta[k] * hi + (1.0 - sel.theta[k]) * lo, lo, hi);
  }
  return x;
}

Vec numeric_gradient(const CostModel::Fn& c, const Vec& x, const Vec& u, const Vec& xn) {
  Vec z = x;
  z.insert(z.end(), u.begin(), u.end());
  z.insert(z.end(), xn.begin(), xn.end());
  const std::size_t n = x.size(), m = u.size();
  auto call = [&](const Vec& w) {
    const Vec a(w.begin(), w.begin() + static_cast<std::ptrdiff_t>(n));
    const Vec b(w.begin() + static_cast<std::ptrdiff_t>(n), w.begin() + static_cast<std::ptrdiff_t>(n + m));
    const Vec e(w.begin() + static_cast<std::ptrdiff_t>(n + m), w.end());
    return c(a, b, e);
  };
  Vec g(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double h = 1e-6 * (1.0 + std::fabs(z[i]));
    Vec p = z, q = z;
    p[i] += h;
    q[i] -= h;
    g[i] = (call(p) - call(q)) / (p[i] - q[i]);
  }
  return g;
}

Vec CostModel::gradient(const Vec& x, const Vec& u, const Vec& xn) const {
  if (grad) {
    Vec g = grad(x, u, xn);
    if (g.size() != 2 * x.size() + u.size()) throw DimensionMismatch("scp: cost gradient has the wrong length");
    return g;
  }
  return numeric_gradient(c, x, u, xn);
}

CostModel quadratic_cost(const Vec& q, const Vec& r, const IntervalVector& X, const IntervalVector& U,
                         const Vec& ref_in) {
  const std::size_t n = q.size(), m = r.size();
  if (X.size() != n || U.size() != m) throw DimensionMismatch("scp: quadratic cost dimension mismatch");
  const Vec ref = ref_in.empty() ? Vec(n, 0.0) : ref_in;
  if (ref.size() != n) throw DimensionMismatch("scp: quadratic cost reference dimension mismatch");
  CostModel cm;
  cm.c = [q, r, ref](const Vec&, const Vec& u, const Vec& xn) {
    double s = 0.0;
    for (std::size_t i = 0; i < q.size(); ++i) s += q[i] * (xn[i] - ref[i]) * (xn[i] - ref[i]);
    for (std::size_t l = 0; l < r.size(); ++l) s += r[l] * u[l] * u[l];
    return s;
  };
  cm.grad = [q, r, ref](const Vec& x, const Vec& u, const Vec& xn) {
    const std::size_t n = x.size(), m = u.size();
    Vec g(2 * n + m, 0.0);
    for (std::size_t l = 0; l < m; ++l) g[n + l] = 2.0 * r[l] * u[l];
    for (std::size_t i = 0; i < n; ++i) g[n + m + i] = 2.0 * q[i] * (xn[i] - ref[i]);
    return g;
  };
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double a = std::max(std::fabs(X[i].lo() - ref[i]), std::fabs(X[i].hi() - ref[i]));
    s += (2.0 * q[i] * a) * (2.0 * q[i] * a);
  }
  for (std::size_t l = 0; l < m; ++l) {
    const double a = std::max(std::fabs(U[l].lo()), std::fabs(U[l].hi()));
    s += (2.0 * r[l] * a) * (2.0 * r[l] * a);
  }
  cm.Lc = std::sqrt(s);
  return cm;
}

TrustRegionState TrustRegionState::defaults(const IntervalVector& U, double cost_scale) {
  TrustRegionState t;
  double wmin = kInf, wmax = 0.0;
  for (const auto& u : U) {
    wmin = std::min(wmin, u.width());
    wmax = std::max(wmax, u.width());
  }
  if (U.size() == 0) wmin = wmax = 1.0;
  t.r = 0.5 * wmin / 2.0;
  t.r_min = 1e-4 * t.r;
  t.r_max = wmax;
  t.lambda = 1e3 * cost_scale;
  return t;
}

void TrustRegionState::validate() const {
  if (!(beta_shrink > 0 && beta_shrink < 1 && beta_grow > 1))
    throw ConfigError("scp: trust region factors need 0 < shrink < 1 < grow");
  if (!(rho_accept > 0 && rho_accept < rho_good && rho_good < 1))
    throw ConfigError("scp: trust region thresholds need 0 < accept < good < 1");
  if (!(r_min > 0 && r_min <= r && r <= r_max && std::isfinite(r_max)))
    throw ConfigError("scp: trust region radius must satisfy 0 < r_min <= r <= r_max");
  if (!(lambda >= 0) || !std::isfinite(lambda)) throw ConfigError("scp: penalty weight must be finite and >= 0");
  if (max_iters < 0) throw ConfigError("scp: max_iters must be >= 0");
}

double vec_norm(const Vec& v, lp::Norm norm) { return norm == lp::Norm::One ? norm1(v) : norm_inf(v); }

Vec next_state(const DiffInclusion& di, const Selector& sel, const Vec& x, const Vec& u, double dt,
               const ReachOptions& opt) {
  return select_next_state(sel, reach_step(di, point(x), point(u), dt, opt).R_next);
}

namespace {

// Midpoint selections of the A and B enclosures at a point.
Linearization gradients(const DiffInclusion& di, const Vec& x_s, const Vec& u_s, double dt, bool second_order) {
  const SideInfo& side = di.side();
  const std::size_t n = side.n, m = side.m, d = side.d();
  const IntervalVector X = point(x_s), U = point(u_s);
  Linearization lin;
  const JacobianEnclosure J = jacobian_enclosures(di, X, U);
  IntervalMatrix Jsum = J.Jf;
  for (std::size_t p = 0; p < d; ++p)
    Jsum = Jsum + Interval(monomial(u_s, side.exponents[p])) * J.Jg[p];
  const Matrix Jc = Jsum.mid();

  const FieldEnclosure fe = di.field(X, U);
  Matrix B1(n, m);
  for (std::size_t p = 0; p < d; ++p)
    for (std::size_t l = 0; l < m; ++l) {
      const double du = monomial_partial(u_s, side.exponents[p], l);
      if (du == 0.0) continue;
      for (std::size_t k = 0; k < n; ++k) B1(k, l) += dt * fe.G(p, k).mid() * du;
    }

  lin.A = Matrix::identity(n);
  Matrix half = Matrix::identity(n);  // I + Jc dt / 2
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t l = 0; l < n; ++l) lin.A(k, l) += Jc(k, l) * dt;
  if (second_order) {
    const Matrix J2 = Jc * Jc;
    for (std::size_t k = 0; k < n; ++k)
      for (std::size_t l = 0; l < n; ++l) {
        lin.A(k, l) += 0.5 * J2(k, l) * dt * dt;
        half(k, l) += 0.5 * Jc(k, l) * dt;
      }
    lin.B = half * B1;
  } else {
    lin.B = B1;
  }
  return lin;
}

}  // namespace

Linearization linearize(const DiffInclusion& di, const Selector& sel, const Vec& x_s, const Vec& u_s,
                        double dt, const LinearizeOptions& opt) {
  const SideInfo& side = di.side();
  if (x_s.size() != side.n || u_s.size() != side.m) throw DimensionMismatch("scp: linearize dimension mismatch");

  Linearization lin = gradients(di, x_s, u_s, dt, opt.second_order);
  lin.h0 = next_state(di, sel, x_s, u_s, dt, opt.reach);
  return lin;
}

double realized_cost(const ScpIterate& traj, const CostModel& cm, const DiffInclusion& di,
                     const Selector& sel, double lambda, double dt, lp::Norm penalty_norm,
                     const ReachOptions& opt) {
  if (traj.xs.size() != traj.us.size()) throw DimensionMismatch("scp: trajectory has mismatched stages");
  return evaluate(traj, cm, di, sel, lambda, dt, penalty_norm, opt).J;
}

std::string to_string(Termination t) {
  switch (t) {
    case Termination::Converged: return "converged";
    case Termination::Stationary: return "stationary";
    case Termination::RadiusMin: return "radius_min";
    case Termination::MaxIters: return "max_iters";
    case Termination::NoProgress: return "no_progress";
  }
  return "unknown";
}

ScpResult scp_solve(const Vec& x_j, const DiffInclusion& di, const CostModel& cm, const ScpOptions& opt) {
  const SideInfo& side = di.side();
  const std::size_t n = side.n, m = side.m, S = opt.horizon + 1;
  if (x_j.size() != n) throw DimensionMismatch("scp: initial state dimension mismatch");
  if (!(opt.dt > 0) || !std::isfinite(opt.dt)) throw ConfigError("scp: dt must be positive");
  if (!side.X.contains(x_j)) throw ConfigError("scp: initial state outside the state domain");
  opt.selector.validate(n);
  TrustRegionState tr = opt.trust;
  tr.validate();
  const ReachOptions& ropt = opt.linearize.reach;

  // Initialization: constant mid(U), states rolled out through the selector.
  ScpIterate cur;
  cur.x0 = x_j;
  cur.us.assign(S, side.U.mid());
  cur.vs.assign(S, Vec(n, 0.0));
  roll_out(cur, di, opt.selector, opt.dt, ropt);
  Realized rc = evaluate_rolled(cur, cm);
  cur.J = rc.J;
  cur.L = rc.J;

  ScpResult res;
  res.accepted_J.push_back(cur.J);
  bool relinearize = true;
  lp::SubproblemData data;
  data.n = n;
  data.m = m;
  data.stages = S;
  data.X = side.X;
  data.U = side.U;
  data.lambda = tr.lambda;
  data.trust_norm = tr.trust_norm;
  data.penalty_norm = tr.penalty_norm;
  int accepted = 0;
  res.termination = Termination::MaxIters;

  auto stage_state = [&](std::size_t q) -> const Vec& { return q == 0 ? cur.x0 : cur.xs[q - 1]; };

  for (int it = 0; it < tr.max_iters; ++it) {
    ++res.iterations;
    if (relinearize) {
      data.xs.assign(1, cur.x0);
      data.xs.insert(data.xs.end(), cur.xs.begin(), cur.xs.end());
      data.us = cur.us;
      data.A.clear();
      data.B.clear();
      data.grad.clear();
      data.h0 = rc.h;
      data.cost = rc.cost;
      for (std::size_t q = 0; q < S; ++q) {
        const Linearization lin = gradients(di, stage_state(q), cur.us[q], opt.dt, opt.linearize.second_order);
        data.A.push_back(lin.A);
        data.B.push_back(lin.B);
        data.grad.push_back(cm.gradient(stage_state(q), cur.us[q], cur.xs[q]));
      }
      relinearize = false;
    }
    data.radius = tr.r;

    IterationRecord rec;
    rec.r = tr.r;
    lp::LpSolution sol;
    const lp::Subproblem sp = lp::build_subproblem(data);
    ++res.lp_solves;
    try {
      sol = lp::solve(sp.lp);
    } catch (const NumericalBreakdown&) {
      sol.status = lp::Status::Infeasible;
    }
    bool reject = false;
    ScpIterate cand;
    if (sol.status != lp::Status::Optimal) {
      ++res.lp_failures;
      rec.lp_optimal = false;
      reject = true;
    } else {
      rec.L = sol.objective_value;
      const double predicted = cur.J - sol.objective_value;
      if (predicted <= 1e-12 * (1.0 + std::fabs(cur.J))) {
        rec.J_candidate = cur.J;
        rec.rho = 1.0;
        res.history.push_back(rec);
        res.termination = Termination::Stationary;
        break;
      }
      const lp::SubproblemStep st = lp::extract_step(sp, sol.x);
      cand.x0 = cur.x0;
      for (std::size_t q = 0; q < S; ++q) {
        cand.us.push_back(clamp_to(cur.us[q] + st.du[q], side.U));
        cand.vs.push_back(st.v[q]);
      }
      Realized crc;
      try {
        roll_out(cand, di, opt.selector, opt.dt, ropt);
        crc = evaluate_rolled(cand, cm);
      } catch (const EnclosureFailure&) {
        crc.J = kInf;
      }
      rec.J_candidate = crc.J;
      rec.rho = std::isfinite(crc.J) ? (cur.J - crc.J) / predicted : -kInf;
      if (rec.rho >= tr.rho_accept) {
        rec.accepted = true;
        ++accepted;
        const double J_prev = cur.J;
        cand.J = crc.J;
        cand.L = sol.objective_value;
        cur = std::move(cand);
        rc = std::move(crc);
        relinearize = true;
        res.accepted_J.push_back(cur.J);
        if (rec.rho >= tr.rho_good) tr.r = std::min(tr.r * tr.beta_grow, tr.r_max);
        res.history.push_back(rec);
        if (std::fabs(J_prev - cur.J) < 1e-6 * (1.0 + std::fabs(J_prev))) {
          res.termination = Termination::Converged;
          break;
        }
        continue;
      }
      reject = true;
    }
    if (reject) {
      res.history.push_back(rec);
      tr.r *= tr.beta_shrink;
      if (tr.r < tr.r_min) {
        res.termination = accepted == 0 ? Termination::NoProgress : Termination::RadiusMin;
        break;
      }
    }
  }
  res.no_progress = accepted == 0 && (res.termination == Termination::NoProgress ||
                                      res.termination == Termination::MaxIters);
  if (res.no_progress) res.termination = Termination::NoProgress;
  res.r_final = tr.r;
  res.best = std::move(cur);
  return res;
}

EpisodeLog run_episode(const Plant& plant, const Vec& x0, DiffInclusion& di, const CostModel& cm,
                       const EpisodeConfig& cfg) {
  const SideInfo& side = di.side();
  if (x0.size() != side.n) throw DimensionMismatch("scp: episode initial state dimension mismatch");
  if (!(cfg.p_ex >= 0 && cfg.p_ex <= 1)) throw ConfigError("scp: excitation probability must lie in [0, 1]");
  EpisodeLog log;
  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double dt = cfg.scp.dt;
  Vec x = x0;
  for (std::size_t j = 0; j < cfg.steps; ++j) {
    StepRecord rec;
    rec.step = j;
    rec.t = static_cast<double>(j) * dt;
    rec.x = x;
    const auto t0 = std::chrono::steady_clock::now();
    const bool excite = cfg.p_ex > 0 && unit(rng) < cfg.p_ex;
    if (excite) {
      rec.excited = true;
      rec.u.resize(side.m);
      for (std::size_t l = 0; l < side.m; ++l)
        rec.u[l] = side.U[l].lo() + unit(rng) * side.U[l].width();
      rec.J = rec.L = std::numeric_limits<double>::quiet_NaN();
      rec.r = 0.0;
    } else {
      const ScpResult r = scp_solve(x, di, cm, cfg.scp);
      rec.u = r.best.us.front();
      rec.J = r.best.J;
      rec.L = r.best.L;
      rec.r = r.r_final;
      rec.no_progress = r.no_progress;
      rec.scp_iterations = r.iterations;
      rec.lp_solves = r.lp_solves;
      rec.lp_failures = r.lp_failures;
      rec.accepted_J = r.accepted_J;
    }
    const Vec xdot = plant.xdot(x, rec.u);
    Vec pad(xdot.size());
    for (std::size_t k = 0; k < xdot.size(); ++k) pad[k] = cfg.xdot_rel_pad * (1.0 + std::fabs(xdot[k]));
    di.observe(rec.t, DataPoint{x, xdot, rec.u, pad});
    rec.ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();

    if (cfg.compute_bound) {
      try {
        const auto tube = reach_over_controls(di, point(x), side.U, dt, cfg.scp.horizon, cfg.scp.linearize.reach);
        std::vector<Vec> widths;
        for (const auto& R : tube) widths.push_back(R.width());
        rec.bound = suboptimality_bound(widths, cm.Lc);
        rec.width = norm2(widths.front());
      } catch (const EnclosureFailure&) {
        rec.bound = rec.width = kInf;
      }
    }
    const Vec xn = plant.advance(x, rec.u, dt);
    rec.stage_cost = cm(x, rec.u, xn);
    log.total_cost += rec.stage_cost;
    log.lp_solves += rec.lp_solves;
    log.lp_failures += rec.lp_failures;
    log.steps.push_back(std::move(rec));
    x = xn;
  }
  log.final_x = x;
  return log;
}

}  // namespace ddc::scp
