#include "ddc/harness.hpp"

#include <gsl/gsl_errno.h>
#include <gsl/gsl_multimin.h>

#include <Eigen/Dense>
#include <algorithm>
#include <boost/numeric/odeint.hpp>
#include <cmath>
#include <limits>
#include <memory>
#include <random>

namespace ddc::harness {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
// Declared constants carry a small margin over the analytic values.
constexpr double kMargin = 1.01;

using expr::Expr;

Vec zeros(std::size_t n) { return Vec(n, 0.0); }

Environment pendulum() {
  constexpr double g = 9.81, l = 1.0, mass = 1.0, b = 0.05;
  Environment e;
  e.name = "pendulum";
  e.n = 2;
  e.m = 1;
  e.exponents = {MultiIndex{1}};
  e.f = [](const Vec& x) { return Vec{x[1], -(g / l) * std::sin(x[0]) - b * x[1]}; };
  e.g = [](const Vec&) { return std::vector<Vec>{{0.0, 1.0 / (mass * l * l)}}; };
  e.jac_f = [](const Vec& x) {
    Matrix J(2, 2);
    J(0, 1) = 1.0;
    J(1, 0) = -(g / l) * std::cos(x[0]);
    J(1, 1) = -b;
    return J;
  };
  e.jac_g = [](const Vec&) { return std::vector<Matrix>{Matrix(2, 2)}; };
  e.X = IntervalVector{Interval(-6.0, 6.0), Interval(-8.0, 8.0)};
  e.U = IntervalVector{Interval(-2.0, 2.0)};
  e.dt = 0.05;
  e.horizon = 3;
  e.x0 = {2.5, 0.0};
  e.weights = {1.0, 1.0};
  e.lipschitz_f = {kMargin * 1.0, kMargin * std::hypot(g / l, b)};
  e.lipschitz_g = Matrix(1, 2, 0.0);
  e.bound = kMargin * std::max(8.0, g / l + b * 8.0);

  // f = (x2, sin x1) .* (1, -g/l) + (0, x2) .* (., -b); g = (0, 1) .* (., 1/(m l^2)).
  const Expr x1 = expr::var(0), x2 = expr::var(1);
  KnownTermsSpec kt;
  kt.factors.push_back(make_known_factor(-1, {x2, expr::sin(x1)}, {0.0, 0.0}, kMargin * g / l));
  kt.factors.push_back(make_known_factor(-1, {expr::constant(0.0), x2}, {0.0, 0.0}, kMargin * 1.0));
  kt.factors.push_back(make_known_factor(0, {expr::constant(0.0), expr::constant(1.0)}, {0.0, 0.0},
                                         kMargin / (mass * l * l)));
  e.known_terms = kt;

  // Kinematics: xdot_1 = x_2 exactly, the input acts with positive gain on
  // the velocity only.
  const ConstraintVars cv(2, 1, 1);
  e.constraints = {
      {"kinematic f", cv.f(0) - cv.x(1), expr::Relation::Equal},
      {"no input on angle", cv.g(0, 0), expr::Relation::Equal},
      {"positive input gain", cv.g(0, 1), expr::Relation::GreaterEq},
      {"kinematic df1/dx1", cv.jf(0, 0), expr::Relation::Equal},
      {"kinematic df1/dx2", cv.jf(0, 1) - 1.0, expr::Relation::Equal},
  };
  for (std::size_t k = 0; k < 2; ++k)
    for (std::size_t l2 = 0; l2 < 2; ++l2)
      e.constraints.push_back({"constant input gain", cv.jg(0, k, l2), expr::Relation::Equal});

  e.cost = scp::quadratic_cost({1.0, 0.1}, {0.01}, e.X, e.U);
  return e;
}

Environment unicycle() {
  constexpr double drift = 0.1;
  Environment e;
  e.name = "unicycle";
  e.n = 3;
  e.m = 2;
  e.exponents = {MultiIndex{1, 0}, MultiIndex{0, 1}};
  e.f = [](const Vec&) { return Vec{drift, 0.0, 0.0}; };
  e.g = [](const Vec& x) {
    return std::vector<Vec>{{std::cos(x[2]), std::sin(x[2]), 0.0}, {0.0, 0.0, 1.0}};
  };
  e.jac_f = [](const Vec&) { return Matrix(3, 3); };
  e.jac_g = [](const Vec& x) {
    Matrix J(3, 3);
    J(0, 2) = -std::sin(x[2]);
    J(1, 2) = std::cos(x[2]);
    return std::vector<Matrix>{J, Matrix(3, 3)};
  };
  e.X = IntervalVector{Interval(-3.0, 3.0), Interval(-3.0, 3.0), Interval(-4.0, 4.0)};
  e.U = IntervalVector{Interval(-1.0, 1.0), Interval(-2.0, 2.0)};
  e.dt = 0.05;
  e.horizon = 2;
  e.x0 = {1.5, -1.0, 0.5};
  e.weights = {1.0, 1.0, 1.0};
  e.lipschitz_f = {0.0, 0.0, 0.0};
  e.lipschitz_g = Matrix(2, 3, 0.0);
  e.lipschitz_g(0, 0) = kMargin;
  e.lipschitz_g(0, 1) = kMargin;
  e.bound = kMargin * 1.0;

  const Expr th = expr::var(2);
  KnownTermsSpec kt;
  kt.factors.push_back(make_known_factor(
      -1, {expr::constant(1.0), expr::constant(1.0), expr::constant(1.0)}, {0.0, 0.0, 0.0}, kMargin * drift));
  kt.factors.push_back(make_known_factor(0, {expr::cos(th), expr::sin(th), expr::constant(0.0)},
                                         {0.0, 0.0, 0.0}, kMargin));
  kt.factors.push_back(make_known_factor(
      1, {expr::constant(0.0), expr::constant(0.0), expr::constant(1.0)}, {0.0, 0.0, 0.0}, kMargin));
  e.known_terms = kt;

  // The heading input turns only the heading, at unit rate; the speed input
  // moves along a unit direction.
  const ConstraintVars cv(3, 2, 2);
  e.constraints = {
      {"unit direction", expr::pow(cv.g(0, 0), 2) + expr::pow(cv.g(0, 1), 2) - 1.0, expr::Relation::Equal},
      {"speed does not turn", cv.g(0, 2), expr::Relation::Equal},
      {"turn rate x", cv.g(1, 0), expr::Relation::Equal},
      {"turn rate y", cv.g(1, 1), expr::Relation::Equal},
      {"turn rate heading", cv.g(1, 2) - 1.0, expr::Relation::Equal},
  };
  for (std::size_t l = 0; l < 3; ++l)
    e.constraints.push_back({"unit direction gradient",
                             cv.g(0, 0) * cv.jg(0, 0, l) + cv.g(0, 1) * cv.jg(0, 1, l), expr::Relation::Equal});
  for (std::size_t k = 0; k < 3; ++k)
    for (std::size_t l = 0; l < 3; ++l)
      e.constraints.push_back({"constant turn rate", cv.jg(1, k, l), expr::Relation::Equal});

  e.cost = scp::quadratic_cost({1.0, 1.0, 0.1}, {0.01, 0.01}, e.X, e.U);
  return e;
}

Environment duffing() {
  constexpr double delta = 0.2, alpha = 1.0, beta = 0.5, a = 0.2, c2 = 0.3;
  Environment e;
  e.name = "duffing";
  e.n = 2;
  e.m = 1;
  e.exponents = {MultiIndex{1}, MultiIndex{2}};
  e.f = [](const Vec& x) {
    return Vec{x[1], -delta * x[1] - alpha * x[0] - beta * x[0] * x[0] * x[0]};
  };
  e.g = [](const Vec& x) {
    return std::vector<Vec>{{0.0, 1.0 + a * std::cos(x[0])}, {0.0, c2}};
  };
  e.jac_f = [](const Vec& x) {
    Matrix J(2, 2);
    J(0, 1) = 1.0;
    J(1, 0) = -alpha - 3.0 * beta * x[0] * x[0];
    J(1, 1) = -delta;
    return J;
  };
  e.jac_g = [](const Vec& x) {
    Matrix J(2, 2);
    J(1, 0) = -a * std::sin(x[0]);
    return std::vector<Matrix>{J, Matrix(2, 2)};
  };
  const double R = 2.5;
  e.X = IntervalVector{Interval(-R, R), Interval(-R, R)};
  e.U = IntervalVector{Interval(-1.0, 1.0)};
  e.dt = 0.05;
  e.horizon = 2;
  e.x0 = {1.2, 0.0};
  e.weights = {1.0, 1.0};
  e.lipschitz_f = {kMargin * 1.0, kMargin * std::hypot(alpha + 3.0 * beta * R * R, delta)};
  e.lipschitz_g = Matrix(2, 2, 0.0);
  e.lipschitz_g(0, 1) = kMargin * a;
  e.bound = kMargin * std::max({R, delta * R + alpha * R + beta * R * R * R, 1.0 + a});

  const Expr x1 = expr::var(0), x2 = expr::var(1);
  const Expr zero = expr::constant(0.0), one = expr::constant(1.0);
  KnownTermsSpec kt;
  kt.factors.push_back(make_known_factor(-1, {x2, expr::pow(x1, 3)}, {0.0, 0.0}, kMargin * 1.0));
  kt.factors.push_back(make_known_factor(-1, {zero, x1}, {0.0, 0.0}, kMargin * alpha));
  kt.factors.push_back(make_known_factor(-1, {zero, x2}, {0.0, 0.0}, kMargin * delta));
  kt.factors.push_back(make_known_factor(0, {zero, one}, {0.0, kMargin * a}, kMargin * (1.0 + a)));
  kt.factors.push_back(make_known_factor(1, {zero, one}, {0.0, 0.0}, kMargin * c2));
  e.known_terms = kt;

  const ConstraintVars cv(2, 1, 2);
  e.constraints = {
      {"kinematic f", cv.f(0) - cv.x(1), expr::Relation::Equal},
      {"no input on position", cv.g(0, 0), expr::Relation::Equal},
      {"no quadratic input on position", cv.g(1, 0), expr::Relation::Equal},
      {"positive input gain", cv.g(0, 1), expr::Relation::GreaterEq},
      {"kinematic df1/dx1", cv.jf(0, 0), expr::Relation::Equal},
      {"kinematic df1/dx2", cv.jf(0, 1) - 1.0, expr::Relation::Equal},
  };
  for (std::size_t p = 0; p < 2; ++p)
    for (std::size_t l = 0; l < 2; ++l)
      e.constraints.push_back({"input Jacobian on position", cv.jg(p, 0, l), expr::Relation::Equal});

  e.cost = scp::quadratic_cost({1.0, 0.1}, {0.01}, e.X, e.U);
  return e;
}

Environment double_integrator() {
  Environment e;
  e.name = "double_integrator";
  e.n = 2;
  e.m = 1;
  e.exponents = {MultiIndex{1}};
  e.f = [](const Vec& x) { return Vec{x[1], 0.0}; };
  e.g = [](const Vec&) { return std::vector<Vec>{{0.0, 1.0}}; };
  e.jac_f = [](const Vec&) {
    Matrix J(2, 2);
    J(0, 1) = 1.0;
    return J;
  };
  e.jac_g = [](const Vec&) { return std::vector<Matrix>{Matrix(2, 2)}; };
  e.X = IntervalVector{Interval(-5.0, 5.0), Interval(-5.0, 5.0)};
  e.U = IntervalVector{Interval(-5.0, 5.0)};
  e.dt = 0.1;
  e.horizon = 2;
  e.x0 = {1.0, 0.0};
  e.weights = {1.0, 1.0};
  e.lipschitz_f = {kMargin * 1.0, 0.0};
  e.lipschitz_g = Matrix(1, 2, 0.0);
  e.bound = kMargin * 5.0;

  const Expr x2 = expr::var(1);
  KnownTermsSpec kt;
  kt.factors.push_back(make_known_factor(-1, {x2, expr::constant(0.0)}, {0.0, 0.0}, kMargin));
  kt.factors.push_back(make_known_factor(0, {expr::constant(0.0), expr::constant(1.0)}, {0.0, 0.0}, kMargin));
  e.known_terms = kt;

  const ConstraintVars cv(2, 1, 1);
  e.constraints = {
      {"kinematic f", cv.f(0) - cv.x(1), expr::Relation::Equal},
      {"no input on position", cv.g(0, 0), expr::Relation::Equal},
      {"positive input gain", cv.g(0, 1), expr::Relation::GreaterEq},
      {"kinematic df1/dx1", cv.jf(0, 0), expr::Relation::Equal},
      {"kinematic df1/dx2", cv.jf(0, 1) - 1.0, expr::Relation::Equal},
  };

  e.cost = scp::quadratic_cost({1.0, 1.0}, {0.1}, e.X, e.U);
  return e;
}

std::vector<Environment> make_all() { return {pendulum(), unicycle(), duffing(), double_integrator()}; }

double slope_norm(const Vec& a, const Vec& b, const Vec& w) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (w[i] * (a[i] - b[i])) * (w[i] * (a[i] - b[i]));
  return std::sqrt(s);
}

Vec sample_box(const IntervalVector& B, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> U(0.0, 1.0);
  Vec x(B.size());
  for (std::size_t i = 0; i < B.size(); ++i) x[i] = B[i].lo() + U(rng) * B[i].width();
  return x;
}

}  // namespace

scp::EpisodeConfig episode_config(const Environment& env, std::size_t steps) {
  scp::EpisodeConfig cfg;
  cfg.steps = steps;
  cfg.scp.horizon = env.horizon;
  cfg.scp.dt = env.dt;
  cfg.scp.selector = scp::Selector::uniform(env.n);
  cfg.scp.trust = scp::TrustRegionState::defaults(env.U, env.cost.scale);
  return cfg;
}

Vec Environment::xdot(const Vec& x, const Vec& u) const {
  Vec v = f(x);
  const auto G = g(x);
  for (std::size_t p = 0; p < exponents.size(); ++p) {
    const double mono = monomial(u, exponents[p]);
    for (std::size_t k = 0; k < n; ++k) v[k] += G[p][k] * mono;
  }
  return v;
}

SideInfo Environment::side_info(SideTier tier) const {
  SideInfo s;
  s.n = n;
  s.m = m;
  s.lipschitz_f = lipschitz_f;
  s.lipschitz_g = lipschitz_g;
  s.weights = weights;
  s.exponents = exponents;
  s.bound = bound;
  s.X = X;
  s.U = U;
  if (tier >= SideTier::KnownTerms) s.known_terms = known_terms;
  if (tier >= SideTier::Constraints) s.constraints = constraints;
  return s;
}

scp::Plant Environment::plant() const {
  const auto self = std::make_shared<const Environment>(*this);
  scp::Plant p;
  p.xdot = [self](const Vec& x, const Vec& u) { return self->xdot(x, u); };
  p.advance = [self](const Vec& x, const Vec& u, double h) {
    const Vec y = integrate([&](const Vec& z) { return self->xdot(z, u); }, x, h);
    if (!self->X.contains(y)) throw Error("harness: the " + self->name + " plant left its state domain");
    return y;
  };
  return p;
}

const std::vector<Environment>& builtin_environments() {
  static const std::vector<Environment> envs = make_all();
  return envs;
}

const Environment& environment(std::string_view name) {
  for (const auto& e : builtin_environments())
    if (e.name == name) return e;
  throw ConfigError("harness: unknown environment '" + std::string(name) + "'");
}

std::vector<std::string> environment_names() {
  std::vector<std::string> names;
  for (const auto& e : builtin_environments()) names.push_back(e.name);
  return names;
}

SideInfo estimate_lipschitz(const Environment& env, std::size_t n_samples, double safety,
                            std::uint64_t seed) {
  if (n_samples < 2) throw ConfigError("harness: estimate_lipschitz needs at least two samples");
  if (!(safety >= 1.0)) throw ConfigError("harness: safety factor must be >= 1");
  std::mt19937_64 rng(seed);
  std::vector<Vec> xs, fs;
  std::vector<std::vector<Vec>> gs;
  for (std::size_t i = 0; i < n_samples; ++i) {
    xs.push_back(sample_box(env.X, rng));
    fs.push_back(env.f(xs.back()));
    gs.push_back(env.g(xs.back()));
  }
  const std::size_t n = env.n, d = env.d();
  Vec Lf(n, 0.0);
  Matrix Lg(d, n, 0.0);
  double M = 0.0;
  for (std::size_t i = 0; i < n_samples; ++i) {
    for (std::size_t k = 0; k < n; ++k) {
      M = std::max(M, std::fabs(fs[i][k]));
      for (std::size_t p = 0; p < d; ++p) M = std::max(M, std::fabs(gs[i][p][k]));
    }
    for (std::size_t j = i + 1; j < n_samples; ++j) {
      const double dist = slope_norm(xs[i], xs[j], env.weights);
      if (dist == 0.0) continue;
      for (std::size_t k = 0; k < n; ++k) {
        Lf[k] = std::max(Lf[k], std::fabs(fs[i][k] - fs[j][k]) / dist);
        for (std::size_t p = 0; p < d; ++p)
          Lg(p, k) = std::max(Lg(p, k), std::fabs(gs[i][p][k] - gs[j][p][k]) / dist);
      }
    }
  }
  SideInfo s = env.side_info(SideTier::Lipschitz);
  for (std::size_t k = 0; k < n; ++k) {
    s.lipschitz_f[k] = std::max(Lf[k] * safety, 1e-12);
    for (std::size_t p = 0; p < d; ++p) s.lipschitz_g(p, k) = std::max(Lg(p, k) * safety, 1e-12);
  }
  s.bound = std::max(M * safety, 1e-12);
  return s;
}

AuditReport audit(const Environment& env, std::size_t samples, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  AuditReport rep;
  const std::size_t n = env.n, d = env.d();
  const double tol = 1e-12;
  const ConstraintVars cv(n, env.m, d);
  for (std::size_t s = 0; s < samples; ++s) {
    const Vec x = sample_box(env.X, rng);
    // Nearby and far partners exercise both local and global slopes.
    Vec y = sample_box(env.X, rng);
    if (s % 2 == 0)
      for (std::size_t i = 0; i < n; ++i)
        y[i] = std::clamp(x[i] + 1e-3 * (y[i] - env.X[i].mid()), env.X[i].lo(), env.X[i].hi());
    const Vec fx = env.f(x), fy = env.f(y);
    const auto gx = env.g(x), gy = env.g(y);
    const double dist = slope_norm(x, y, env.weights);
    ++rep.pairs;
    for (std::size_t k = 0; k < n; ++k) {
      if (std::fabs(fx[k]) > env.bound * (1 + tol)) ++rep.bound_violations;
      if (std::fabs(fx[k] - fy[k]) > env.lipschitz_f[k] * dist * (1 + tol) + tol) ++rep.lipschitz_violations;
      for (std::size_t p = 0; p < d; ++p) {
        if (std::fabs(gx[p][k]) > env.bound * (1 + tol)) ++rep.bound_violations;
        if (std::fabs(gx[p][k] - gy[p][k]) > env.lipschitz_g(p, k) * dist * (1 + tol) + tol)
          ++rep.lipschitz_violations;
      }
    }
    if (env.constraints.empty()) continue;
    const Vec u = sample_box(env.U, rng);
    const Vec xd = env.xdot(x, u);
    const Matrix Jf = env.jac_f(x);
    const auto Jg = env.jac_g(x);
    std::vector<Interval> vars(cv.count());
    for (std::size_t i = 0; i < n; ++i) {
      vars[i] = Interval(x[i]);
      vars[n + env.m + i] = Interval(xd[i]);
      vars[cv.f_off() + i] = Interval(fx[i]);
      for (std::size_t p = 0; p < d; ++p) vars[cv.g_off() + p * n + i] = Interval(gx[p][i]);
      for (std::size_t l = 0; l < n; ++l) {
        vars[cv.jf_off() + i * n + l] = Interval(Jf(i, l));
        for (std::size_t p = 0; p < d; ++p) vars[cv.jg_off() + (p * n + i) * n + l] = Interval(Jg[p](i, l));
      }
    }
    for (std::size_t l = 0; l < env.m; ++l) vars[n + l] = Interval(u[l]);
    for (const auto& c : env.constraints) {
      const auto v = expr::eval(c.expr, vars);
      if (!v) {
        ++rep.constraint_violations;
        continue;
      }
      const double t = 1e-9;
      bool ok = true;
      if (c.relation == expr::Relation::Equal) ok = v->lo() <= t && v->hi() >= -t;
      if (c.relation == expr::Relation::GreaterEq) ok = v->hi() >= -t;
      if (c.relation == expr::Relation::LessEq) ok = v->lo() <= t;
      rep.constraint_violations += !ok;
    }
  }
  return rep;
}

Vec integrate(const Field& F, const Vec& x0, double T, const OdeOptions& opt) {
  namespace ode = boost::numeric::odeint;
  Vec x = x0;
  if (T == 0.0) return x;
  auto rhs = [&F](const Vec& z, Vec& dz, double) {
    dz = F(z);
    for (double v : dz)
      if (!std::isfinite(v)) throw OracleError("harness: the vector field is not finite");
  };
  auto stepper = ode::make_controlled(opt.abs_tol, opt.rel_tol, ode::runge_kutta_dopri5<Vec>());
  double t = 0.0;
  double h = T / 16.0;
  const double dir = T > 0 ? 1.0 : -1.0;
  int guard = 0;
  while (dir * (T - t) > 0) {
    if (dir * (t + h - T) > 0) h = T - t;
    const ode::controlled_step_result r = stepper.try_step(rhs, x, t, h);
    if (r == ode::fail) {
      if (std::fabs(h) < opt.min_step) throw OracleError("harness: ODE step size underflow");
    }
    if (++guard > 10000000) throw OracleError("harness: ODE integration did not finish");
  }
  for (double v : x)
    if (!std::isfinite(v)) throw OracleError("harness: ODE state is not finite");
  return x;
}

std::vector<Vec> ode_oracle(const Environment& env, const Vec& x0, const std::vector<Vec>& controls,
                            double dt, const OdeOptions& opt) {
  std::vector<Vec> xs{x0};
  for (const Vec& u : controls) {
    if (u.size() != env.m) throw DimensionMismatch("harness: control dimension mismatch");
    xs.push_back(integrate([&env, &u](const Vec& z) { return env.xdot(z, u); }, xs.back(), dt, opt));
  }
  return xs;
}

double rollout_cost(const Environment& env, const scp::CostModel& cm, const Vec& x_j,
                    const std::vector<Vec>& controls, double dt) {
  const auto xs = ode_oracle(env, x_j, controls, dt);
  double c = 0.0;
  for (std::size_t q = 0; q < controls.size(); ++q) c += cm(xs[q], controls[q], xs[q + 1]);
  return c;
}

namespace {

// Fixed-step RK4 used to screen the grid; the polish and the reported cost
// use the adaptive flow.
Vec rk4(const Environment& env, const Vec& x, const Vec& u, double dt, int sub) {
  Vec z = x;
  const double h = dt / sub;
  auto F = [&](const Vec& y) { return env.xdot(y, u); };
  for (int s = 0; s < sub; ++s) {
    const Vec k1 = F(z);
    const Vec k2 = F(z + (0.5 * h) * k1);
    const Vec k3 = F(z + (0.5 * h) * k2);
    const Vec k4 = F(z + h * k3);
    for (std::size_t i = 0; i < z.size(); ++i) z[i] += h / 6.0 * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i]);
  }
  return z;
}

struct NmContext {
  const Environment* env;
  const scp::CostModel* cm;
  const Vec* x_j;
  std::size_t stages;
  double dt;
};

std::vector<Vec> unpack(const gsl_vector* v, const Environment& env, std::size_t stages) {
  std::vector<Vec> us(stages, Vec(env.m));
  for (std::size_t q = 0; q < stages; ++q)
    for (std::size_t l = 0; l < env.m; ++l)
      us[q][l] = std::clamp(gsl_vector_get(v, q * env.m + l), env.U[l].lo(), env.U[l].hi());
  return us;
}

double nm_cost(const gsl_vector* v, void* params) {
  const auto* c = static_cast<const NmContext*>(params);
  try {
    return rollout_cost(*c->env, *c->cm, *c->x_j, unpack(v, *c->env, c->stages), c->dt);
  } catch (const OracleError&) {
    return kInf;
  }
}

}  // namespace

OracleResult optimal_oracle(const Environment& env, const scp::CostModel& cm, const Vec& x_j,
                            std::size_t N, double dt) {
  const std::size_t S = N + 1, m = env.m, D = m * S;
  if (D > 6) throw ConfigError("harness: optimal_oracle supports m (N + 1) <= 6");
  std::size_t P = 41;
  while (P > 2 && std::pow(static_cast<double>(P), static_cast<double>(D)) > 2e5 + 0.5) --P;

  OracleResult res;
  res.points_per_dim = P;
  std::vector<Vec> grid(m);
  for (std::size_t l = 0; l < m; ++l)
    for (std::size_t i = 0; i < P; ++i)
      grid[l].push_back(env.U[l].lo() + env.U[l].width() * static_cast<double>(i) / static_cast<double>(P - 1));
  double spacing = 0.0;
  for (std::size_t l = 0; l < m; ++l) spacing = std::max(spacing, env.U[l].width() / static_cast<double>(P - 1));
  res.grid_spacing = spacing;

  // Depth-first over stages with cached prefix states and costs.
  std::vector<Vec> us(S, Vec(m)), best_us;
  double best = kInf;
  std::function<void(std::size_t, const Vec&, double)> dfs = [&](std::size_t q, const Vec& x, double acc) {
    if (q == S) {
      if (acc < best) {
        best = acc;
        best_us = us;
      }
      return;
    }
    const std::size_t combos = static_cast<std::size_t>(std::pow(static_cast<double>(P), static_cast<double>(m)) + 0.5);
    for (std::size_t c = 0; c < combos; ++c) {
      std::size_t r = c;
      for (std::size_t l = 0; l < m; ++l) {
        us[q][l] = grid[l][r % P];
        r /= P;
      }
      const Vec xn = rk4(env, x, us[q], dt, 8);
      bool finite = true;
      for (double v : xn) finite = finite && std::isfinite(v);
      if (!finite) continue;
      dfs(q + 1, xn, acc + cm(x, us[q], xn));
    }
  };
  dfs(0, x_j, 0.0);
  if (best_us.empty()) throw OracleError("harness: optimal_oracle found no finite rollout");

  // Nelder-Mead polish from the best grid point under the adaptive flow.
  NmContext ctx{&env, &cm, &x_j, S, dt};
  gsl_multimin_function fn{&nm_cost, D, &ctx};
  gsl_vector* x = gsl_vector_alloc(D);
  gsl_vector* step = gsl_vector_alloc(D);
  for (std::size_t q = 0; q < S; ++q)
    for (std::size_t l = 0; l < m; ++l) {
      gsl_vector_set(x, q * m + l, best_us[q][l]);
      gsl_vector_set(step, q * m + l, env.U[l].width() / static_cast<double>(P - 1));
    }
  gsl_multimin_fminimizer* s = gsl_multimin_fminimizer_alloc(gsl_multimin_fminimizer_nmsimplex2, D);
  gsl_multimin_fminimizer_set(s, &fn, x, step);
  for (int it = 0; it < 4000; ++it) {
    if (gsl_multimin_fminimizer_iterate(s) != GSL_SUCCESS) break;
    if (gsl_multimin_test_size(gsl_multimin_fminimizer_size(s), 1e-10) == GSL_SUCCESS) break;
  }
  const std::vector<Vec> polished = unpack(gsl_multimin_fminimizer_x(s), env, S);
  gsl_multimin_fminimizer_free(s);
  gsl_vector_free(x);
  gsl_vector_free(step);

  const double c_grid = rollout_cost(env, cm, x_j, best_us, dt);
  const double c_pol = rollout_cost(env, cm, x_j, polished, dt);
  if (c_pol <= c_grid) {
    res.controls = polished;
    res.cost = c_pol;
  } else {
    res.controls = best_us;
    res.cost = c_grid;
  }
  return res;
}

LqrResult lqr(const Matrix& A, const Matrix& B, const Matrix& Q, const Matrix& R, std::size_t stages,
              const Vec& x0) {
  using Eigen::MatrixXd;
  using Eigen::VectorXd;
  auto to_eigen = [](const Matrix& M) {
    MatrixXd E(M.rows(), M.cols());
    for (std::size_t i = 0; i < M.rows(); ++i)
      for (std::size_t j = 0; j < M.cols(); ++j) E(i, j) = M(i, j);
    return E;
  };
  const MatrixXd a = to_eigen(A), b = to_eigen(B), q = to_eigen(Q), r = to_eigen(R);
  const auto n = a.rows();
  std::vector<MatrixXd> K(stages);
  MatrixXd P = MatrixXd::Zero(n, n);  // value of the remaining stages
  for (std::size_t k = stages; k-- > 0;) {
    const MatrixXd W = q + P;
    const MatrixXd H = r + b.transpose() * W * b;
    K[k] = H.ldlt().solve(b.transpose() * W * a);
    P = a.transpose() * W * a - a.transpose() * W * b * K[k];
  }
  VectorXd x = Eigen::Map<const VectorXd>(x0.data(), static_cast<Eigen::Index>(x0.size()));
  LqrResult res;
  for (std::size_t k = 0; k < stages; ++k) {
    const VectorXd u = -K[k] * x;
    x = a * x + b * u;
    res.cost += x.dot(q * x) + u.dot(r * u);
    res.controls.emplace_back(u.data(), u.data() + u.size());
  }
  return res;
}

std::pair<Matrix, Matrix> double_integrator_zoh(double dt) {
  Matrix A = Matrix::identity(2), B(2, 1);
  A(0, 1) = dt;
  B(0, 0) = 0.5 * dt * dt;
  B(1, 0) = dt;
  return {A, B};
}

double golden_section(const std::function<double(double)>& f, double a, double b, double tol) {
  const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - invphi * (b - a), d = a + invphi * (b - a);
  double fc = f(c), fd = f(d);
  while (b - a > tol) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - invphi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + invphi * (b - a);
      fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

std::vector<double> zero_control_costs(const Environment& env, const scp::CostModel& cm, const Vec& x0,
                                       std::size_t steps, double dt) {
  const std::vector<Vec> controls(steps, zeros(env.m));
  const auto xs = ode_oracle(env, x0, controls, dt);
  std::vector<double> c;
  for (std::size_t q = 0; q < steps; ++q) c.push_back(cm(xs[q], controls[q], xs[q + 1]));
  return c;
}

}  // namespace ddc::harness
