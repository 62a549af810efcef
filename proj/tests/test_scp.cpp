#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "ddc/error.hpp"
#include "ddc/harness.hpp"
#include "ddc/scp.hpp"

using namespace ddc;
using namespace ddc::scp;

namespace {

// Scalar xdot = f + gamma * u^power with f and gamma pinned by constraints and
// zero Lipschitz bounds, so every enclosure is a point.
SideInfo pinned_scalar(double f, double gamma, int power = 1, Interval U = Interval(-5, 5)) {
  SideInfo s;
  s.n = 1;
  s.m = 1;
  s.lipschitz_f = {0.0};
  s.lipschitz_g = Matrix(1, 1, 0.0);
  s.exponents = {MultiIndex{power}};
  s.weights = {1.0};
  s.bound = 10.0;
  s.X = IntervalVector{Interval(-5, 5)};
  s.U = IntervalVector{U};
  const ConstraintVars cv = s.vars();
  s.constraints = {{"drift", cv.f(0) - f, expr::Relation::Equal},
                   {"gain", cv.g(0, 0) - gamma, expr::Relation::Equal}};
  return s;
}

DiffInclusion make(const SideInfo& s) { return DiffInclusion(s, InclusionOptions{SideTier::Constraints, {}}); }

ScpOptions scalar_options(std::size_t N, double dt, const IntervalVector& U) {
  ScpOptions o;
  o.horizon = N;
  o.dt = dt;
  o.selector = Selector::uniform(1);
  o.trust = TrustRegionState::defaults(U, 1.0);
  return o;
}

}  // namespace

TEST_SUITE("scp") {

TEST_CASE("selector picks the affine point of the box") {
  const IntervalVector R{Interval(1, 3), Interval(-2, 0)};
  CHECK(select_next_state(Selector::uniform(2, 0.0), R) == Vec{1, -2});
  CHECK(select_next_state(Selector::uniform(2, 1.0), R) == Vec{3, 0});
  CHECK(select_next_state(Selector::uniform(2, 0.5), R) == Vec{2, -1});
  CHECK(select_next_state(Selector{{0.25, 0.75}}, R) == Vec{1.5, -0.5});
  CHECK_THROWS_AS(select_next_state(Selector::uniform(2, 1.5), R), ConfigError);
  CHECK_THROWS_AS(select_next_state(Selector::uniform(3), R), DimensionMismatch);
}

TEST_CASE("trust region defaults and validation") {
  const auto t = TrustRegionState::defaults(IntervalVector{Interval(-2, 2), Interval(-1, 1)}, 3.0);
  CHECK(t.r == doctest::Approx(0.5));
  CHECK(t.r_min == doctest::Approx(0.5e-4));
  CHECK(t.r_max == doctest::Approx(4.0));
  CHECK(t.lambda == doctest::Approx(3e3));
  CHECK_NOTHROW(t.validate());
  auto bad = t;
  bad.beta_shrink = 1.5;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = t;
  bad.r = 10.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = t;
  bad.rho_accept = 0.9;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("quadratic cost gradient matches central differences") {
  const IntervalVector X{Interval(-3, 3), Interval(-1, 2)}, U{Interval(-1, 1)};
  const CostModel cm = quadratic_cost({1.0, 0.5}, {0.2}, X, U, {0.5, 0.0});
  const Vec x{0.3, -0.2}, u{0.7}, xn{1.1, 0.4};
  const Vec g = cm.gradient(x, u, xn), fd = numeric_gradient(cm.c, x, u, xn);
  REQUIRE(g.size() == 5);
  for (std::size_t i = 0; i < g.size(); ++i) CHECK(g[i] == doctest::Approx(fd[i]).epsilon(1e-6));
  // Lipschitz constant: sqrt((2*1*3.5)^2 + (2*0.5*2)^2 + (2*0.2*1)^2).
  CHECK(cm.Lc == doctest::Approx(std::sqrt(49.0 + 4.0 + 0.16)));
  CostModel numeric{cm.c, {}, 0.0, 1.0};
  CHECK(numeric.gradient(x, u, xn)[4] == doctest::Approx(0.4).epsilon(1e-6));
}

TEST_CASE("zero Lipschitz bounds and no monomials give A = I") {
  SideInfo s;
  s.n = 2;
  s.m = 1;
  s.lipschitz_f = {0.0, 0.0};
  s.lipschitz_g = Matrix(0, 2);
  s.weights = {1.0, 1.0};
  s.bound = 2.0;
  s.X = IntervalVector{Interval(-5, 5), Interval(-5, 5)};
  s.U = IntervalVector{Interval(-1, 1)};
  const DiffInclusion di(s, InclusionOptions{SideTier::Lipschitz, {}});
  const auto lin = linearize(di, Selector::uniform(2), {0.1, 0.2}, {0.0}, 0.05);
  for (std::size_t k = 0; k < 2; ++k)
    for (std::size_t l = 0; l < 2; ++l) CHECK(lin.A(k, l) == (k == l ? 1.0 : 0.0));
  CHECK(lin.B(0, 0) == 0.0);
  CHECK(lin.B(1, 0) == 0.0);
}

TEST_CASE("point input gain gives B = dt * gamma") {
  const DiffInclusion di = make(pinned_scalar(0.0, 1.7));
  for (bool second : {true, false}) {
    LinearizeOptions o;
    o.second_order = second;
    const auto lin = linearize(di, Selector::uniform(1), {0.4}, {0.3}, 0.1, o);
    CHECK(lin.A(0, 0) == doctest::Approx(1.0));
    CHECK(lin.B(0, 0) == doctest::Approx(0.1 * 1.7));
    CHECK(lin.h0[0] == doctest::Approx(0.4 + 0.1 * 1.7 * 0.3));
  }
}

TEST_CASE("quadratic monomial enters B through its derivative") {
  const DiffInclusion di = make(pinned_scalar(0.0, 0.5, 2));
  const auto lin = linearize(di, Selector::uniform(1), {0.0}, {3.0}, 0.1);
  CHECK(lin.B(0, 0) == doctest::Approx(0.1 * 0.5 * 6.0));
}

TEST_CASE("realized cost") {
  const DiffInclusion di = make(pinned_scalar(0.0, 1.0));
  const IntervalVector X{Interval(-5, 5)}, U{Interval(-5, 5)};
  const CostModel cm = quadratic_cost({1.0}, {0.1}, X, U);
  const Selector sel = Selector::uniform(1);

  SUBCASE("hand evaluation of one stage") {
    // h = 1 + 0.1 * 2 = 1.2; c = 1.5^2 + 0.1 * 4 = 2.65; slack |1.5 - 1.2|.
    ScpIterate t{{1.0}, {{1.5}}, {{2.0}}, {{0.0}}, 0.0, 0.0};
    CHECK(realized_cost(t, cm, di, sel, 10.0, 0.1) == doctest::Approx(2.65 + 10.0 * 0.3));
    CHECK(realized_cost(t, cm, di, sel, 10.0, 0.1, lp::Norm::Inf) == doctest::Approx(5.65));
  }
  SUBCASE("exact trajectory has no slack term") {
    ScpIterate t{{1.0}, {}, {{2.0}, {-1.0}, {0.5}}, {}, 0.0, 0.0};
    Vec x = t.x0;
    double sum = 0.0;
    for (const auto& u : t.us) {
      const Vec xn = next_state(di, sel, x, u, 0.1);
      sum += cm(x, u, xn);
      t.xs.push_back(xn);
      x = xn;
    }
    CHECK(realized_cost(t, cm, di, sel, 1e3, 0.1) == doctest::Approx(sum).epsilon(1e-12));
  }
  SUBCASE("zero penalty ignores the dynamics mismatch") {
    ScpIterate t{{1.0}, {{4.0}, {-3.0}}, {{2.0}, {1.0}}, {}, 0.0, 0.0};
    const double expected = cm({1.0}, {2.0}, {4.0}) + cm({4.0}, {1.0}, {-3.0});
    CHECK(realized_cost(t, cm, di, sel, 0.0, 0.1) == doctest::Approx(expected));
  }
  SUBCASE("mismatched stages") {
    ScpIterate t{{1.0}, {{1.0}}, {{2.0}, {1.0}}, {}, 0.0, 0.0};
    CHECK_THROWS_AS(realized_cost(t, cm, di, sel, 1.0, 0.1), DimensionMismatch);
  }
}

TEST_CASE("integrator with quadratic cost matches discrete LQR") {
  const DiffInclusion di = make(pinned_scalar(0.0, 1.0));
  const IntervalVector X{Interval(-5, 5)}, U{Interval(-5, 5)};
  const CostModel cm = quadratic_cost({1.0}, {0.1}, X, U);
  const double dt = 0.1;
  for (double x0 : {1.0, -0.6, 1.8}) {
    for (std::size_t N : {0u, 1u, 2u}) {
      const auto res = scp_solve({x0}, di, cm, scalar_options(N, dt, U));
      const auto ref = harness::lqr(Matrix(1, 1, 1.0), Matrix(1, 1, dt), Matrix(1, 1, 1.0), Matrix(1, 1, 0.1),
                                    N + 1, {x0});
      for (const auto& u : ref.controls) REQUIRE(U.contains(u));
      CHECK(res.best.stages() == N + 1);
      CHECK(std::fabs(res.best.J - ref.cost) < 1e-4);
      CHECK(res.best.us[0][0] == doctest::Approx(ref.controls[0][0]).epsilon(1e-2));
    }
  }
}

TEST_CASE("single stage horizon is the one-step optimum") {
  const DiffInclusion di = make(pinned_scalar(0.0, 1.0));
  const IntervalVector X{Interval(-5, 5)}, U{Interval(-5, 5)};
  const CostModel cm = quadratic_cost({1.0}, {0.1}, X, U);
  // min (1 + 0.1 u)^2 + 0.1 u^2 at u = -0.1 / 0.11.
  const double u = -0.1 / 0.11;
  const double best = (1 + 0.1 * u) * (1 + 0.1 * u) + 0.1 * u * u;
  const auto res = scp_solve({1.0}, di, cm, scalar_options(0, 0.1, U));
  CHECK(std::fabs(res.best.J - best) < 1e-4);
}

TEST_CASE("linear cost on exactly linear dynamics is accepted at once") {
  const DiffInclusion di = make(pinned_scalar(0.2, 1.0, 1, Interval(-1, 1)));
  const IntervalVector U{Interval(-1, 1)};
  CostModel cm;
  cm.c = [](const Vec&, const Vec& u, const Vec& xn) { return xn[0] + 0.5 * u[0]; };
  cm.grad = [](const Vec&, const Vec&, const Vec&) { return Vec{0.0, 0.5, 1.0}; };
  const auto res = scp_solve({1.0}, di, cm, scalar_options(2, 0.1, U));
  REQUIRE(!res.history.empty());
  CHECK(res.history.front().accepted);
  CHECK(res.history.front().rho == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(std::fabs(res.best.J - res.best.L) <= 1e-8 * (1.0 + std::fabs(res.best.J)));
}

TEST_CASE("cost independent of the controls stops at the initialization") {
  const DiffInclusion di = make(pinned_scalar(0.0, 1.0, 1, Interval(-1, 3)));
  const IntervalVector U{Interval(-1, 3)};
  CostModel cm;
  // Single stage: the cost reads only the fixed initial state.
  cm.c = [](const Vec& x, const Vec&, const Vec&) { return x[0] * x[0]; };
  const auto res = scp_solve({1.0}, di, cm, scalar_options(0, 0.1, U));
  CHECK(res.termination == Termination::Stationary);
  CHECK(res.iterations == 1);
  for (const auto& u : res.best.us) CHECK(u[0] == doctest::Approx(1.0));
}

TEST_CASE("scp_solve rejects bad inputs") {
  const DiffInclusion di = make(pinned_scalar(0.0, 1.0));
  const IntervalVector X{Interval(-5, 5)}, U{Interval(-5, 5)};
  const CostModel cm = quadratic_cost({1.0}, {0.1}, X, U);
  auto o = scalar_options(1, 0.1, U);
  CHECK_THROWS_AS(scp_solve({9.0}, di, cm, o), ConfigError);
  CHECK_THROWS_AS(scp_solve({1.0, 2.0}, di, cm, o), DimensionMismatch);
  o.dt = -0.1;
  CHECK_THROWS_AS(scp_solve({1.0}, di, cm, o), ConfigError);
}

TEST_CASE("pendulum plans respect the trust-region contract") {
  const auto& env = harness::environment("pendulum");
  DiffInclusion di(env.side_info(), InclusionOptions{});
  auto cfg = harness::episode_config(env, 12);
  cfg.compute_bound = false;
  const auto log = run_episode(env.plant(), env.x0, di, env.cost, cfg);
  REQUIRE(log.steps.size() == 12);
  for (const auto& s : log.steps) {
    CHECK(env.U.contains(s.u));
    // Accepted J never increases within a solve.
    for (std::size_t i = 1; i < s.accepted_J.size(); ++i) CHECK(s.accepted_J[i] <= s.accepted_J[i - 1]);
  }
  // Trust region history of one solve from the final state.
  const auto res = scp_solve(log.final_x, di, env.cost, cfg.scp);
  for (std::size_t i = 0; i + 1 < res.history.size(); ++i) {
    const auto& a = res.history[i];
    const auto& b = res.history[i + 1];
    CHECK(b.r <= cfg.scp.trust.r_max);
    if (!a.accepted) CHECK(b.r == doctest::Approx(a.r * cfg.scp.trust.beta_shrink));
  }
  for (const auto& x : res.best.xs) CHECK(env.X.contains(x));
}

TEST_CASE("episodes") {
  const DiffInclusion proto = make(pinned_scalar(0.0, 1.0));
  const IntervalVector X{Interval(-5, 5)}, U{Interval(-5, 5)};
  const CostModel cm = quadratic_cost({1.0}, {0.1}, X, U);
  Plant plant{[](const Vec&, const Vec& u) { return u; },
              [](const Vec& x, const Vec& u, double dt) { return Vec{x[0] + dt * u[0]}; }};
  EpisodeConfig cfg;
  cfg.scp = scalar_options(2, 0.1, U);

  SUBCASE("zero steps give an empty log") {
    DiffInclusion di = proto;
    const auto log = run_episode(plant, {1.0}, di, cm, cfg);
    CHECK(log.steps.empty());
    CHECK(log.final_x == Vec{1.0});
    CHECK(log.total_cost == 0.0);
  }
  SUBCASE("full excitation logs the excitation samples") {
    cfg.steps = 20;
    cfg.p_ex = 1.0;
    cfg.seed = 4;
    DiffInclusion a = proto, b = proto;
    const auto la = run_episode(plant, {1.0}, a, cm, cfg);
    const auto lb = run_episode(plant, {1.0}, b, cm, cfg);
    double spread = 0.0;
    for (std::size_t j = 0; j < la.steps.size(); ++j) {
      CHECK(la.steps[j].excited);
      CHECK(la.steps[j].lp_solves == 0);
      CHECK(U.contains(la.steps[j].u));
      CHECK(la.steps[j].u == lb.steps[j].u);
      spread = std::max(spread, std::fabs(la.steps[j].u[0] - la.steps[0].u[0]));
    }
    CHECK(spread > 1.0);
    CHECK(a.data().size() == 20);
  }
  SUBCASE("controller drives the integrator to the origin") {
    cfg.steps = 40;
    DiffInclusion di = proto;
    const auto log = run_episode(plant, {2.0}, di, cm, cfg);
    CHECK(std::fabs(log.final_x[0]) < 0.05);
    CHECK(log.lp_failures == 0);
    for (const auto& s : log.steps) {
      CHECK(std::isfinite(s.bound));
      CHECK(s.width >= 0.0);
    }
  }
  SUBCASE("invalid excitation probability") {
    cfg.p_ex = 1.5;
    DiffInclusion di = proto;
    CHECK_THROWS_AS(run_episode(plant, {1.0}, di, cm, cfg), ConfigError);
  }
}

}  // TEST_SUITE
