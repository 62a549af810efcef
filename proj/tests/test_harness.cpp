#include <doctest.h>

#include <cmath>
#include <numbers>

#include "ddc/error.hpp"
#include "ddc/harness.hpp"
#include "ddc/io.hpp"

using namespace ddc;
using namespace ddc::harness;

namespace {

// Scalar environment xdot = f(x) + u with the given drift.
Environment scalar_env(std::function<Vec(const Vec&)> f) {
  Environment e;
  e.name = "scalar";
  e.n = 1;
  e.m = 1;
  e.exponents = {MultiIndex{1}};
  e.f = std::move(f);
  e.g = [](const Vec&) { return std::vector<Vec>{{1.0}}; };
  e.X = IntervalVector{Interval(-1, 1)};
  e.U = IntervalVector{Interval(-1, 1)};
  e.weights = {1.0};
  e.lipschitz_f = {1.0};
  e.lipschitz_g = Matrix(1, 1, 0.0);
  e.bound = 10.0;
  e.cost = scp::quadratic_cost({1.0}, {0.1}, e.X, e.U);
  return e;
}

}  // namespace

TEST_SUITE("harness") {

TEST_CASE("registry") {
  const auto names = environment_names();
  REQUIRE(names.size() == 4);
  CHECK(names[0] == "pendulum");
  CHECK(environment("duffing").d() == 2);
  CHECK(environment("unicycle").m == 2);
  CHECK_THROWS_AS(environment("cartpole"), ConfigError);
  for (const auto& e : builtin_environments()) {
    CHECK(e.X.contains(e.x0));
    CHECK_NOTHROW(e.side_info().validate());
    CHECK(e.side_info(SideTier::Lipschitz).constraints.empty());
    CHECK(!e.side_info(SideTier::Lipschitz).known_terms);
  }
}

TEST_CASE("pendulum hanging upside down is an equilibrium") {
  const auto& p = environment("pendulum");
  const Vec v = p.xdot({std::numbers::pi, 0.0}, {0.0});
  CHECK(std::fabs(v[0]) < 1e-15);
  CHECK(std::fabs(v[1]) < 1e-14);
}

TEST_CASE("double integrator step is the closed-form flow") {
  const auto& di = environment("double_integrator");
  const Vec x = di.plant().advance({0.0, 0.0}, {1.0}, 0.1);
  CHECK(x[0] == doctest::Approx(0.005).epsilon(1e-10));
  CHECK(x[1] == doctest::Approx(0.1).epsilon(1e-10));
  const auto traj = ode_oracle(di, {0.0, 0.0}, {{1.0}, {-1.0}}, 0.1);
  REQUIRE(traj.size() == 3);
  CHECK(traj[2][0] == doctest::Approx(0.01).epsilon(1e-10));
  CHECK(std::fabs(traj[2][1]) < 1e-12);
}

TEST_CASE("Duffing without input is the autonomous drift") {
  const auto& d = environment("duffing");
  const Vec x{0.7, -0.3};
  const Vec v = d.xdot(x, {0.0}), f = d.f(x);
  CHECK(v[0] == f[0]);
  CHECK(v[1] == f[1]);
  // x1' = x2, x2' = -0.2 x2 - x1 - 0.5 x1^3.
  CHECK(f[0] == doctest::Approx(-0.3));
  CHECK(f[1] == doctest::Approx(0.06 - 0.7 - 0.5 * 0.343));
}

TEST_CASE("declared side information holds on dense samples") {
  for (const auto& e : builtin_environments()) {
    const auto rep = audit(e, 4000);
    CAPTURE(e.name);
    CHECK(rep.pairs == 4000);
    CHECK(rep.total() == 0);
  }
}

TEST_CASE("audit catches an understated Lipschitz bound") {
  auto e = environment("pendulum");
  e.lipschitz_f = {0.5, 0.5};
  CHECK(audit(e, 500).lipschitz_violations > 0);
}

TEST_CASE("Jacobians agree with finite differences") {
  for (const auto& e : builtin_environments()) {
    const Vec x = e.X.mid();
    Vec y = x;
    for (std::size_t i = 0; i < e.n; ++i) y[i] += 0.1 * static_cast<double>(i + 1);
    const Matrix J = e.jac_f(y);
    const auto Jg = e.jac_g(y);
    for (std::size_t l = 0; l < e.n; ++l) {
      Vec a = y, b = y;
      a[l] += 1e-6;
      b[l] -= 1e-6;
      const Vec fa = e.f(a), fb = e.f(b);
      const auto ga = e.g(a), gb = e.g(b);
      for (std::size_t k = 0; k < e.n; ++k) {
        CAPTURE(e.name);
        CHECK(J(k, l) == doctest::Approx((fa[k] - fb[k]) / 2e-6).epsilon(1e-6));
        for (std::size_t p = 0; p < e.d(); ++p)
          CHECK(Jg[p](k, l) == doctest::Approx((ga[p][k] - gb[p][k]) / 2e-6).epsilon(1e-6));
      }
    }
  }
}

TEST_CASE("Lipschitz estimation") {
  SUBCASE("constant truth is clamped") {
    const auto e = scalar_env([](const Vec&) { return Vec{0.3}; });
    const SideInfo s = estimate_lipschitz(e, 50, 1.0);
    CHECK(s.lipschitz_f[0] == 1e-12);
    CHECK(s.lipschitz_g(0, 0) == 1e-12);
    CHECK(s.bound == doctest::Approx(1.0));
  }
  SUBCASE("linear truth recovers its slope") {
    const auto e = scalar_env([](const Vec& x) { return Vec{2.0 * x[0]}; });
    CHECK(estimate_lipschitz(e, 100, 1.0).lipschitz_f[0] == doctest::Approx(2.0).epsilon(1e-9));
    CHECK(estimate_lipschitz(e, 100, 1.5).lipschitz_f[0] == doctest::Approx(3.0).epsilon(1e-9));
  }
  SUBCASE("safety scales the estimate") {
    const auto& p = environment("pendulum");
    const SideInfo a = estimate_lipschitz(p, 300, 1.0), b = estimate_lipschitz(p, 300, 1.5);
    for (std::size_t k = 0; k < 2; ++k) CHECK(b.lipschitz_f[k] == doctest::Approx(1.5 * a.lipschitz_f[k]));
    CHECK(b.bound == doctest::Approx(1.5 * a.bound));
    // Sampled slopes never exceed the declared bounds.
    CHECK(a.lipschitz_f[1] <= p.lipschitz_f[1]);
  }
  SUBCASE("argument checks") {
    const auto e = scalar_env([](const Vec& x) { return x; });
    CHECK_THROWS_AS(estimate_lipschitz(e, 1, 1.0), ConfigError);
    CHECK_THROWS_AS(estimate_lipschitz(e, 10, 0.5), ConfigError);
  }
}

TEST_CASE("adaptive flow") {
  SUBCASE("linear system matches the matrix exponential") {
    // x' = [[0, 1], [-1, 0]] x is a rotation.
    const Field F = [](const Vec& x) { return Vec{x[1], -x[0]}; };
    const Vec y = integrate(F, {1.0, 0.0}, 2.0);
    CHECK(std::fabs(y[0] - std::cos(2.0)) < 1e-8);
    CHECK(std::fabs(y[1] + std::sin(2.0)) < 1e-8);
    const Vec z = integrate([](const Vec& x) { return Vec{-0.5 * x[0]}; }, {3.0}, 1.5);
    CHECK(std::fabs(z[0] - 3.0 * std::exp(-0.75)) < 1e-8);
  }
  SUBCASE("zero field holds the state") {
    const Vec y = integrate([](const Vec& x) { return Vec(x.size(), 0.0); }, {0.4, -2.0}, 3.0);
    CHECK(y == Vec{0.4, -2.0});
  }
  SUBCASE("time reversal returns to the start") {
    const auto& d = environment("duffing");
    const Field F = [&](const Vec& x) { return d.xdot(x, {0.5}); };
    const Vec x0{1.0, -0.5};
    const Vec back = integrate(F, integrate(F, x0, 1.0), -1.0);
    CHECK(std::fabs(back[0] - x0[0]) < 1e-6);
    CHECK(std::fabs(back[1] - x0[1]) < 1e-6);
  }
  SUBCASE("finite escape is reported") {
    CHECK_THROWS_AS(integrate([](const Vec& x) { return Vec{x[0] * x[0]}; }, {1.0}, 2.0), OracleError);
  }
}

TEST_CASE("optimal control oracle") {
  SUBCASE("input cost alone is minimized by zero input") {
    auto e = scalar_env([](const Vec&) { return Vec{0.0}; });
    scp::CostModel cm;
    cm.c = [](const Vec&, const Vec& u, const Vec&) { return u[0] * u[0]; };
    const auto r = optimal_oracle(e, cm, {0.2}, 1, 0.1);
    CHECK(r.cost < 1e-12);
    for (const auto& u : r.controls) CHECK(std::fabs(u[0]) < 1e-6);
  }
  SUBCASE("double integrator matches discrete LQR") {
    const auto& e = environment("double_integrator");
    const auto [A, B] = double_integrator_zoh(e.dt);
    const Vec x0{0.6, -0.4};
    const auto ref = lqr(A, B, Matrix::identity(2), Matrix(1, 1, 0.1), 3, x0);
    const auto r = optimal_oracle(e, e.cost, x0, 2, e.dt);
    CHECK(r.points_per_dim > 2);
    CHECK(std::fabs(r.cost - ref.cost) < 1e-6);
    for (std::size_t q = 0; q < 3; ++q) CHECK(std::fabs(r.controls[q][0] - ref.controls[q][0]) < 1e-2);
  }
  SUBCASE("one-stage scalar problem matches golden-section search") {
    auto e = scalar_env([](const Vec& x) { return Vec{-x[0] + 0.3 * std::sin(3.0 * x[0])}; });
    auto c = [&](double u) { return rollout_cost(e, e.cost, {0.5}, {{u}}, 0.2); };
    const double u_star = golden_section(c, -1.0, 1.0);
    const auto r = optimal_oracle(e, e.cost, {0.5}, 0, 0.2);
    CHECK(r.cost == doctest::Approx(c(u_star)).epsilon(1e-9));
    CHECK(r.controls[0][0] == doctest::Approx(u_star).epsilon(1e-4));
  }
  SUBCASE("oracle cost never exceeds other control sequences") {
    const auto& p = environment("pendulum");
    const auto r = optimal_oracle(p, p.cost, {1.0, 0.5}, 1, p.dt);
    CHECK(r.cost <= rollout_cost(p, p.cost, {1.0, 0.5}, {{0.0}, {0.0}}, p.dt));
    CHECK(r.cost <= rollout_cost(p, p.cost, {1.0, 0.5}, {{-2.0}, {-2.0}}, p.dt));
  }
  SUBCASE("too many decision variables") {
    const auto& u = environment("unicycle");
    CHECK_THROWS_AS(optimal_oracle(u, u.cost, u.x0, 3, u.dt), ConfigError);
  }
}

TEST_CASE("golden section and LQR helpers") {
  CHECK(golden_section([](double x) { return (x - 0.3) * (x - 0.3); }, -1, 2) == doctest::Approx(0.3).epsilon(1e-8));
  // Scalar one-stage LQR: min (x + u)^2 + u^2 at u = -x/2.
  const auto r = lqr(Matrix(1, 1, 1.0), Matrix(1, 1, 1.0), Matrix(1, 1, 1.0), Matrix(1, 1, 1.0), 1, {2.0});
  CHECK(r.controls[0][0] == doctest::Approx(-1.0));
  CHECK(r.cost == doctest::Approx(2.0));
}

TEST_CASE("zero-control baseline") {
  const auto& p = environment("pendulum");
  const auto c = zero_control_costs(p, p.cost, p.x0, 5, p.dt);
  REQUIRE(c.size() == 5);
  const auto xs = ode_oracle(p, p.x0, std::vector<Vec>(5, Vec{0.0}), p.dt);
  for (std::size_t j = 0; j < 5; ++j) CHECK(c[j] == doctest::Approx(p.cost(xs[j], {0.0}, xs[j + 1])));
}

TEST_CASE("plant refuses to leave the state domain") {
  const auto& d = environment("double_integrator");
  CHECK_THROWS_AS(d.plant().advance({4.99, 4.0}, {5.0}, 0.1), Error);
}

TEST_CASE("fixture trajectories") {
  for (const auto& e : builtin_environments()) {
    CAPTURE(e.name);
    const Dataset d = io::read_dataset_file(std::string(DDC_FIXTURES) + "/" + e.name + ".jsonl");
    REQUIRE(d.size() == 40);
    // Each sample is the true field at its state, and consecutive states follow the flow.
    for (std::size_t i = 0; i < d.size(); ++i) {
      const Vec v = e.xdot(d[i].x, d[i].u);
      for (std::size_t k = 0; k < e.n; ++k) CHECK(std::fabs(v[k] - d[i].xdot[k]) <= d[i].xdot_pad[k]);
      if (i + 1 < d.size()) {
        const Vec next = e.plant().advance(d[i].x, d[i].u, d.timestamps()[i + 1] - d.timestamps()[i]);
        for (std::size_t k = 0; k < e.n; ++k) CHECK(std::fabs(next[k] - d[i + 1].x[k]) < 1e-8);
      }
    }
    // The inclusion built from the fixture encloses the truth along it.
    DiffInclusion di(e.side_info());
    for (std::size_t i = 0; i < d.size(); ++i) di.observe(d.timestamps()[i], d[i]);
    for (std::size_t i = 0; i + 1 < d.size(); ++i) {
      Vec mid(e.n);
      for (std::size_t k = 0; k < e.n; ++k) mid[k] = 0.5 * (d[i].x[k] + d[i + 1].x[k]);
      const auto h = inclusion_eval(di, IntervalVector::point(mid), IntervalVector::point(d[i].u));
      CHECK(h.contains(e.xdot(mid, d[i].u)));
    }
  }
}

}  // TEST_SUITE
