#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "ddc/battery.hpp"
#include "ddc/error.hpp"
#include "ddc/lp.hpp"

using namespace ddc;
using namespace ddc::lp;

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

TEST_SUITE("lp") {

TEST_CASE("bounded single variable") {
  LinearProgram p;
  p.add_var(1.0, 1.0, 2.0);
  const auto s = solve(p);
  REQUIRE(s.status == Status::Optimal);
  CHECK(s.x[0] == doctest::Approx(1.0));
  CHECK(s.objective_value == doctest::Approx(1.0));

  LinearProgram q;
  q.add_var(1.0, -kInf, kInf);
  q.add_row({1.0}, Relation::GreaterEq, 1.0);
  q.add_row({1.0}, Relation::LessEq, 2.0);
  const auto t = solve(q);
  REQUIRE(t.status == Status::Optimal);
  CHECK(t.x[0] == doctest::Approx(1.0));
}

TEST_CASE("simplex edge optimum") {
  LinearProgram p;
  p.add_var(-1.0, 0.0, kInf);
  p.add_var(-1.0, 0.0, kInf);
  p.add_row({1.0, 1.0}, Relation::LessEq, 1.0);
  const auto s = solve(p);
  REQUIRE(s.status == Status::Optimal);
  CHECK(s.objective_value == doctest::Approx(-1.0));
  CHECK(s.x[0] + s.x[1] == doctest::Approx(1.0));
  // Vertex enumeration agrees (with a box that does not bind).
  LinearProgram b = p;
  b.upper = {5.0, 5.0};
  CHECK(*battery::vertex_enumeration(b) == doctest::Approx(-1.0));
}

TEST_CASE("contradictory bounds and rows are infeasible") {
  LinearProgram p;
  p.add_var(0.0, -kInf, kInf);
  p.add_row({1.0}, Relation::LessEq, 0.0);
  p.add_row({1.0}, Relation::GreaterEq, 1.0);
  CHECK(solve(p).status == Status::Infeasible);
  LinearProgram q;
  q.add_var(0.0, 1.0, 0.0);
  CHECK(solve(q).status == Status::Infeasible);
}

TEST_CASE("unbounded direction is detected") {
  LinearProgram p;
  p.add_var(-1.0, 0.0, kInf);
  p.add_var(0.0, 0.0, kInf);
  p.add_row({1.0, -1.0}, Relation::LessEq, 1.0);
  CHECK(solve(p).status == Status::Unbounded);
}

TEST_CASE("equality rows and free variables") {
  // min x + 2y s.t. x + y = 3, x - y >= -1, free vars with y <= 5.
  LinearProgram p;
  p.add_var(1.0, -kInf, kInf);
  p.add_var(2.0, -kInf, 5.0);
  p.add_row({1.0, 1.0}, Relation::Equal, 3.0);
  p.add_row({1.0, -1.0}, Relation::GreaterEq, -1.0);
  const auto s = solve(p);
  // Objective x + 2(3 - x) = 6 - x is minimized at the largest x: y >= ... x unbounded above?
  // x - y >= -1 holds for all large x, so the problem is unbounded below.
  CHECK(s.status == Status::Unbounded);
  p.add_row({1.0, 0.0}, Relation::LessEq, 10.0);
  const auto t = solve(p);
  REQUIRE(t.status == Status::Optimal);
  CHECK(t.x[0] == doctest::Approx(10.0));
  CHECK(t.x[1] == doctest::Approx(-7.0));
}

TEST_CASE("degenerate cycling example terminates") {
  // Beale's classic cycling instance.
  LinearProgram p;
  for (double c : {-0.75, 150.0, -0.02, 6.0}) p.add_var(c, 0.0, kInf);
  p.add_row({0.25, -60.0, -0.04, 9.0}, Relation::LessEq, 0.0);
  p.add_row({0.5, -90.0, -0.02, 3.0}, Relation::LessEq, 0.0);
  p.add_row({0.0, 0.0, 1.0, 0.0}, Relation::LessEq, 1.0);
  const auto s = solve(p);
  REQUIRE(s.status == Status::Optimal);
  CHECK(s.objective_value == doctest::Approx(-0.05));
}

TEST_CASE("random programs agree with vertex enumeration") {
  std::mt19937_64 rng(2024);
  int mismatches = 0, feasible = 0;
  for (int i = 0; i < 300; ++i) {
    const LinearProgram p = battery::random_lp(rng, 4, 6);
    const auto ref = battery::vertex_enumeration(p);
    const auto s = solve(p);
    if (!ref) {
      mismatches += s.status != Status::Infeasible;
      continue;
    }
    ++feasible;
    if (s.status != Status::Optimal || std::fabs(s.objective_value - *ref) > 1e-7) ++mismatches;
  }
  CHECK(mismatches == 0);
  CHECK(feasible > 100);
}

TEST_CASE("malformed programs are rejected") {
  LinearProgram p;
  p.add_var(1.0, 0.0, 1.0);
  CHECK_THROWS_AS(p.add_row({1.0, 2.0}, Relation::LessEq, 1.0), DimensionMismatch);
  p.objective[0] = std::nan("");
  CHECK_THROWS_AS(solve(p), ConfigError);
}

TEST_CASE("text dump lists every row and bound") {
  LinearProgram p;
  p.add_var(1.0, 0.0, 1.0);
  p.add_row({2.0}, Relation::LessEq, 3.0);
  std::ostringstream os;
  write_text(os, p);
  CHECK(os.str() == "minimize 1 + 0\nrow 2 <= 3\nbound 0 0 1\n");
}

namespace {

SubproblemData scalar_subproblem(double radius, double lambda) {
  SubproblemData d;
  d.n = 1;
  d.m = 1;
  d.stages = 1;
  d.xs = {{0.0}, {0.2}};
  d.us = {{0.0}};
  d.A = {Matrix(1, 1, 1.0)};
  d.B = {Matrix(1, 1, 0.1)};
  d.h0 = {{0.2}};
  d.cost = {0.7};
  d.grad = {{0.0, 0.0, 0.0}};
  d.radius = radius;
  d.lambda = lambda;
  d.X = IntervalVector{Interval(-5, 5)};
  d.U = IntervalVector{Interval(-2, 2)};
  return d;
}

}  // namespace

TEST_CASE("subproblem with zero gradients keeps the constant cost") {
  const auto sp = build_subproblem(scalar_subproblem(0.5, 0.0));
  const auto s = solve(sp.lp);
  REQUIRE(s.status == Status::Optimal);
  CHECK(s.objective_value == doctest::Approx(0.7));
  // Box trust region appears verbatim in the control bounds.
  CHECK(sp.lp.lower[sp.layout.du(0, 0)] == -0.5);
  CHECK(sp.lp.upper[sp.layout.du(0, 0)] == 0.5);
}

TEST_CASE("one-step subproblem matches a grid minimization") {
  // Stage cost linearized: c + g . (0, du, dx1) with g = (0, 0.3, -1.0).
  SubproblemData d = scalar_subproblem(0.5, 10.0);
  d.grad = {{0.0, 0.3, -1.0}};
  d.h0 = {{0.25}};  // mismatch with x^{1,s} = 0.2 forces slack or dx
  const auto sp = build_subproblem(d);
  const auto s = solve(sp.lp);
  REQUIRE(s.status == Status::Optimal);
  // Grid oracle: dx1 = h0 - x1s + B du + v; minimize over du and v.
  double best = std::numeric_limits<double>::infinity();
  for (int i = 0; i <= 1000; ++i) {
    const double du = -0.5 + i * 1e-3;
    for (int k = 0; k <= 2000; ++k) {
      const double v = -1.0 + k * 1e-3;
      const double dx = 0.05 + 0.1 * du + v;
      if (0.2 + dx < -5 || 0.2 + dx > 5) continue;
      best = std::min(best, 0.7 + 0.3 * du - dx + 10.0 * std::fabs(v));
    }
  }
  CHECK(s.objective_value == doctest::Approx(best).epsilon(1e-6));
  const auto step = extract_step(sp, s.x);
  CHECK(step.du[0][0] == doctest::Approx(-0.5));
}

TEST_CASE("subproblems are feasible for any linearization") {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> U(-1, 1);
  int infeasible = 0;
  for (int i = 0; i < 100; ++i) {
    SubproblemData d;
    d.n = 2;
    d.m = 1;
    d.stages = 3;
    d.X = IntervalVector{Interval(-3, 3), Interval(-3, 3)};
    d.U = IntervalVector{Interval(-1, 1)};
    d.xs = {{U(rng), U(rng)}};
    for (std::size_t q = 0; q < d.stages; ++q) {
      d.xs.push_back({U(rng), U(rng)});
      d.us.push_back({U(rng)});
      Matrix A(2, 2), B(2, 1);
      for (std::size_t a = 0; a < 2; ++a) {
        for (std::size_t b = 0; b < 2; ++b) A(a, b) = (a == b) + 0.1 * U(rng);
        B(a, 0) = 0.1 * U(rng);
      }
      d.A.push_back(A);
      d.B.push_back(B);
      d.h0.push_back({2.0 * U(rng), 2.0 * U(rng)});
      d.cost.push_back(U(rng) + 1.0);
      d.grad.push_back({U(rng), U(rng), U(rng), U(rng), U(rng)});
    }
    d.radius = 0.3;
    d.lambda = 100.0;
    d.trust_norm = i % 2 ? Norm::One : Norm::Inf;
    d.penalty_norm = i % 3 ? Norm::One : Norm::Inf;
    infeasible += solve(build_subproblem(d).lp).status != Status::Optimal;
  }
  CHECK(infeasible == 0);
}

}  // TEST_SUITE
