#include <doctest.h>

#include <cmath>
#include <functional>
#include <random>

#include "ddc/expr.hpp"

using namespace ddc;
using namespace ddc::expr;

namespace {

Expr random_expr(std::mt19937_64& rng, int depth, std::size_t nvars) {
  std::uniform_int_distribution<int> pick(0, depth <= 0 ? 1 : 13);
  std::uniform_real_distribution<double> c(-2.0, 2.0);
  const int k = pick(rng);
  switch (k) {
    case 0: return constant(std::round(c(rng) * 4) / 4);
    case 1: return var(std::uniform_int_distribution<std::size_t>(0, nvars - 1)(rng));
    case 2: return random_expr(rng, depth - 1, nvars) + random_expr(rng, depth - 1, nvars);
    case 3: return random_expr(rng, depth - 1, nvars) - random_expr(rng, depth - 1, nvars);
    case 4: return random_expr(rng, depth - 1, nvars) * random_expr(rng, depth - 1, nvars);
    case 5: return random_expr(rng, depth - 1, nvars) / (2.5 + sin(random_expr(rng, depth - 1, nvars)));
    case 6: return -random_expr(rng, depth - 1, nvars);
    case 7: return pow(random_expr(rng, depth - 1, nvars), 2);
    case 8: return pow(random_expr(rng, depth - 1, nvars), 3);
    case 9: return sqrt(pow(random_expr(rng, depth - 1, nvars), 2) + 0.5);
    case 10: return sin(random_expr(rng, depth - 1, nvars));
    case 11: return cos(random_expr(rng, depth - 1, nvars));
    case 12: return exp(random_expr(rng, depth - 1, nvars) * 0.5);
    default:
      return max(random_expr(rng, depth - 1, nvars), min(var(0), random_expr(rng, depth - 1, nvars)));
  }
}

}  // namespace

TEST_SUITE("expr") {

TEST_CASE("point and interval evaluation agree") {
  const Expr e = sin(var(0)) * var(1) + pow(var(0), 2) / 4.0 - exp(var(1));
  const std::vector<double> x{0.3, -1.2};
  const double v = eval(e, x);
  const std::vector<Interval> box{Interval(0.3), Interval(-1.2)};
  const auto iv = eval(e, box);
  REQUIRE(iv.has_value());
  CHECK(iv->contains(v));
  CHECK(iv->width() < 1e-14);
  CHECK(arity(e) == 2);
  CHECK(to_string(var(0) + 1.0) == "(v0 + 1)");
}

TEST_CASE("sqrt of an entirely negative argument has no value") {
  const std::vector<Interval> box{Interval(-3, -2)};
  CHECK_FALSE(eval(sqrt(var(0)), box).has_value());
}

TEST_CASE("symbolic derivatives match central differences") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> U(-1.5, 1.5);
  int checked = 0;
  for (int i = 0; i < 300; ++i) {
    const Expr e = random_expr(rng, 3, 2);
    if (to_string(e).find("min") != std::string::npos || to_string(e).find("max") != std::string::npos)
      continue;
    const std::vector<double> x{U(rng), U(rng)};
    for (std::size_t l = 0; l < 2; ++l) {
      const double h = 1e-6;
      auto xp = x, xm = x;
      xp[l] += h;
      xm[l] -= h;
      const double fd = (eval(e, xp) - eval(e, xm)) / (2 * h);
      const double d = eval(diff(e, l), x);
      if (!std::isfinite(fd) || !std::isfinite(d)) continue;
      CHECK(std::fabs(fd - d) <= 1e-4 * (1.0 + std::fabs(d)));
      ++checked;
    }
  }
  CHECK(checked > 200);
  CHECK_THROWS_AS(diff(min(var(0), var(1)), 0), DomainError);
}

TEST_CASE("nonnegativity constraint clips directly") {
  std::vector<Interval> dom{Interval(-1, 2)};
  CHECK(hc4_revise(var(0), relation_target(Relation::GreaterEq), dom) == Revise::Contracted);
  CHECK(dom[0] == Interval(0, 2));
}

TEST_CASE("friction cone constraint tightens the tangential force") {
  const double mu1 = 1.0, mu2 = 0.5;
  const Expr c = var(0) - sqrt(pow(var(1), 2) * mu1 + pow(var(2), 2) * mu2);
  std::vector<Interval> dom{Interval(0, 1), Interval(0, 2), Interval(0, 0)};
  CHECK(hc4_revise(c, relation_target(Relation::GreaterEq), dom) == Revise::Contracted);
  CHECK(dom[0] == Interval(0, 1));
  CHECK(dom[1].lo() == 0.0);
  CHECK(dom[1].hi() >= 1.0);
  CHECK(dom[1].hi() <= 1.0 + 1e-15);
  // Brute-force grid: largest feasible F2 is 1.
  double best = 0.0;
  for (int i = 0; i <= 2000; ++i)
    for (int j = 0; j <= 1000; ++j) {
      const double f1 = j / 1000.0, f2 = 2.0 * i / 2000.0;
      if (f1 >= std::sqrt(f2 * f2 * mu1)) best = std::max(best, f2);
    }
  CHECK(best == doctest::Approx(1.0));
}

TEST_CASE("vacuous constraint leaves domains unchanged") {
  std::vector<Interval> dom{Interval(-3, 5)};
  const Expr c = constant(0.0) - constant(-1.0);
  CHECK(hc4_revise(c, relation_target(Relation::GreaterEq), dom) == Revise::Unchanged);
  CHECK(dom[0] == Interval(-3, 5));
}

TEST_CASE("infeasible constraint reports empty") {
  std::vector<Interval> dom{Interval(1, 2)};
  CHECK(hc4_revise(var(0) + 5.0, relation_target(Relation::LessEq), dom) == Revise::Empty);
  std::vector<Interval> d2{Interval(-1, 1)};
  CHECK(hc4_revise(pow(var(0), 2) + 1.0, relation_target(Relation::Equal), d2) == Revise::Empty);
}

TEST_CASE("equality through odd and even powers") {
  std::vector<Interval> dom{Interval(-5, 5)};
  CHECK(hc4_revise(pow(var(0), 3) - 8.0, relation_target(Relation::Equal), dom) == Revise::Contracted);
  CHECK(dom[0].contains(2.0));
  CHECK(dom[0].width() < 1e-12);
  std::vector<Interval> d2{Interval(0.5, 5)};
  hc4_revise(pow(var(0), 2) - 4.0, relation_target(Relation::Equal), d2);
  CHECK(d2[0].contains(2.0));
  CHECK(d2[0].width() < 1e-12);
}

TEST_CASE("trigonometric inverse on a monotone branch") {
  std::vector<Interval> dom{Interval(-1.0, 1.0)};
  hc4_revise(sin(var(0)) - 0.5, relation_target(Relation::Equal), dom);
  CHECK(dom[0].contains(std::asin(0.5)));
  CHECK(dom[0].width() < 1e-12);
  std::vector<Interval> d2{Interval(3.5, 6.0)};
  hc4_revise(cos(var(0)) - 0.5, relation_target(Relation::Equal), d2);
  CHECK(d2[0].contains(2 * M_PI - std::acos(0.5)));
  CHECK(d2[0].width() < 1e-12);
  std::vector<Interval> d3{Interval(2.0, 4.0)};
  hc4_revise(sin(var(0)) - 0.5, relation_target(Relation::GreaterEq), d3);
  CHECK(d3[0].contains(M_PI - std::asin(0.5)));
  CHECK(d3[0].hi() < M_PI);
}

TEST_CASE("min and max backward rules") {
  std::vector<Interval> dom{Interval(0, 10), Interval(5, 6)};
  hc4_revise(min(var(0), var(1)) - 2.0, relation_target(Relation::Equal), dom);
  CHECK(dom[0] == Interval(2, 2));
  std::vector<Interval> d2{Interval(-4, 4), Interval(-1, 1)};
  hc4_revise(max(var(0), var(1)), relation_target(Relation::LessEq), d2);
  CHECK(d2[0] == Interval(-4, 0));
  CHECK(d2[1] == Interval(-1, 0));
}

TEST_CASE("contractor never removes consistent points (fuzz)") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> U(-2.0, 2.0);
  int removed = 0, contracted = 0;
  for (int inst = 0; inst < 400; ++inst) {
    const Expr e = random_expr(rng, 3, 3);
    std::vector<Interval> box(3);
    for (auto& b : box) {
      double p = U(rng), q = U(rng);
      if (p > q) std::swap(p, q);
      b = Interval(p, q);
    }
    const double shift = std::round(U(rng) * 4) / 4;
    const Expr c = e - shift;
    std::vector<Interval> dom = box;
    const Revise r = hc4_revise(c, relation_target(Relation::GreaterEq), dom);
    contracted += r == Revise::Contracted;
    std::uniform_real_distribution<double> s0(box[0].lo(), box[0].hi()), s1(box[1].lo(), box[1].hi()),
        s2(box[2].lo(), box[2].hi());
    for (int k = 0; k < 300; ++k) {
      const std::vector<double> x{s0(rng), s1(rng), s2(rng)};
      const double v = eval(c, x);
      if (!(v >= 0)) continue;
      if (r == Revise::Empty) {
        ++removed;
        continue;
      }
      for (int d = 0; d < 3; ++d) removed += !dom[d].contains(x[d]);
    }
  }
  CHECK(removed == 0);
  CHECK(contracted > 20);
}

TEST_CASE("round-robin propagation reaches a joint fixpoint") {
  // x + y = 2, x - y = 0, boxes [0,2]: the point (1,1).
  std::vector<Constraint> cs{{var(0) + var(1) - 2.0, Relation::Equal},
                             {var(0) - var(1), Relation::Equal},
                             {var(0) - 1.0, Relation::GreaterEq}};
  std::vector<Interval> dom{Interval(0, 2), Interval(0, 2)};
  CHECK(propagate(cs, dom) == Revise::Contracted);
  CHECK(dom[0] == Interval(1, 1));
  CHECK(dom[1] == Interval(1, 1));
}

}  // TEST_SUITE
