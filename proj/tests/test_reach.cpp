#include <doctest.h>

#include <cmath>
#include <random>

#include "ddc/reach.hpp"

using namespace ddc;

namespace {

// Scalar autonomous inclusion on X = [-5, 5].
SideInfo autonomous(double lf, double M) {
  SideInfo s;
  s.n = 1;
  s.m = 0;
  s.lipschitz_f = {lf};
  s.lipschitz_g = Matrix(0, 0);
  s.weights = {1.0};
  s.bound = M;
  s.X = IntervalVector{Interval(-5, 5)};
  s.U = IntervalVector{};
  return s;
}

// xdot = a x + u on X = [-5, 5], U = [-1, 1].
SideInfo affine_scalar(double lf, double M) {
  SideInfo s = autonomous(lf, M);
  s.m = 1;
  s.lipschitz_g = Matrix(1, 1, 0.0);
  s.exponents = {MultiIndex{1}};
  s.U = IntervalVector{Interval(-1, 1)};
  return s;
}

DiffInclusion linear_decay(std::size_t samples) {
  DiffInclusion di(autonomous(1.0, 5.0));
  for (std::size_t i = 0; i < samples; ++i) {
    const double x = -4.0 + 8.0 * static_cast<double>(i) / static_cast<double>(std::max<std::size_t>(samples - 1, 1));
    di.observe(static_cast<double>(i), DataPoint{{x}, {-x}, {}, {}});
  }
  return di;
}

const IntervalVector kNoControl{};

}  // namespace

TEST_SUITE("reach") {

TEST_CASE("plain Jacobian enclosures") {
  SideInfo s = autonomous(2.0, 5.0);
  DiffInclusion di(s);
  const auto J = jacobian_enclosures(di, IntervalVector{Interval(0, 1)}, kNoControl);
  CHECK(J.Jf(0, 0) == Interval(-2, 2));
  CHECK(J.Jg.empty());

  SideInfo s2;
  s2.n = 2;
  s2.m = 0;
  s2.lipschitz_f = {1.0, 1.0};
  s2.lipschitz_g = Matrix(0, 0);
  s2.weights = {2.0, 3.0};
  s2.bound = 5.0;
  s2.X = IntervalVector{Interval(-1, 1), Interval(-1, 1)};
  s2.jacobian_weight_by_column = false;
  DiffInclusion d2(s2);
  const auto J2 = jacobian_enclosures(d2, s2.X, kNoControl);
  for (std::size_t l = 0; l < 2; ++l) {
    CHECK(J2.Jf(0, l) == Interval(-2, 2));
    CHECK(J2.Jf(1, l) == Interval(-3, 3));
  }
}

TEST_CASE("factored Jacobian with a constant known factor vanishes") {
  using namespace ddc::expr;
  SideInfo s = autonomous(2.0, 5.0);
  KnownTermsSpec kt;
  kt.factors.push_back(make_known_factor(-1, {constant(1.0)}, {0.0}, 5.0));
  s.known_terms = kt;
  DiffInclusion di(s, {SideTier::KnownTerms, {}});
  di.observe(0.0, DataPoint{{0.0}, {1.0}, {}, {}});
  CHECK(di.cofactors(IntervalVector{Interval(-1, 1)})(0, 0) == Interval(1.0));
  const auto J = jacobian_enclosures(di, IntervalVector{Interval(-1, 1)}, kNoControl);
  CHECK(J.Jf(0, 0) == Interval(0.0));
}

TEST_CASE("rough enclosure of a bounded field") {
  DiffInclusion di(autonomous(0.0, 1.0));  // h == [-1, 1]
  const IntervalVector R{Interval(0.0)};
  const auto re = rough_enclosure(di, R, kNoControl, 0.1);
  CHECK(re.P[0].contains(Interval(-0.1, 0.1)));
  CHECK(re.P[0].width() <= 0.2 + 1e-12);
  // A posteriori fixpoint check.
  const IntervalVector img = R + Interval(0.0, 0.1) * di.eval(re.P, kNoControl);
  CHECK(re.P.contains(img));

  CHECK(rough_enclosure(di, IntervalVector{Interval(0.2, 0.3)}, kNoControl, 0.0).P ==
        IntervalVector{Interval(0.2, 0.3)});
}

TEST_CASE("rough enclosure fails when the flow may leave the domain") {
  DiffInclusion di(autonomous(0.0, 1e6));
  CHECK_THROWS_AS(rough_enclosure(di, IntervalVector{Interval(0.0)}, kNoControl, 1.0), EnclosureFailure);
  CHECK_THROWS_AS(rough_enclosure(di, IntervalVector{Interval(0.0)}, kNoControl, -0.1), ConfigError);
}

TEST_CASE("reach step for constant fields") {
  DiffInclusion one(autonomous(0.0, 2.0));
  one.observe(0.0, DataPoint{{0.0}, {1.0}, {}, {}});  // zero Lipschitz: h == [1, 1] everywhere
  const ReachStep a = reach_step(one, IntervalVector{Interval(0.0)}, kNoControl, 0.1);
  CHECK(a.R_next[0].contains(0.1));
  CHECK(a.R_next[0].width() <= 1e-15);
  CHECK_FALSE(a.clipped);

  DiffInclusion sym(autonomous(0.0, 1.0));
  const ReachStep b = reach_step(sym, IntervalVector{Interval(0.0)}, kNoControl, 0.1);
  CHECK(b.R_next[0].contains(Interval(-0.1, 0.1)));
  CHECK(b.R_next[0].width() <= 0.2 + 1e-12);
}

TEST_CASE("reach step contains the exact flow of xdot = -x") {
  const DiffInclusion di = linear_decay(12);
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> C(-3.0, 3.0), W(0.0, 0.5), D(0.001, 0.05);
  int violations = 0;
  for (int t = 0; t < 50; ++t) {
    const double c = C(rng), w = W(rng), dt = D(rng);
    const IntervalVector R{Interval(c - w, c + w)};
    const ReachStep st = reach_step(di, R, kNoControl, dt);
    std::uniform_real_distribution<double> X0(c - w, c + w);
    for (int k = 0; k < 200; ++k) {
      const double x0 = k == 0 ? c - w : (k == 1 ? c + w : X0(rng));
      violations += !st.R_next[0].contains(x0 * std::exp(-dt));
    }
  }
  CHECK(violations == 0);
}

TEST_CASE("more data never enlarges the reachable box") {
  const IntervalVector R{Interval(0.8, 1.1)};
  const DiffInclusion small = linear_decay(3);
  const DiffInclusion large = linear_decay(30);
  for (double dt : {0.01, 0.03, 0.05}) {
    const auto a = reach_step(small, R, kNoControl, dt).R_next[0];
    const auto b = reach_step(large, R, kNoControl, dt).R_next[0];
    CHECK(a.contains(b));
  }
}

TEST_CASE("growth of the reachable box is first order in dt") {
  const DiffInclusion di = linear_decay(20);
  const IntervalVector R{Interval(0.9, 1.1)};
  std::vector<double> growth;
  for (double dt : {0.04, 0.02, 0.01})
    growth.push_back(reach_step(di, R, kNoControl, dt).R_next[0].width() - R[0].width());
  // Halving dt halves the excess width to first order.
  for (std::size_t i = 1; i < growth.size(); ++i) {
    const double ratio = growth[i] / growth[i - 1];
    CHECK(ratio > 0.4);
    CHECK(ratio < 0.6);
  }
}

TEST_CASE("reachability under a control set") {
  DiffInclusion di(affine_scalar(1.0, 5.0));
  for (int i = 0; i < 9; ++i) {
    const double x = -2.0 + 0.5 * i, u = i % 2 ? 0.5 : -0.5;
    di.observe(i, DataPoint{{x}, {x + u}, {u}, {}});  // xdot = x + u
  }
  const IntervalVector R{Interval(0.1)};
  const auto one = reach_over_controls(di, R, di.side().U, 0.05, 0);
  CHECK(one.size() == 1);

  const IntervalVector Up{Interval(0.25)};
  const auto seq = reach_over_controls(di, R, Up, 0.05, 3);
  REQUIRE(seq.size() == 4);
  IntervalVector cur = R;
  for (std::size_t q = 0; q < 4; ++q) {
    cur = reach_step(di, cur, Up, 0.05).R_next;
    CHECK(seq[q] == cur);
  }

  const auto wide = reach_over_controls(di, R, di.side().U, 0.05, 5);
  for (std::size_t q = 1; q < wide.size(); ++q) CHECK(wide[q][0].width() >= wide[q - 1][0].width());
}

TEST_CASE("suboptimality bound formula") {
  CHECK(suboptimality_bound({{0.0, 0.0}, {0.0, 0.0}}, 3.0) == 0.0);
  // N = 1: Lc * (||w_{j+2}|| + 2 ||w_{j+1}||) with w_{j+1} = (3, 4), w_{j+2} = (6, 8).
  const std::vector<Vec> w{{3.0, 4.0}, {6.0, 8.0}};
  CHECK(suboptimality_bound(w, 1.5) == doctest::Approx(1.5 * (10.0 + 2.0 * 5.0)));
  CHECK(suboptimality_bound(w, 3.0) == doctest::Approx(2.0 * suboptimality_bound(w, 1.5)));
  CHECK(suboptimality_bound({{1.0}}, 2.0) == doctest::Approx(2.0));
}

}  // TEST_SUITE
