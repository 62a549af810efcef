#include "ddc/reach.hpp"

#include <algorithm>
#include <cmath>

namespace ddc {

namespace {

IntervalVector clip_to(const IntervalVector& A, const IntervalVector& X) {
  IntervalVector out(A.size());
  for (std::size_t k = 0; k < A.size(); ++k) {
    const double lo = std::clamp(A[k].lo(), X[k].lo(), X[k].hi());
    const double hi = std::clamp(A[k].hi(), X[k].lo(), X[k].hi());
    out[k] = Interval(lo, hi);
  }
  return out;
}

IntervalVector inflate(const IntervalVector& A, double rel, double abs) {
  IntervalVector out(A.size());
  for (std::size_t k = 0; k < A.size(); ++k)
    out[k] = A[k] + Interval::symmetric(rel * A[k].width() + abs);
  return out;
}

double max_rel_change(const IntervalVector& before, const IntervalVector& after) {
  double c = 0.0;
  for (std::size_t k = 0; k < before.size(); ++k) {
    const double w0 = before[k].width();
    if (w0 > 0) c = std::max(c, (w0 - after[k].width()) / w0);
  }
  return c;
}

// A = [0, dt] * h, added to R.
IntervalVector picard(const IntervalVector& R, const Interval& T, const IntervalVector& h) {
  return R + T * h;
}

}  // namespace

JacobianEnclosure jacobian_enclosures(const DiffInclusion& di, const IntervalVector& P,
                                      const IntervalVector& U) {
  const SideInfo& side = di.side();
  const std::size_t n = side.n, d = side.d();
  if (P.size() != n || U.size() != side.m)
    throw DimensionMismatch("reach: jacobian_enclosures dimension mismatch");
  JacobianEnclosure J;
  J.Jf = lipschitz_jacobian(side, side.lipschitz_f);
  for (std::size_t p = 0; p < d; ++p) J.Jg.push_back(lipschitz_jacobian(side, side.lipschitz_g.row(p)));

  if (di.has_known_terms()) {
    const auto& factors = side.known_terms->factors;
    const IntervalMatrix cof = di.cofactors(P);
    const std::vector<Interval> box(P.begin(), P.end());
    IntervalMatrix Ff(n, n, Interval(0.0));
    std::vector<IntervalMatrix> Fg(d, IntervalMatrix(n, n, Interval(0.0)));
    for (std::size_t s = 0; s < factors.size(); ++s) {
      const auto& fac = factors[s];
      IntervalMatrix& dst = fac.monomial < 0 ? Ff : Fg[fac.monomial];
      for (std::size_t k = 0; k < n; ++k) {
        const auto kv = expr::eval(fac.known[k], box);
        const Interval known = kv ? *kv : Interval::entire();
        for (std::size_t l = 0; l < n; ++l) {
          const auto dk = expr::eval(fac.jacobian[k][l], box);
          const Interval dknown = dk ? *dk : Interval::entire();
          const double w = side.jacobian_weight_by_column ? side.weights[l] : side.weights[k];
          const Interval lip = Interval::symmetric(rounding::mul_up(fac.lipschitz[k], w));
          dst(k, l) += dknown * cof(s, k) + lip * known;
        }
      }
    }
    auto narrow = [](IntervalMatrix& a, const IntervalMatrix& b) {
      const auto v = intersect(a, b);
      if (!v) throw EmptyEnvelope("reach: Jacobian enclosures from the side-information tiers are disjoint", {});
      a = *v;
    };
    narrow(J.Jf, Ff);
    for (std::size_t p = 0; p < d; ++p) narrow(J.Jg[p], Fg[p]);
  }

  if (di.has_constraints()) {
    const FieldEnclosure fe = di.field(P, U);
    ConstraintContext ctx;
    ctx.x = P;
    ctx.u = U;
    if (fe.xdot) ctx.xdot = *fe.xdot;
    ctx.F = fe.F;
    ctx.G = fe.G;
    ctx.JF = J.Jf;
    ctx.JG = J.Jg;
    apply_algebraic_contraction(ctx, side.constraints, side);
    J.Jf = ctx.JF;
    J.Jg = ctx.JG;
  }
  return J;
}

RoughEnclosure rough_enclosure(const DiffInclusion& di, const IntervalVector& R,
                               const IntervalVector& U, double dt, const ReachOptions& opt) {
  const IntervalVector& X = di.side().X;
  if (R.size() != X.size()) throw DimensionMismatch("reach: state box dimension mismatch");
  if (!(dt >= 0) || !std::isfinite(dt)) throw ConfigError("reach: dt must be finite and nonnegative");
  RoughEnclosure out;
  if (dt == 0.0) {
    out.P = R;
    return out;
  }
  const Interval T(0.0, dt);
  IntervalVector P = clip_to(inflate(picard(R, T, di.eval(R, U)), opt.inflate_rel, opt.inflate_abs), X);
  bool valid = false;
  for (int it = 0; it < opt.max_iters; ++it) {
    ++out.iterations;
    const IntervalVector Q = picard(R, T, di.eval(P, U));
    if (P.contains(Q)) {
      valid = true;
      P = Q;
      break;
    }
    if (!X.contains(Q))
      throw EnclosureFailure("reach: rough enclosure leaves the state domain; reduce dt");
    // Inflate the image itself: a hull with P would keep the slack of wide
    // components and feed it back into the narrow ones.
    P = clip_to(inflate(Q, opt.inflate_rel, opt.inflate_abs), X);
  }
  if (!valid)
    throw EnclosureFailure("reach: Picard iteration did not validate a rough enclosure; reduce dt");
  // P now contains the flow; every further image intersected with P does too.
  for (int it = 0; it < opt.contract_iters; ++it) {
    const auto Q = intersect(picard(R, T, di.eval(P, U)), P);
    if (!Q) throw EnclosureFailure("reach: rough enclosure emptied during tightening");
    const double change = max_rel_change(P, *Q);
    P = *Q;
    if (change < opt.contract_tol) break;
  }
  out.P = P;
  return out;
}

ReachStep reach_step(const DiffInclusion& di, const IntervalVector& R, const IntervalVector& U,
                     double dt, const ReachOptions& opt) {
  const SideInfo& side = di.side();
  const std::size_t n = side.n, d = side.d();
  if (U.size() != side.m) throw DimensionMismatch("reach: control box dimension mismatch");
  ReachStep st;
  st.dt = dt;
  const RoughEnclosure re = rough_enclosure(di, R, U, dt, opt);
  st.P = re.P;
  st.picard_iterations = re.iterations;
  const JacobianEnclosure J = jacobian_enclosures(di, st.P, U);
  st.Jf = J.Jf;
  st.Jg = J.Jg;
  if (dt == 0.0) {
    st.R_next = R;
    return st;
  }
  IntervalMatrix Jt = J.Jf;
  for (std::size_t p = 0; p < d; ++p) Jt = Jt + monomial_ext(U, side.exponents[p]) * J.Jg[p];
  const Interval h1(dt);
  const Interval h2 = Interval(dt) * Interval(dt) * Interval(0.5);
  IntervalVector Rn = R + h1 * di.eval(R, U) + h2 * (Jt * di.eval(st.P, U));

  for (std::size_t k = 0; k < n; ++k)
    if (!side.X[k].contains(Rn[k])) st.clipped = true;
  if (st.clipped) {
    const auto c = intersect(Rn, side.X);
    if (!c) throw EnclosureFailure("reach: reachable box lies outside the state domain");
    Rn = *c;
  }
  if (!st.P.contains(Rn)) {
    st.beyond_P = true;
    const auto c = intersect(Rn, st.P);
    if (!c) throw EnclosureFailure("reach: Taylor box is disjoint from the rough enclosure");
    Rn = *c;
  }
  st.R_next = Rn;
  return st;
}

std::vector<IntervalVector> reach_over_controls(const DiffInclusion& di, const IntervalVector& R,
                                                const IntervalVector& U, double dt, std::size_t N,
                                                const ReachOptions& opt) {
  std::vector<IntervalVector> out;
  IntervalVector cur = R;
  for (std::size_t q = 0; q <= N; ++q) {
    try {
      cur = reach_step(di, cur, U, dt, opt).R_next;
    } catch (const EnclosureFailure& e) {
      throw EnclosureFailure(e.what(), q);
    }
    out.push_back(cur);
  }
  return out;
}

double suboptimality_bound(const std::vector<Vec>& widths, double Lc) {
  if (widths.empty()) return 0.0;
  double s = norm2(widths.back());
  for (std::size_t q = 0; q + 1 < widths.size(); ++q) s += 2.0 * norm2(widths[q]);
  return Lc * s;
}

}  // namespace ddc
