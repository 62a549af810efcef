#include "ddc/inclusion.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

namespace ddc {

using rounding::add_down;
using rounding::add_up;
using rounding::mul_up;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string sample_message(const char* what, std::size_t index) {
  std::ostringstream os;
  os << "inclusion: " << what << " (sample " << index << ")";
  return os.str();
}

// Upper endpoint of the weighted-norm extension of A - x.
double eta_hi(const IntervalVector& A, const Vec& x, const Vec& w) {
  double s = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double lo = add_down(A[k].lo(), -x[k]);
    const double hi = add_up(A[k].hi(), -x[k]);
    const double mag = mul_up(w[k], std::max(std::fabs(lo), std::fabs(hi)));
    s = add_up(s, mul_up(mag, mag));
  }
  return rounding::sqrt_up(s);
}

void check_finite_nonneg(const Vec& v, const char* what) {
  for (double x : v)
    if (!(x >= 0.0) || !std::isfinite(x))
      throw ConfigError(std::string("inclusion: ") + what + " must be finite and nonnegative");
}

}  // namespace

IntervalVector DataPoint::xdot_box() const {
  IntervalVector b = IntervalVector::point(xdot);
  if (!xdot_pad.empty()) {
    for (std::size_t k = 0; k < b.size(); ++k) b[k] = b[k] + Interval::symmetric(xdot_pad[k]);
  }
  return b;
}

void Dataset::append(double t, DataPoint p) {
  if (!times_.empty() && !(t > times_.back()))
    throw std::invalid_argument("inclusion: timestamps must increase strictly");
  if (p.x.size() != p.xdot.size())
    throw std::invalid_argument("inclusion: x and xdot dimensions differ");
  if (!p.xdot_pad.empty() && p.xdot_pad.size() != p.x.size())
    throw std::invalid_argument("inclusion: xdot padding dimension differs");
  if (!points_.empty() &&
      (p.x.size() != points_.front().x.size() || p.u.size() != points_.front().u.size()))
    throw std::invalid_argument("inclusion: sample dimensions changed");
  points_.push_back(std::move(p));
  times_.push_back(t);
}

Dataset Dataset::prefix(std::size_t count) const {
  Dataset d;
  for (std::size_t i = 0; i < std::min(count, size()); ++i) d.append(times_[i], points_[i]);
  return d;
}

KnownFactor make_known_factor(int monomial, std::vector<expr::Expr> known, Vec lipschitz,
                              double bound) {
  KnownFactor f;
  f.monomial = monomial;
  f.known = std::move(known);
  f.lipschitz = std::move(lipschitz);
  f.bound = bound;
  const std::size_t n = f.known.size();
  f.jacobian.assign(n, std::vector<expr::Expr>(n));
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t l = 0; l < n; ++l) f.jacobian[k][l] = expr::diff(f.known[k], l);
  return f;
}

void SideInfo::validate() const {
  const std::size_t dd = d();
  if (n == 0) throw ConfigError("inclusion: state dimension must be positive");
  if (lipschitz_f.size() != n) throw ConfigError("inclusion: lipschitz_f must have n entries");
  if (lipschitz_g.rows() != dd || (dd > 0 && lipschitz_g.cols() != n))
    throw ConfigError("inclusion: lipschitz_g must be d x n");
  if (weights.size() != n) throw ConfigError("inclusion: weights must have n entries");
  for (double w : weights)
    if (!(w > 0) || !std::isfinite(w)) throw ConfigError("inclusion: weights must be positive");
  check_finite_nonneg(lipschitz_f, "lipschitz_f");
  check_finite_nonneg(lipschitz_g.data(), "lipschitz_g");
  if (!(bound > 0) || !std::isfinite(bound))
    throw ConfigError("inclusion: global bound M must be positive and finite");
  std::set<MultiIndex> seen;
  for (const auto& a : exponents) {
    if (a.size() != m) throw ConfigError("inclusion: exponent length must equal m");
    for (int e : a)
      if (e < 0) throw ConfigError("inclusion: exponents must be nonnegative");
    if (!seen.insert(a).second) throw ConfigError("inclusion: exponents must be distinct");
  }
  if (X.size() != n) throw ConfigError("inclusion: state domain must have n components");
  if (U.size() != m) throw ConfigError("inclusion: control domain must have m components");
  for (const auto& c : X)
    if (!c.is_bounded()) throw ConfigError("inclusion: state domain must be bounded");
  for (const auto& c : U)
    if (!c.is_bounded()) throw ConfigError("inclusion: control domain must be bounded");
  if (known_terms) {
    for (const auto& f : known_terms->factors) {
      if (f.known.size() != n || f.lipschitz.size() != n || f.jacobian.size() != n)
        throw ConfigError("inclusion: known factor must have n components");
      if (f.monomial < -1 || f.monomial >= static_cast<int>(dd))
        throw ConfigError("inclusion: known factor monomial index out of range");
      if (!(f.bound > 0) || !std::isfinite(f.bound))
        throw ConfigError("inclusion: known factor bound must be positive");
      check_finite_nonneg(f.lipschitz, "known factor lipschitz");
      for (const auto& e : f.known)
        if (expr::arity(e) > n) throw ConfigError("inclusion: known factor uses a non-state variable");
    }
  }
  const auto cv = vars();
  for (const auto& c : constraints)
    if (!c.expr || expr::arity(c.expr) > cv.count())
      throw ConfigError("inclusion: constraint '" + c.name + "' references unknown variables");
}

IntervalMatrix EnvelopeRecord::CG() const {
  IntervalMatrix g(C.rows() - 1, C.cols());
  for (std::size_t p = 0; p + 1 < C.rows(); ++p)
    for (std::size_t k = 0; k < C.cols(); ++k) g(p, k) = C(p + 1, k);
  return g;
}

TermModel::TermModel(const SideInfo& side, Layout layout)
    : layout_(layout), n_(side.n), weights_(side.weights), exponents_(side.exponents) {
  if (layout == Layout::Plain) {
    terms_ = 1 + side.d();
    lip_ = Matrix(terms_, n_);
    bound_.assign(terms_, side.bound);
    for (std::size_t k = 0; k < n_; ++k) lip_(0, k) = side.lipschitz_f[k];
    for (std::size_t p = 0; p < side.d(); ++p)
      for (std::size_t k = 0; k < n_; ++k) lip_(p + 1, k) = side.lipschitz_g(p, k);
  } else {
    if (!side.known_terms) throw ConfigError("inclusion: factored layout needs known terms");
    factors_ = side.known_terms->factors;
    terms_ = factors_.size();
    lip_ = Matrix(terms_, n_);
    bound_.resize(terms_);
    for (std::size_t s = 0; s < terms_; ++s) {
      bound_[s] = factors_[s].bound;
      for (std::size_t k = 0; k < n_; ++k) lip_(s, k) = factors_[s].lipschitz[k];
    }
  }
}

IntervalMatrix TermModel::coefficients(const IntervalVector& A, const IntervalVector& U) const {
  IntervalMatrix c(terms_, n_, Interval(1.0));
  if (layout_ == Layout::Plain) {
    for (std::size_t p = 0; p < exponents_.size(); ++p) {
      const Interval mono = monomial_ext(U, exponents_[p]);
      for (std::size_t k = 0; k < n_; ++k) c(p + 1, k) = mono;
    }
    return c;
  }
  const std::vector<Interval> box(A.begin(), A.end());
  for (std::size_t s = 0; s < terms_; ++s) {
    const auto& f = factors_[s];
    const Interval mono = f.monomial < 0 ? Interval(1.0) : monomial_ext(U, exponents_[f.monomial]);
    for (std::size_t k = 0; k < n_; ++k) {
      const auto v = expr::eval(f.known[k], box);
      c(s, k) = (v ? *v : Interval::entire()) * mono;
    }
  }
  return c;
}

EnvelopeSet seed_envelopes(const SideInfo& side, Layout layout) {
  const TermModel tm(side, layout);
  EnvelopeSet env;
  env.layout = layout;
  EnvelopeRecord seed;
  seed.x = side.X.mid();
  seed.C = IntervalMatrix(tm.terms(), tm.n());
  for (std::size_t t = 0; t < tm.terms(); ++t)
    for (std::size_t k = 0; k < tm.n(); ++k) seed.C(t, k) = Interval::symmetric(tm.bound(t));
  env.records.push_back(std::move(seed));
  return env;
}

IntervalMatrix envelope_eval_terms(const EnvelopeSet& env, const TermModel& tm,
                                   const IntervalVector& A) {
  if (A.size() != tm.n()) throw DimensionMismatch("inclusion: query box dimension mismatch");
  if (env.records.empty()) throw EmptyEnvelope("inclusion: envelope set has no records", {});
  const std::size_t T = tm.terms(), n = tm.n();
  std::vector<double> lo(T * n), hi(T * n);
  std::vector<std::size_t> arg_lo(T * n, 0), arg_hi(T * n, 0);
  for (std::size_t t = 0; t < T; ++t)
    for (std::size_t k = 0; k < n; ++k) {
      lo[t * n + k] = -tm.bound(t);
      hi[t * n + k] = tm.bound(t);
    }
  for (std::size_t r = 0; r < env.records.size(); ++r) {
    const auto& rec = env.records[r];
    const double eta = eta_hi(A, rec.x, tm.weights());
    for (std::size_t t = 0; t < T; ++t)
      for (std::size_t k = 0; k < n; ++k) {
        const std::size_t i = t * n + k;
        const double rad = mul_up(tm.lipschitz(t, k), eta);
        const Interval& c = rec.C(t, k);
        const double clo = add_down(c.lo(), -rad);
        const double chi = add_up(c.hi(), rad);
        if (clo > lo[i]) {
          lo[i] = clo;
          arg_lo[i] = r;
        }
        if (chi < hi[i]) {
          hi[i] = chi;
          arg_hi[i] = r;
        }
      }
  }
  IntervalMatrix out(T, n);
  for (std::size_t t = 0; t < T; ++t)
    for (std::size_t k = 0; k < n; ++k) {
      const std::size_t i = t * n + k;
      if (lo[i] > hi[i])
        throw EmptyEnvelope("inclusion: Lipschitz envelopes of stored records do not intersect",
                            {arg_lo[i], arg_hi[i]});
      out(t, k) = Interval(lo[i], hi[i]);
    }
  return out;
}

std::pair<IntervalVector, IntervalMatrix> envelope_eval(const EnvelopeSet& env,
                                                        const SideInfo& side,
                                                        const IntervalVector& A) {
  const IntervalMatrix C = envelope_eval_terms(env, TermModel(side, Layout::Plain), A);
  EnvelopeRecord tmp{{}, C, std::nullopt};
  return {tmp.CF(), tmp.CG()};
}

IntervalMatrix contract_terms(const IntervalMatrix& C, const IntervalMatrix& coef,
                              const IntervalVector& xdot) {
  const std::size_t T = C.rows(), n = C.cols();
  if (coef.rows() != T || coef.cols() != n || xdot.size() != n)
    throw DimensionMismatch("inclusion: contraction dimension mismatch");
  IntervalMatrix out = C;
  auto fail = [] {
    throw InconsistentData("inclusion: sample contradicts the declared side information", 0);
  };
  std::vector<Interval> rest(T);
  for (std::size_t k = 0; k < n; ++k) {
    // rest[t] = sum_{l > t} a_l * C_l
    Interval acc(0.0);
    for (std::size_t t = T; t-- > 0;) {
      rest[t] = acc;
      acc = acc + coef(t, k) * C(t, k);
    }
    Interval S = xdot[k];
    for (std::size_t t = 0; t < T; ++t) {
      const Interval& a = coef(t, k);
      const auto cand = intersect(S - rest[t], a * C(t, k));
      if (!cand) fail();
      Interval ct = C(t, k);
      if (!a.contains_zero()) {
        const auto c = intersect(*cand / a, C(t, k));
        if (!c) fail();
        ct = *c;
      }
      out(t, k) = ct;
      const auto next = intersect(S - a * ct, rest[t]);
      if (!next) fail();
      S = *next;
    }
  }
  return out;
}

std::pair<IntervalVector, IntervalMatrix> contract_datapoint(const DataPoint& dp,
                                                             const IntervalVector& F,
                                                             const IntervalMatrix& G,
                                                             const SideInfo& side) {
  const std::size_t n = side.n, d = side.d();
  if (F.size() != n || G.rows() != d || (d > 0 && G.cols() != n) || dp.x.size() != n ||
      dp.u.size() != side.m)
    throw DimensionMismatch("inclusion: contract_datapoint dimension mismatch");
  IntervalMatrix C(1 + d, n);
  C.set_row(0, F);
  for (std::size_t p = 0; p < d; ++p) C.set_row(p + 1, G.row(p));
  const TermModel tm(side, Layout::Plain);
  const IntervalMatrix coef =
      tm.coefficients(IntervalVector::point(dp.x), IntervalVector::point(dp.u));
  const EnvelopeRecord r{dp.x, contract_terms(C, coef, dp.xdot_box()), std::nullopt};
  return {r.CF(), r.CG()};
}

IntervalMatrix lipschitz_jacobian(const SideInfo& side, const Vec& bounds) {
  const std::size_t n = side.n;
  IntervalMatrix J(n, n);
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t l = 0; l < n; ++l) {
      const double w = side.jacobian_weight_by_column ? side.weights[l] : side.weights[k];
      J(k, l) = Interval::symmetric(mul_up(bounds[k], w));
    }
  return J;
}

bool apply_algebraic_contraction(ConstraintContext& ctx, const std::vector<ConstraintSpec>& cs,
                                 const SideInfo& side) {
  if (cs.empty()) return false;
  const ConstraintVars cv = side.vars();
  const std::size_t n = side.n, m = side.m, d = side.d();
  std::vector<Interval> dom(cv.count(), Interval::entire());
  auto fill = [&](std::size_t off, const IntervalVector& v) {
    for (std::size_t i = 0; i < v.size(); ++i) dom[off + i] = v[i];
  };
  if (ctx.x.size() == n) fill(0, ctx.x);
  if (ctx.u.size() == m) fill(n, ctx.u);
  if (ctx.xdot.size() == n) fill(n + m, ctx.xdot);
  fill(cv.f_off(), ctx.F);
  for (std::size_t p = 0; p < d; ++p)
    for (std::size_t k = 0; k < n; ++k) dom[cv.g_off() + p * n + k] = ctx.G(p, k);
  if (ctx.JF.rows() == n)
    for (std::size_t k = 0; k < n; ++k)
      for (std::size_t l = 0; l < n; ++l) dom[cv.jf_off() + k * n + l] = ctx.JF(k, l);
  for (std::size_t p = 0; p < std::min(d, ctx.JG.size()); ++p)
    for (std::size_t k = 0; k < n; ++k)
      for (std::size_t l = 0; l < n; ++l) dom[cv.jg_off() + (p * n + k) * n + l] = ctx.JG[p](k, l);

  std::vector<expr::Constraint> ec;
  ec.reserve(cs.size());
  for (const auto& c : cs) ec.push_back({c.expr, c.relation});
  const expr::Revise r = expr::propagate(ec, dom);
  if (r == expr::Revise::Empty)
    throw EmptyAfterContraction("inclusion: algebraic constraints are inconsistent with the enclosures");
  if (r == expr::Revise::Unchanged) return false;

  auto read = [&](std::size_t off, IntervalVector& v) {
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = dom[off + i];
  };
  if (ctx.x.size() == n) read(0, ctx.x);
  if (ctx.u.size() == m) read(n, ctx.u);
  if (ctx.xdot.size() == n) read(n + m, ctx.xdot);
  read(cv.f_off(), ctx.F);
  for (std::size_t p = 0; p < d; ++p)
    for (std::size_t k = 0; k < n; ++k) ctx.G(p, k) = dom[cv.g_off() + p * n + k];
  if (ctx.JF.rows() == n)
    for (std::size_t k = 0; k < n; ++k)
      for (std::size_t l = 0; l < n; ++l) ctx.JF(k, l) = dom[cv.jf_off() + k * n + l];
  for (std::size_t p = 0; p < std::min(d, ctx.JG.size()); ++p)
    for (std::size_t k = 0; k < n; ++k)
      for (std::size_t l = 0; l < n; ++l) ctx.JG[p](k, l) = dom[cv.jg_off() + (p * n + k) * n + l];
  return true;
}

namespace {

class Refiner {
 public:
  Refiner(EnvelopeSet& env, const SideInfo& side, const Dataset& data, const RefineOptions& opt)
      : env_(env), side_(side), data_(data), opt_(opt), tm_(side, env.layout) {}

  IntervalMatrix contract_sample(IntervalMatrix C, std::size_t i) const {
    const DataPoint& dp = data_[i];
    const IntervalVector x = IntervalVector::point(dp.x);
    const IntervalMatrix coef = tm_.coefficients(x, IntervalVector::point(dp.u));
    try {
      C = contract_terms(C, coef, dp.xdot_box());
    } catch (const InconsistentData&) {
      throw InconsistentData(sample_message("sample contradicts the declared side information", i), i);
    }
    if (opt_.use_constraints && env_.layout == Layout::Plain && !side_.constraints.empty()) {
      const std::size_t d = side_.d();
      ConstraintContext ctx;
      ctx.x = x;
      ctx.u = IntervalVector::point(dp.u);
      ctx.xdot = dp.xdot_box();
      ctx.F = C.row(0);
      ctx.G = IntervalMatrix(d, side_.n);
      for (std::size_t p = 0; p < d; ++p) ctx.G.set_row(p, C.row(p + 1));
      ctx.JF = lipschitz_jacobian(side_, side_.lipschitz_f);
      for (std::size_t p = 0; p < d; ++p)
        ctx.JG.push_back(lipschitz_jacobian(side_, side_.lipschitz_g.row(p)));
      try {
        apply_algebraic_contraction(ctx, side_.constraints, side_);
      } catch (const EmptyAfterContraction&) {
        throw InconsistentData(sample_message("sample violates the algebraic constraints", i), i);
      }
      C.set_row(0, ctx.F);
      for (std::size_t p = 0; p < d; ++p) C.set_row(p + 1, ctx.G.row(p));
    }
    return C;
  }

  IntervalMatrix eval_at(std::size_t i) const {
    try {
      return envelope_eval_terms(env_, tm_, IntervalVector::point(data_[i].x));
    } catch (const EmptyEnvelope&) {
      throw InconsistentData(sample_message("envelopes of stored records do not intersect", i), i);
    }
  }

  // One sweep over all data-backed records; returns the largest relative
  // width decrease.
  double sweep() {
    double change = 0.0;
    for (auto& rec : env_.records) {
      if (!rec.sample) continue;
      IntervalMatrix C = contract_sample(eval_at(*rec.sample), *rec.sample);
      const auto tight = intersect(C, rec.C);
      if (!tight)
        throw InconsistentData(
            sample_message("refinement emptied a stored record", *rec.sample), *rec.sample);
      for (std::size_t t = 0; t < tight->rows(); ++t)
        for (std::size_t k = 0; k < tight->cols(); ++k) {
          const double w0 = rec.C(t, k).width();
          const double w1 = (*tight)(t, k).width();
          if (w0 > 0 && w1 < w0) change = std::max(change, (w0 - w1) / w0);
        }
      rec.C = *tight;
    }
    return change;
  }

  RefineReport run(std::size_t index) {
    RefineReport rep;
    EnvelopeRecord rec;
    rec.x = data_[index].x;
    rec.sample = index;
    rec.C = contract_sample(eval_at(index), index);
    env_.records.push_back(std::move(rec));
    double change = 0.0;
    do {
      ++rep.sweeps;
      change = sweep();
    } while (change >= opt_.rel_tol && rep.sweeps < opt_.max_sweeps);
    rep.cap_hit = change >= opt_.rel_tol;
    if (rep.cap_hit && opt_.strict)
      throw MaxSweepsExceeded("inclusion: refinement did not reach a fixpoint within the sweep cap");
    return rep;
  }

 private:
  EnvelopeSet& env_;
  const SideInfo& side_;
  const Dataset& data_;
  const RefineOptions& opt_;
  TermModel tm_;
};

}  // namespace

RefineReport refine(EnvelopeSet& env, const SideInfo& side, const Dataset& data, std::size_t index,
                    const RefineOptions& opt) {
  if (index >= data.size()) throw std::out_of_range("inclusion: sample index out of range");
  if (data[index].x.size() != side.n || data[index].u.size() != side.m)
    throw DimensionMismatch("inclusion: sample dimension mismatch");
  if (opt.on_inconsistent == OnInconsistent::Fail) return Refiner(env, side, data, opt).run(index);
  const EnvelopeSet backup = env;
  try {
    return Refiner(env, side, data, opt).run(index);
  } catch (const InconsistentData&) {
    env = backup;
    RefineReport rep;
    rep.dropped = true;
    return rep;
  }
}

EnvelopeSet construct(const Dataset& data, const SideInfo& side, const RefineOptions& opt,
                      Layout layout) {
  EnvelopeSet env = seed_envelopes(side, layout);
  for (std::size_t i = 0; i < data.size(); ++i) refine(env, side, data, i, opt);
  return env;
}

DiffInclusion::DiffInclusion(SideInfo side, InclusionOptions opt)
    : side_((side.validate(), std::move(side))),
      opt_(opt),
      tier_(opt.tier),
      plain_model_(side_, Layout::Plain) {
  plain_ = seed_envelopes(side_, Layout::Plain);
  if (tier_ >= SideTier::KnownTerms && side_.known_terms && !side_.known_terms->factors.empty()) {
    factored_model_.emplace(side_, Layout::Factored);
    factored_ = seed_envelopes(side_, Layout::Factored);
  }
  if (tier_ >= SideTier::Constraints && !side_.constraints.empty())
    constrained_ = seed_envelopes(side_, Layout::Plain);
}

RefineReport DiffInclusion::observe(double t, const DataPoint& dp) {
  data_.append(t, dp);
  const std::size_t idx = data_.size() - 1;
  RefineOptions base = opt_.refine;
  base.use_constraints = false;
  RefineOptions with_c = opt_.refine;
  with_c.use_constraints = true;

  if (opt_.refine.on_inconsistent == OnInconsistent::Fail) {
    RefineReport rep = refine(plain_, side_, data_, idx, base);
    if (factored_) refine(*factored_, side_, data_, idx, base);
    if (constrained_) refine(*constrained_, side_, data_, idx, with_c);
    return rep;
  }
  const EnvelopeSet plain_backup = plain_;
  const auto factored_backup = factored_;
  RefineReport rep = refine(plain_, side_, data_, idx, base);
  bool dropped = rep.dropped;
  if (!dropped && factored_) dropped = refine(*factored_, side_, data_, idx, base).dropped;
  if (!dropped && constrained_) dropped = refine(*constrained_, side_, data_, idx, with_c).dropped;
  if (dropped) {
    plain_ = plain_backup;
    factored_ = factored_backup;
    dropped_.push_back(idx);
    rep = RefineReport{};
    rep.dropped = true;
  }
  return rep;
}

IntervalMatrix DiffInclusion::cofactors(const IntervalVector& A) const {
  if (!factored_) throw ConfigError("inclusion: no known terms in this inclusion");
  return envelope_eval_terms(*factored_, *factored_model_, A);
}

FieldEnclosure DiffInclusion::field(const IntervalVector& A, const IntervalVector& U) const {
  const std::size_t n = side_.n, d = side_.d();
  FieldEnclosure fe;
  const IntervalMatrix C = envelope_eval_terms(plain_, plain_model_, A);
  EnvelopeRecord tmp{{}, C, std::nullopt};
  fe.F = tmp.CF();
  fe.G = tmp.CG();
  auto narrow = [](Interval& dst, const Interval& src) {
    const auto v = intersect(dst, src);
    if (!v) throw EmptyEnvelope("inclusion: side-information tiers give disjoint enclosures", {});
    dst = *v;
  };
  if (constrained_) {
    const IntervalMatrix C2 = envelope_eval_terms(*constrained_, plain_model_, A);
    for (std::size_t k = 0; k < n; ++k) {
      narrow(fe.F[k], C2(0, k));
      for (std::size_t p = 0; p < d; ++p) narrow(fe.G(p, k), C2(p + 1, k));
    }
  }
  if (factored_) {
    const IntervalMatrix cof = envelope_eval_terms(*factored_, *factored_model_, A);
    const auto& factors = side_.known_terms->factors;
    const std::vector<Interval> box(A.begin(), A.end());
    IntervalVector Fs(n, Interval(0.0));
    IntervalMatrix Gs(d, n, Interval(0.0));
    for (std::size_t s = 0; s < factors.size(); ++s)
      for (std::size_t k = 0; k < n; ++k) {
        const auto kv = expr::eval(factors[s].known[k], box);
        const Interval known = kv ? *kv : Interval::entire();
        const Interval term = known * cof(s, k);
        if (factors[s].monomial < 0)
          Fs[k] += term;
        else
          Gs(factors[s].monomial, k) += term;
      }
    for (std::size_t k = 0; k < n; ++k) {
      narrow(fe.F[k], Fs[k]);
      for (std::size_t p = 0; p < d; ++p) narrow(fe.G(p, k), Gs(p, k));
    }
  }
  if (constrained_) {
    ConstraintContext ctx;
    ctx.x = A;
    ctx.u = U;
    ctx.xdot = fe.F;
    for (std::size_t p = 0; p < d; ++p) {
      const Interval mono = monomial_ext(U, side_.exponents[p]);
      for (std::size_t k = 0; k < n; ++k) ctx.xdot[k] += fe.G(p, k) * mono;
    }
    ctx.F = fe.F;
    ctx.G = fe.G;
    ctx.JF = lipschitz_jacobian(side_, side_.lipschitz_f);
    for (std::size_t p = 0; p < d; ++p)
      ctx.JG.push_back(lipschitz_jacobian(side_, side_.lipschitz_g.row(p)));
    try {
      apply_algebraic_contraction(ctx, side_.constraints, side_);
    } catch (const EmptyAfterContraction& e) {
      throw EmptyEnvelope(e.what(), {});
    }
    fe.F = ctx.F;
    fe.G = ctx.G;
    fe.xdot = ctx.xdot;
  }
  return fe;
}

IntervalVector DiffInclusion::eval(const IntervalVector& A, const IntervalVector& U) const {
  if (U.size() != side_.m) throw DimensionMismatch("inclusion: control box dimension mismatch");
  const FieldEnclosure fe = field(A, U);
  IntervalVector h = fe.F;
  for (std::size_t p = 0; p < side_.d(); ++p) {
    const Interval mono = monomial_ext(U, side_.exponents[p]);
    for (std::size_t k = 0; k < side_.n; ++k) h[k] += fe.G(p, k) * mono;
  }
  if (fe.xdot) {
    const auto v = intersect(h, *fe.xdot);
    if (!v) throw EmptyEnvelope("inclusion: constrained derivative enclosure is empty", {});
    h = *v;
  }
  return h;
}

IntervalVector inclusion_eval(const DiffInclusion& di, const IntervalVector& A,
                              const IntervalVector& u) {
  return di.eval(A, u);
}

}  // namespace ddc
