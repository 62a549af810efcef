#pragma once

// Data-driven over-approximation of the unknown vector field
//   xdot = f(x) + sum_p g_p(x) u^{alpha_p}
// from samples along one trajectory plus side information.
//
// Internally every dynamics form is handled as a sum of "terms": component k
// of xdot equals sum_t a_{t,k}(x,u) * phi_{t,k}(x), where a is known and each
// phi_{t,k} is unknown with a Lipschitz bound. The plain form has terms
// (f, g_1, ..., g_d) with coefficients (1, u^{alpha_1}, ...). The factored form
// has one term per known factor.

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "ddc/error.hpp"
#include "ddc/expr.hpp"
#include "ddc/interval.hpp"
#include "ddc/linalg.hpp"

namespace ddc {

struct DataPoint {
  Vec x;
  Vec xdot;
  Vec u;
  /// Optional half-width added around xdot (finite-difference derivatives).
  Vec xdot_pad;

  IntervalVector xdot_box() const;
};

class Dataset {
 public:
  /// Throws std::invalid_argument if t does not increase or dimensions change.
  void append(double t, DataPoint p);
  std::size_t size() const { return points_.size(); }
  bool empty() const { return points_.empty(); }
  const DataPoint& operator[](std::size_t i) const { return points_[i]; }
  const std::vector<DataPoint>& points() const { return points_; }
  const std::vector<double>& timestamps() const { return times_; }
  Dataset prefix(std::size_t count) const;

 private:
  std::vector<DataPoint> points_;
  std::vector<double> times_;
};

/// One product known(x) .* cofactor(x) in the factored dynamics.
struct KnownFactor {
  /// -1 for a drift term, otherwise the index p of the multiplying monomial.
  int monomial = -1;
  /// Known components, expressions in the state variables x_0..x_{n-1}.
  std::vector<expr::Expr> known;
  /// Lipschitz bounds (weighted norm) of the unknown cofactor, per component.
  Vec lipschitz;
  /// |cofactor_k(x)| <= bound on the state domain.
  double bound = 0.0;
  /// d known_k / d x_l, filled by make_known_factor.
  std::vector<std::vector<expr::Expr>> jacobian;
};

KnownFactor make_known_factor(int monomial, std::vector<expr::Expr> known, Vec lipschitz,
                              double bound);

struct KnownTermsSpec {
  std::vector<KnownFactor> factors;
};

/// Variables a constraint may reference. Indices are laid out by
/// ConstraintVars; build expressions with its helpers.
class ConstraintVars {
 public:
  ConstraintVars(std::size_t n, std::size_t m, std::size_t d) : n_(n), m_(m), d_(d) {}

  std::size_t count() const { return jg_off() + d_ * n_ * n_; }

  expr::Expr x(std::size_t i) const { return expr::var(i); }
  expr::Expr u(std::size_t i) const { return expr::var(n_ + i); }
  expr::Expr xdot(std::size_t k) const { return expr::var(n_ + m_ + k); }
  expr::Expr f(std::size_t k) const { return expr::var(f_off() + k); }
  expr::Expr g(std::size_t p, std::size_t k) const { return expr::var(g_off() + p * n_ + k); }
  expr::Expr jf(std::size_t k, std::size_t l) const { return expr::var(jf_off() + k * n_ + l); }
  expr::Expr jg(std::size_t p, std::size_t k, std::size_t l) const {
    return expr::var(jg_off() + (p * n_ + k) * n_ + l);
  }

  std::size_t n() const { return n_; }
  std::size_t m() const { return m_; }
  std::size_t d() const { return d_; }
  std::size_t f_off() const { return 2 * n_ + m_; }
  std::size_t g_off() const { return 3 * n_ + m_; }
  std::size_t jf_off() const { return g_off() + d_ * n_; }
  std::size_t jg_off() const { return jf_off() + n_ * n_; }

 private:
  std::size_t n_, m_, d_;
};

struct ConstraintSpec {
  std::string name;
  expr::Expr expr;
  expr::Relation relation = expr::Relation::GreaterEq;
};

struct SideInfo {
  std::size_t n = 0;  // state dimension
  std::size_t m = 0;  // control dimension
  Vec lipschitz_f;                     // n
  Matrix lipschitz_g;                  // d x n
  Vec weights;                         // n, all > 0
  std::vector<MultiIndex> exponents;   // d multi-indices of length m
  double bound = 0.0;                  // M: |f_k|, |g_pk| <= M on X
  IntervalVector X;                    // state domain
  IntervalVector U;                    // control domain
  std::optional<KnownTermsSpec> known_terms;
  std::vector<ConstraintSpec> constraints;
  /// Entrywise Jacobian bound [-1,1] * fbar_k * w_l when true, w_k otherwise.
  bool jacobian_weight_by_column = true;

  std::size_t d() const { return exponents.size(); }
  ConstraintVars vars() const { return ConstraintVars(n, m, d()); }
  /// Throws ConfigError when dimensions or bounds are inconsistent.
  void validate() const;
};

struct EnvelopeRecord {
  Vec x;
  IntervalMatrix C;                   // terms x n
  std::optional<std::size_t> sample;  // dataset index; empty for the seed

  /// Plain form accessors: row 0 is CF, rows 1..d are CG.
  IntervalVector CF() const { return C.row(0); }
  IntervalMatrix CG() const;
};

enum class Layout { Plain, Factored };

struct EnvelopeSet {
  Layout layout = Layout::Plain;
  std::vector<EnvelopeRecord> records;
  std::size_t size() const { return records.size(); }
};

/// Term structure shared by envelope evaluation and contraction.
class TermModel {
 public:
  TermModel(const SideInfo& side, Layout layout);

  std::size_t terms() const { return terms_; }
  std::size_t n() const { return n_; }
  Layout layout() const { return layout_; }
  double lipschitz(std::size_t t, std::size_t k) const { return lip_(t, k); }
  double bound(std::size_t t) const { return bound_[t]; }
  const Vec& weights() const { return weights_; }
  /// Enclosure of a_{t,k} over the boxes (terms x n).
  IntervalMatrix coefficients(const IntervalVector& A, const IntervalVector& U) const;

 private:
  Layout layout_;
  std::size_t terms_ = 0, n_ = 0;
  Matrix lip_;
  Vec bound_;
  Vec weights_;
  std::vector<MultiIndex> exponents_;
  std::vector<KnownFactor> factors_;
};

/// Initial envelope set: the single record (mid(X), [-M,M]).
EnvelopeSet seed_envelopes(const SideInfo& side, Layout layout = Layout::Plain);

/// Envelope evaluation for a term model: row t, column k encloses phi_{t,k} over A.
IntervalMatrix envelope_eval_terms(const EnvelopeSet& env, const TermModel& tm,
                                   const IntervalVector& A);

/// Plain form: (f(A), [g_{p,k}(A)]).
std::pair<IntervalVector, IntervalMatrix> envelope_eval(const EnvelopeSet& env,
                                                        const SideInfo& side,
                                                        const IntervalVector& A);

/// Single forward-backward pass of the per-sample contraction over terms.
/// Throws InconsistentData (sample index 0; callers rethrow with context).
IntervalMatrix contract_terms(const IntervalMatrix& C, const IntervalMatrix& coef,
                              const IntervalVector& xdot);

/// Plain form of the per-sample contraction.
std::pair<IntervalVector, IntervalMatrix> contract_datapoint(const DataPoint& dp,
                                                             const IntervalVector& F,
                                                             const IntervalMatrix& G,
                                                             const SideInfo& side);

/// Enclosures a constraint may read or narrow.
struct ConstraintContext {
  IntervalVector x, u, xdot;
  IntervalVector F;     // n
  IntervalMatrix G;     // d x n
  IntervalMatrix JF;    // n x n
  std::vector<IntervalMatrix> JG;  // d of n x n
};

/// Jacobian enclosure implied by Lipschitz bounds alone: entry (k,l) is
/// [-1,1] * bounds_k * w_l (or w_k, see SideInfo).
IntervalMatrix lipschitz_jacobian(const SideInfo& side, const Vec& bounds);

/// HC4 round-robin of all side constraints over the context. Returns true when
/// something shrank. Throws EmptyAfterContraction.
bool apply_algebraic_contraction(ConstraintContext& ctx, const std::vector<ConstraintSpec>& cs,
                                 const SideInfo& side);

enum class OnInconsistent { Fail, Drop };

struct RefineOptions {
  double rel_tol = 1e-6;
  int max_sweeps = 20;
  bool strict = false;  // throw MaxSweepsExceeded when the cap is hit
  OnInconsistent on_inconsistent = OnInconsistent::Fail;
  bool use_constraints = false;  // contract plain records with the side constraints
};

struct RefineReport {
  int sweeps = 0;
  bool cap_hit = false;
  bool dropped = false;
};

/// Adds the record of the new sample, then sweeps every data-backed record
/// until the relative width decrease drops below rel_tol or the sweep cap is
/// hit. `data` already contains the new point at index `index`.
RefineReport refine(EnvelopeSet& env, const SideInfo& side, const Dataset& data, std::size_t index,
                    const RefineOptions& opt = {});

/// Seed, then refine with every sample in order.
EnvelopeSet construct(const Dataset& data, const SideInfo& side, const RefineOptions& opt = {},
                      Layout layout = Layout::Plain);

enum class SideTier { Lipschitz = 1, KnownTerms = 2, Constraints = 3 };

struct InclusionOptions {
  SideTier tier = SideTier::Constraints;  // capped by what SideInfo provides
  RefineOptions refine;
};

struct FieldEnclosure {
  IntervalVector F;   // n
  IntervalMatrix G;   // d x n
  std::optional<IntervalVector> xdot;  // set when constraints narrowed xdot itself
};

/// The differential inclusion xdot ∈ h(x,u), kept current with the data.
class DiffInclusion {
 public:
  explicit DiffInclusion(SideInfo side, InclusionOptions opt = {});

  /// Appends the sample and refines every envelope set. Returns the plain report.
  RefineReport observe(double t, const DataPoint& dp);

  const SideInfo& side() const { return side_; }
  const Dataset& data() const { return data_; }
  SideTier tier() const { return tier_; }
  const EnvelopeSet& plain() const { return plain_; }
  const EnvelopeSet* factored() const { return factored_ ? &*factored_ : nullptr; }
  const EnvelopeSet* constrained() const { return constrained_ ? &*constrained_ : nullptr; }
  const std::vector<std::size_t>& dropped() const { return dropped_; }

  bool has_known_terms() const { return factored_.has_value(); }
  bool has_constraints() const { return tier_ == SideTier::Constraints; }

  /// Enclosures of f and g over A (controls U only provide constraint context).
  FieldEnclosure field(const IntervalVector& A, const IntervalVector& U) const;
  /// Cofactor enclosures of the factored form over A (factors x n).
  IntervalMatrix cofactors(const IntervalVector& A) const;
  /// h(A, U) = f(A) + sum_p g_p(A) U^{alpha_p}.
  IntervalVector eval(const IntervalVector& A, const IntervalVector& U) const;

 private:
  SideInfo side_;
  InclusionOptions opt_;
  SideTier tier_;
  TermModel plain_model_;
  std::optional<TermModel> factored_model_;
  Dataset data_;
  EnvelopeSet plain_;
  std::optional<EnvelopeSet> factored_;
  std::optional<EnvelopeSet> constrained_;
  std::vector<std::size_t> dropped_;
};

IntervalVector inclusion_eval(const DiffInclusion& di, const IntervalVector& A,
                              const IntervalVector& u);

}  // namespace ddc
