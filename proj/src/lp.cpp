#include "ddc/lp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "ddc/error.hpp"

namespace ddc::lp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// x_j = offset + sign * y_a (- y_b when split)
struct VarMap {
  double offset = 0.0;
  double sign = 1.0;
  std::size_t a = 0;
  std::size_t b = static_cast<std::size_t>(-1);
};

class Tableau {
 public:
  Tableau(std::size_t rows, std::size_t cols)
      : rows_(rows), cols_(cols), t_((rows + 1) * (cols + 1), 0.0), basis_(rows) {}

  double& at(std::size_t r, std::size_t c) { return t_[r * (cols_ + 1) + c]; }
  double at(std::size_t r, std::size_t c) const { return t_[r * (cols_ + 1) + c]; }
  double& rhs(std::size_t r) { return at(r, cols_); }
  double& cost(std::size_t c) { return at(rows_, c); }
  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::vector<std::size_t>& basis() { return basis_; }

  void pivot(std::size_t r, std::size_t c) {
    const double p = at(r, c);
    for (std::size_t j = 0; j <= cols_; ++j) at(r, j) /= p;
    at(r, c) = 1.0;
    for (std::size_t i = 0; i <= rows_; ++i) {
      if (i == r) continue;
      const double f = at(i, c);
      if (f == 0.0) continue;
      for (std::size_t j = 0; j <= cols_; ++j) at(i, j) -= f * at(r, j);
      at(i, c) = 0.0;
    }
    basis_[r] = c;
  }

 private:
  std::size_t rows_, cols_;
  std::vector<double> t_;
  std::vector<std::size_t> basis_;
};

enum class PhaseResult { Optimal, Unbounded };

// Primal simplex on the cost row already stored in the tableau. Columns with
// allowed[c] == false never enter.
PhaseResult run_phase(Tableau& T, const std::vector<bool>& allowed, const SolveOptions& opt,
                      int& iterations, int max_iterations) {
  const std::size_t m = T.rows(), n = T.cols();
  const std::size_t degenerate_limit = 10 * (m + n);
  std::size_t degenerate = 0;
  bool bland = false;
  while (true) {
    std::size_t enter = n;
    double best = -opt.opt_tol;
    for (std::size_t c = 0; c < n; ++c) {
      if (!allowed[c]) continue;
      const double d = T.cost(c);
      if (d < best) {
        enter = c;
        if (bland) break;
        best = d;
      }
    }
    if (enter == n) return PhaseResult::Optimal;

    std::size_t leave = m;
    double ratio = kInf;
    for (std::size_t r = 0; r < m; ++r) {
      const double a = T.at(r, enter);
      if (a <= opt.pivot_tol) continue;
      const double q = std::max(T.rhs(r), 0.0) / a;
      const double tie_tol = 1e-12 * (1.0 + std::fabs(ratio));
      if (leave == m || q < ratio - tie_tol) {
        leave = r;
        ratio = q;
      } else if (q <= ratio + tie_tol) {
        const bool better = bland ? T.basis()[r] < T.basis()[leave] : a > T.at(leave, enter);
        if (better) leave = r;
        ratio = std::min(ratio, q);
      }
    }
    if (leave == m) return PhaseResult::Unbounded;
    if (std::fabs(T.at(leave, enter)) < opt.pivot_tol)
      throw NumericalBreakdown("lp: pivot element below tolerance");

    if (ratio <= opt.feas_tol) {
      if (++degenerate > degenerate_limit) bland = true;
    } else {
      degenerate = 0;
    }
    T.pivot(leave, enter);
    if (++iterations > max_iterations)
      throw NumericalBreakdown("lp: simplex iteration limit reached");
  }
}

}  // namespace

std::size_t LinearProgram::add_var(double cost, double lo, double hi) {
  objective.push_back(cost);
  lower.push_back(lo);
  upper.push_back(hi);
  for (auto& r : rows) r.a.push_back(0.0);
  return objective.size() - 1;
}

void LinearProgram::add_row(Vec a, Relation r, double rhs) {
  if (a.size() != vars()) throw DimensionMismatch("lp: row length differs from variable count");
  rows.push_back({std::move(a), r, rhs});
}

void LinearProgram::validate() const {
  const std::size_t n = vars();
  if (lower.size() != n || upper.size() != n) throw DimensionMismatch("lp: bounds length mismatch");
  for (double c : objective)
    if (!std::isfinite(c)) throw ConfigError("lp: objective coefficients must be finite");
  for (const auto& r : rows) {
    if (r.a.size() != n) throw DimensionMismatch("lp: row length mismatch");
    for (double v : r.a)
      if (!std::isfinite(v)) throw ConfigError("lp: row coefficients must be finite");
    if (!std::isfinite(r.rhs)) throw ConfigError("lp: right-hand sides must be finite");
  }
  for (std::size_t j = 0; j < n; ++j)
    if (std::isnan(lower[j]) || std::isnan(upper[j]) || lower[j] == kInf || upper[j] == -kInf)
      throw ConfigError("lp: malformed variable bounds");
}

double max_violation(const LinearProgram& lp, const Vec& x) {
  double v = 0.0;
  for (std::size_t j = 0; j < lp.vars(); ++j) {
    v = std::max(v, lp.lower[j] - x[j]);
    v = std::max(v, x[j] - lp.upper[j]);
  }
  for (const auto& r : lp.rows) {
    double s = 0.0;
    for (std::size_t j = 0; j < lp.vars(); ++j) s += r.a[j] * x[j];
    const double d = s - r.rhs;
    if (r.relation == Relation::LessEq) v = std::max(v, d);
    else if (r.relation == Relation::GreaterEq) v = std::max(v, -d);
    else v = std::max(v, std::fabs(d));
  }
  return v;
}

LpSolution solve(const LinearProgram& lp, const SolveOptions& opt) {
  lp.validate();
  const std::size_t n = lp.vars();
  LpSolution sol;
  for (std::size_t j = 0; j < n; ++j)
    if (lp.lower[j] > lp.upper[j]) {
      sol.status = Status::Infeasible;
      return sol;
    }

  // Substitute bounds: every structural column y >= 0.
  std::vector<VarMap> map(n);
  std::size_t ny = 0;
  struct ExtraRow {
    std::size_t col;
    double ub;
  };
  std::vector<ExtraRow> extra;
  for (std::size_t j = 0; j < n; ++j) {
    const double lo = lp.lower[j], hi = lp.upper[j];
    VarMap& v = map[j];
    if (std::isfinite(lo)) {
      v.offset = lo;
      v.a = ny++;
      if (std::isfinite(hi)) extra.push_back({v.a, hi - lo});
    } else if (std::isfinite(hi)) {
      v.offset = hi;
      v.sign = -1.0;
      v.a = ny++;
    } else {
      v.a = ny++;
      v.b = ny++;
    }
  }

  struct StdRow {
    Vec a;     // over y
    double slack = 0.0;  // coefficient of this row's slack (0 for equality)
    double b = 0.0;
  };
  std::vector<StdRow> srows;
  for (const auto& r : lp.rows) {
    StdRow s;
    s.a.assign(ny, 0.0);
    s.b = r.rhs;
    for (std::size_t j = 0; j < n; ++j) {
      const double c = r.a[j];
      if (c == 0.0) continue;
      s.b -= c * map[j].offset;
      s.a[map[j].a] += c * map[j].sign;
      if (map[j].b != static_cast<std::size_t>(-1)) s.a[map[j].b] -= c;
    }
    s.slack = r.relation == Relation::LessEq ? 1.0 : (r.relation == Relation::GreaterEq ? -1.0 : 0.0);
    srows.push_back(std::move(s));
  }
  for (const auto& e : extra) {
    StdRow s;
    s.a.assign(ny, 0.0);
    s.a[e.col] = 1.0;
    s.slack = 1.0;
    s.b = e.ub;
    srows.push_back(std::move(s));
  }
  const std::size_t m = srows.size();
  std::size_t nslack = 0;
  for (auto& s : srows) {
    if (s.b < 0) {
      for (double& v : s.a) v = -v;
      s.slack = -s.slack;
      s.b = -s.b;
    }
    if (s.slack != 0.0) ++nslack;
  }
  std::size_t nart = 0;
  for (const auto& s : srows)
    if (s.slack != 1.0) ++nart;

  const std::size_t cols = ny + nslack + nart;
  Tableau T(m, cols);
  std::vector<bool> is_art(cols, false);
  std::size_t next_slack = ny, next_art = ny + nslack;
  for (std::size_t i = 0; i < m; ++i) {
    const auto& s = srows[i];
    for (std::size_t j = 0; j < ny; ++j) T.at(i, j) = s.a[j];
    T.rhs(i) = s.b;
    std::size_t sc = cols;
    if (s.slack != 0.0) {
      sc = next_slack++;
      T.at(i, sc) = s.slack;
    }
    if (s.slack == 1.0) {
      T.basis()[i] = sc;
    } else {
      const std::size_t ac = next_art++;
      T.at(i, ac) = 1.0;
      is_art[ac] = true;
      T.basis()[i] = ac;
    }
  }

  const int max_it = opt.max_iterations > 0 ? opt.max_iterations : static_cast<int>(50 * (m + cols) + 1000);
  double bscale = 1.0;
  for (const auto& s : srows) bscale = std::max(bscale, std::fabs(s.b));

  // Phase 1: minimize the sum of artificials.
  if (nart > 0) {
    for (std::size_t c = 0; c <= cols; ++c) T.at(m, c) = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      if (!is_art[T.basis()[i]]) continue;
      for (std::size_t c = 0; c <= cols; ++c)
        if (!is_art[c] || c == cols) T.at(m, c) -= T.at(i, c);
    }
    std::vector<bool> allowed(cols, true);
    run_phase(T, allowed, opt, sol.iterations, max_it);
    double infeas = 0.0;
    for (std::size_t i = 0; i < m; ++i)
      if (is_art[T.basis()[i]]) infeas += std::max(T.rhs(i), 0.0);
    if (infeas > opt.feas_tol * bscale) {
      sol.status = Status::Infeasible;
      return sol;
    }
    // Drive zero-level artificials out of the basis where possible.
    for (std::size_t i = 0; i < m; ++i) {
      if (!is_art[T.basis()[i]]) continue;
      std::size_t best = cols;
      double mag = 1e-9;
      for (std::size_t c = 0; c < cols; ++c)
        if (!is_art[c] && std::fabs(T.at(i, c)) > mag) {
          mag = std::fabs(T.at(i, c));
          best = c;
        }
      if (best < cols) T.pivot(i, best);
    }
  }

  // Phase 2 cost row: c_j - c_B B^{-1} A_j.
  Vec cy(cols, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    const double c = lp.objective[j];
    cy[map[j].a] += c * map[j].sign;
    if (map[j].b != static_cast<std::size_t>(-1)) cy[map[j].b] -= c;
  }
  for (std::size_t c = 0; c < cols; ++c) T.at(m, c) = cy[c];
  T.at(m, cols) = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const double cb = cy[T.basis()[i]];
    if (cb == 0.0) continue;
    for (std::size_t c = 0; c <= cols; ++c) T.at(m, c) -= cb * T.at(i, c);
  }
  std::vector<bool> allowed(cols);
  for (std::size_t c = 0; c < cols; ++c) allowed[c] = !is_art[c];
  if (run_phase(T, allowed, opt, sol.iterations, max_it) == PhaseResult::Unbounded) {
    sol.status = Status::Unbounded;
    return sol;
  }

  Vec y(cols, 0.0);
  for (std::size_t i = 0; i < m; ++i) y[T.basis()[i]] = std::max(T.rhs(i), 0.0);
  sol.x.assign(n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    double v = map[j].offset + map[j].sign * y[map[j].a];
    if (map[j].b != static_cast<std::size_t>(-1)) v -= y[map[j].b];
    sol.x[j] = std::clamp(v, lp.lower[j], lp.upper[j]);
  }
  double xscale = 1.0;
  for (double v : sol.x) xscale = std::max(xscale, std::fabs(v));
  if (max_violation(lp, sol.x) > opt.feas_tol * std::max(bscale, xscale))
    throw NumericalBreakdown("lp: optimal basis violates the constraints beyond tolerance");
  sol.status = Status::Optimal;
  sol.objective_value = lp.constant;
  for (std::size_t j = 0; j < n; ++j) sol.objective_value += lp.objective[j] * sol.x[j];
  return sol;
}

void write_text(std::ostream& os, const LinearProgram& lp) {
  os << "minimize";
  for (double c : lp.objective) os << ' ' << c;
  os << " + " << lp.constant << '\n';
  for (const auto& r : lp.rows) {
    os << "row";
    for (double v : r.a) os << ' ' << v;
    os << (r.relation == Relation::LessEq ? " <= " : r.relation == Relation::Equal ? " = " : " >= ")
       << r.rhs << '\n';
  }
  for (std::size_t j = 0; j < lp.vars(); ++j)
    os << "bound " << j << ' ' << lp.lower[j] << ' ' << lp.upper[j] << '\n';
}

Subproblem build_subproblem(const SubproblemData& d) {
  const std::size_t n = d.n, m = d.m, S = d.stages;
  if (d.xs.size() != S + 1 || d.us.size() != S || d.A.size() != S || d.B.size() != S ||
      d.h0.size() != S || d.cost.size() != S || d.grad.size() != S || d.X.size() != n ||
      d.U.size() != m)
    throw DimensionMismatch("lp: subproblem horizon dimensions mismatch");
  for (std::size_t q = 0; q < S; ++q) {
    if (d.A[q].rows() != n || d.A[q].cols() != n || d.B[q].rows() != n || d.B[q].cols() != m ||
        d.grad[q].size() != 2 * n + m || d.h0[q].size() != n || d.us[q].size() != m)
      throw DimensionMismatch("lp: subproblem stage dimensions mismatch");
  }
  for (const auto& x : d.xs)
    if (x.size() != n) throw DimensionMismatch("lp: subproblem state dimension mismatch");

  Subproblem sp;
  sp.layout = SubproblemLayout{n, m, S};
  LinearProgram& lp = sp.lp;
  for (std::size_t q = 0; q < S; ++q) lp.constant += d.cost[q];

  // Δx^{q+1}: x^s + Δx ∈ X.
  for (std::size_t q = 0; q < S; ++q)
    for (std::size_t i = 0; i < n; ++i)
      lp.add_var(0.0, d.X[i].lo() - d.xs[q + 1][i], d.X[i].hi() - d.xs[q + 1][i]);
  // Δu^q: u^s + Δu ∈ U, box trust region folded into the bounds.
  for (std::size_t q = 0; q < S; ++q)
    for (std::size_t i = 0; i < m; ++i) {
      double lo = d.U[i].lo() - d.us[q][i], hi = d.U[i].hi() - d.us[q][i];
      if (d.trust_norm == Norm::Inf) {
        lo = std::max(lo, -d.radius);
        hi = std::min(hi, d.radius);
      }
      lp.add_var(0.0, std::min(lo, 0.0), std::max(hi, 0.0));
    }
  // v^q, free.
  for (std::size_t q = 0; q < S; ++q)
    for (std::size_t i = 0; i < n; ++i) lp.add_var(0.0, -kInf, kInf);

  // Linear cost gradient.
  const auto& L = sp.layout;
  for (std::size_t q = 0; q < S; ++q) {
    const Vec& g = d.grad[q];
    for (std::size_t i = 0; i < n; ++i) {
      if (q > 0) lp.objective[L.dx(q - 1, i)] += g[i];
      lp.objective[L.dx(q, i)] += g[n + m + i];
    }
    for (std::size_t i = 0; i < m; ++i) lp.objective[L.du(q, i)] += g[n + i];
  }

  // Penalty epigraph.
  if (d.penalty_norm == Norm::One) {
    for (std::size_t q = 0; q < S; ++q)
      for (std::size_t i = 0; i < n; ++i) {
        const std::size_t t = lp.add_var(d.lambda, 0.0, kInf);
        Vec a(lp.vars(), 0.0);
        a[t] = 1.0;
        a[L.v(q, i)] = -1.0;
        lp.add_row(a, Relation::GreaterEq, 0.0);
        a[L.v(q, i)] = 1.0;
        lp.add_row(a, Relation::GreaterEq, 0.0);
      }
  } else {
    for (std::size_t q = 0; q < S; ++q) {
      const std::size_t t = lp.add_var(d.lambda, 0.0, kInf);
      for (std::size_t i = 0; i < n; ++i) {
        Vec a(lp.vars(), 0.0);
        a[t] = 1.0;
        a[L.v(q, i)] = -1.0;
        lp.add_row(a, Relation::GreaterEq, 0.0);
        a[L.v(q, i)] = 1.0;
        lp.add_row(a, Relation::GreaterEq, 0.0);
      }
    }
  }

  // 1-norm trust region over all Δu.
  if (d.trust_norm == Norm::One) {
    std::vector<std::size_t> e;
    for (std::size_t q = 0; q < S; ++q)
      for (std::size_t i = 0; i < m; ++i) {
        const std::size_t t = lp.add_var(0.0, 0.0, kInf);
        e.push_back(t);
        Vec a(lp.vars(), 0.0);
        a[t] = 1.0;
        a[L.du(q, i)] = -1.0;
        lp.add_row(a, Relation::GreaterEq, 0.0);
        a[L.du(q, i)] = 1.0;
        lp.add_row(a, Relation::GreaterEq, 0.0);
      }
    Vec a(lp.vars(), 0.0);
    for (std::size_t t : e) a[t] = 1.0;
    lp.add_row(a, Relation::LessEq, d.radius);
  }

  // Linearized dynamics:
  // Δx^{q+1} - A Δx^q - B Δu^q - v^q = h0^q - x^{q+1,s}.
  for (std::size_t q = 0; q < S; ++q)
    for (std::size_t k = 0; k < n; ++k) {
      Vec a(lp.vars(), 0.0);
      a[L.dx(q, k)] = 1.0;
      if (q > 0)
        for (std::size_t l = 0; l < n; ++l) a[L.dx(q - 1, l)] -= d.A[q](k, l);
      for (std::size_t l = 0; l < m; ++l) a[L.du(q, l)] -= d.B[q](k, l);
      a[L.v(q, k)] = -1.0;
      lp.add_row(a, Relation::Equal, d.h0[q][k] - d.xs[q + 1][k]);
    }
  return sp;
}

SubproblemStep extract_step(const Subproblem& sp, const Vec& x) {
  const auto& L = sp.layout;
  SubproblemStep s;
  for (std::size_t q = 0; q < L.stages; ++q) {
    Vec dx(L.n), du(L.m), v(L.n);
    for (std::size_t i = 0; i < L.n; ++i) {
      dx[i] = x[L.dx(q, i)];
      v[i] = x[L.v(q, i)];
    }
    for (std::size_t i = 0; i < L.m; ++i) du[i] = x[L.du(q, i)];
    s.dx.push_back(dx);
    s.du.push_back(du);
    s.v.push_back(v);
  }
  return s;
}

}  // namespace ddc::lp
