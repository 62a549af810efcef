#pragma once

// Dense two-phase simplex and the linear subproblem of one trust-region
// iteration.

#include <iosfwd>
#include <vector>

#include "ddc/interval.hpp"
#include "ddc/linalg.hpp"

namespace ddc::lp {

enum class Relation { LessEq, Equal, GreaterEq };

struct Row {
  Vec a;
  Relation relation = Relation::LessEq;
  double rhs = 0.0;
};

struct LinearProgram {
  Vec objective;            // minimize objective . x + constant
  double constant = 0.0;
  std::vector<Row> rows;
  Vec lower, upper;         // per-variable bounds, may be infinite

  std::size_t vars() const { return objective.size(); }
  /// Adds a variable with bounds and cost; returns its index.
  std::size_t add_var(double cost, double lo, double hi);
  void add_row(Vec a, Relation r, double rhs);
  /// Throws DimensionMismatch or ConfigError when malformed.
  void validate() const;
};

enum class Status { Optimal, Infeasible, Unbounded };

struct LpSolution {
  Status status = Status::Infeasible;
  Vec x;
  double objective_value = 0.0;
  int iterations = 0;
};

struct SolveOptions {
  double feas_tol = 1e-8;
  double opt_tol = 1e-9;
  double pivot_tol = 1e-12;  // smaller pivots raise NumericalBreakdown
  int max_iterations = 0;    // 0: 50 * (rows + cols) + 1000
};

/// Throws NumericalBreakdown when a pivot falls below pivot_tol or the
/// solution fails its feasibility / reduced-cost check.
LpSolution solve(const LinearProgram& lp, const SolveOptions& opt = {});

/// Largest violation of rows and bounds at x.
double max_violation(const LinearProgram& lp, const Vec& x);

/// Plain-text dump: objective, rows and bounds, one per line.
void write_text(std::ostream& os, const LinearProgram& lp);

enum class Norm { One, Inf };

/// Data of one linearized horizon problem. Stage q = 0..S-1 maps
/// (x^q, u^q) to x^{q+1}; x^0 is fixed.
struct SubproblemData {
  std::size_t n = 0, m = 0, stages = 0;
  std::vector<Vec> xs;     // S+1 states x^{0,s}..x^{S,s}
  std::vector<Vec> us;     // S controls
  std::vector<Matrix> A;   // S of n x n
  std::vector<Matrix> B;   // S of n x m
  std::vector<Vec> h0;     // S selected next states h(x^{q,s}, u^{q,s})
  Vec cost;                // S stage costs c(x^q, u^q, x^{q+1})
  std::vector<Vec> grad;   // S gradients over (x^q, u^q, x^{q+1}), length 2n + m
  double radius = 0.0;
  double lambda = 0.0;
  IntervalVector X, U;
  Norm trust_norm = Norm::Inf;
  Norm penalty_norm = Norm::One;
};

/// Column positions of the subproblem variables.
struct SubproblemLayout {
  std::size_t n = 0, m = 0, stages = 0;
  std::size_t dx(std::size_t q, std::size_t i) const { return q * n + i; }  // Δx^{q+1}
  std::size_t du(std::size_t q, std::size_t i) const { return stages * n + q * m + i; }
  std::size_t v(std::size_t q, std::size_t i) const { return stages * (n + m) + q * n + i; }
};

struct Subproblem {
  LinearProgram lp;
  SubproblemLayout layout;
};

/// Epigraph form of the linearized problem. Throws DimensionMismatch.
Subproblem build_subproblem(const SubproblemData& data);

/// Δx, Δu and v from a solution; the linearized cost is the LP objective.
struct SubproblemStep {
  std::vector<Vec> dx;  // S of n (Δx^{q+1})
  std::vector<Vec> du;  // S of m
  std::vector<Vec> v;   // S of n
};
SubproblemStep extract_step(const Subproblem& sp, const Vec& x);

}  // namespace ddc::lp
