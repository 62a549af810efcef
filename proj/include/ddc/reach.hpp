#pragma once

// Validated one-step reachability for the differential inclusion: Picard
// rough enclosure, second-order interval Taylor step, Jacobian enclosures and
// reachability under the whole control set.

#include <vector>

#include "ddc/inclusion.hpp"

namespace ddc {

struct JacobianEnclosure {
  IntervalMatrix Jf;               // n x n
  std::vector<IntervalMatrix> Jg;  // d of n x n
};

/// Entrywise enclosures of df/dx and dg_p/dx over P. Uses the factored form
/// when known terms are present and contracts with the side constraints.
JacobianEnclosure jacobian_enclosures(const DiffInclusion& di, const IntervalVector& P,
                                      const IntervalVector& U);

struct ReachOptions {
  int max_iters = 30;           // inflation iterations before EnclosureFailure
  double inflate_rel = 0.05;
  double inflate_abs = 1e-9;
  int contract_iters = 50;      // tightening passes after validation
  double contract_tol = 1e-12;  // relative width change that stops tightening
};

struct RoughEnclosure {
  IntervalVector P;
  int iterations = 0;
};

/// Box P with R + [0,dt] h(P,U) ⊆ P ⊆ X. Throws EnclosureFailure.
RoughEnclosure rough_enclosure(const DiffInclusion& di, const IntervalVector& R,
                               const IntervalVector& U, double dt, const ReachOptions& opt = {});

struct ReachStep {
  IntervalVector R_next;
  IntervalVector P;
  IntervalMatrix Jf;
  std::vector<IntervalMatrix> Jg;
  double dt = 0.0;
  bool clipped = false;    // the Taylor box left X and was intersected with it
  bool beyond_P = false;   // the Taylor box was not inside P (intersected with it)
  int picard_iterations = 0;
};

ReachStep reach_step(const DiffInclusion& di, const IntervalVector& R, const IntervalVector& U,
                     double dt, const ReachOptions& opt = {});

/// Boxes R^{j+1}, ..., R^{j+N+1} reachable from R under any controls in U.
/// EnclosureFailure carries the failing step (0-based).
std::vector<IntervalVector> reach_over_controls(const DiffInclusion& di, const IntervalVector& R,
                                                const IntervalVector& U, double dt, std::size_t N,
                                                const ReachOptions& opt = {});

/// Lc * (||wd(R^{j+N+1})||_2 + 2 * sum_{q=j+1}^{j+N} ||wd(R^q)||_2) for the list
/// of widths of R^{j+1}..R^{j+N+1}.
double suboptimality_bound(const std::vector<Vec>& widths, double Lc);

}  // namespace ddc
