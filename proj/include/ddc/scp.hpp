#pragma once

// Receding-horizon controller: selector over reachable boxes, linearization,
// trust-region sequential LP and the episode driver.

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "ddc/inclusion.hpp"
#include "ddc/lp.hpp"
#include "ddc/reach.hpp"

namespace ddc::scp {

struct Selector {
  Vec theta;
  static Selector uniform(std::size_t n, double theta = 0.5) { return {Vec(n, theta)}; }
  void validate(std::size_t n) const;
};

/// theta * hi + (1 - theta) * lo, clamped into R_next.
Vec select_next_state(const Selector& sel, const IntervalVector& R_next);

struct CostModel {
  using Fn = std::function<double(const Vec& x, const Vec& u, const Vec& xn)>;
  using Grad = std::function<Vec(const Vec& x, const Vec& u, const Vec& xn)>;

  Fn c;
  Grad grad;          // optional; central differences when empty
  double Lc = 0.0;    // Lipschitz constant of c on X x U x X, 2-norm
  double scale = 1.0; // typical |c|; sets the default penalty weight

  double operator()(const Vec& x, const Vec& u, const Vec& xn) const { return c(x, u, xn); }
  /// Gradient over (x, u, xn), length 2n + m.
  Vec gradient(const Vec& x, const Vec& u, const Vec& xn) const;
};

/// Central differences with step 1e-6 * (1 + |z_i|).
Vec numeric_gradient(const CostModel::Fn& c, const Vec& x, const Vec& u, const Vec& xn);

/// c = sum_i q_i (xn_i - ref_i)^2 + sum_l r_l u_l^2 with an analytic gradient
/// and the Lipschitz constant over the boxes.
CostModel quadratic_cost(const Vec& q, const Vec& r, const IntervalVector& X,
                         const IntervalVector& U, const Vec& ref = {});

struct TrustRegionState {
  double r = 0.0;
  double r_min = 0.0;
  double r_max = 0.0;
  double rho_accept = 0.1;
  double rho_good = 0.7;
  double beta_shrink = 0.5;
  double beta_grow = 2.0;
  double lambda = 0.0;
  int max_iters = 30;
  lp::Norm trust_norm = lp::Norm::Inf;
  lp::Norm penalty_norm = lp::Norm::One;

  /// r0 = 0.5 * min_l wd(U_l) / 2, r_min = 1e-4 r0, r_max = max_l wd(U_l),
  /// lambda = 1e3 * cost_scale.
  static TrustRegionState defaults(const IntervalVector& U, double cost_scale);
  /// Throws ConfigError.
  void validate() const;
};

struct Linearization {
  Matrix A;  // n x n
  Matrix B;  // n x m
  Vec h0;    // selected next state
};

struct LinearizeOptions {
  /// Keep the dt^2 / 2 terms of the Taylor step in A and B.
  bool second_order = true;
  ReachOptions reach;
};

/// Point selection (midpoints) of the gradient enclosures of the selected
/// next state at (x_s, u_s). Propagates EnclosureFailure.
Linearization linearize(const DiffInclusion& di, const Selector& sel, const Vec& x_s, const Vec& u_s,
                        double dt, const LinearizeOptions& opt = {});

/// Selected next state h^theta(x, u) from one reach step.
Vec next_state(const DiffInclusion& di, const Selector& sel, const Vec& x, const Vec& u, double dt,
               const ReachOptions& opt = {});

struct ScpIterate {
  Vec x0;                  // x^j, fixed
  std::vector<Vec> xs;     // x^{j+1} .. x^{j+N+1}
  std::vector<Vec> us;     // u^j .. u^{j+N}
  std::vector<Vec> vs;     // penalty slacks, one per stage
  double L = 0.0;          // linearized cost of the last accepted LP
  double J = 0.0;          // realized cost
  std::size_t stages() const { return us.size(); }
};

double vec_norm(const Vec& v, lp::Norm norm);

/// Sum of stage costs plus lambda * sum ||x^{q+1} - h^theta(x^q, u^q)||.
/// Propagates EnclosureFailure.
double realized_cost(const ScpIterate& traj, const CostModel& cm, const DiffInclusion& di,
                     const Selector& sel, double lambda, double dt, lp::Norm penalty_norm = lp::Norm::One,
                     const ReachOptions& opt = {});

enum class Termination { Converged, Stationary, RadiusMin, MaxIters, NoProgress };
std::string to_string(Termination t);

struct IterationRecord {
  double r = 0.0;
  double J_candidate = 0.0;
  double L = 0.0;
  double rho = 0.0;
  bool accepted = false;
  bool lp_optimal = true;
};

struct ScpResult {
  ScpIterate best;
  Termination termination = Termination::MaxIters;
  bool no_progress = false;
  double r_final = 0.0;
  int iterations = 0;
  std::size_t lp_solves = 0;
  std::size_t lp_failures = 0;  // non-optimal status or numerical breakdown
  std::vector<double> accepted_J;  // J of the initialization, then each accepted iterate
  std::vector<IterationRecord> history;
};

struct ScpOptions {
  std::size_t horizon = 0;  // N; the problem has N + 1 stages
  double dt = 0.0;
  Selector selector;
  TrustRegionState trust;
  LinearizeOptions linearize;
};

/// Trust-region sequential LP from u = mid(U). Throws ConfigError and
/// propagates EnclosureFailure from the initial rollout.
ScpResult scp_solve(const Vec& x_j, const DiffInclusion& di, const CostModel& cm, const ScpOptions& opt);

/// The system being controlled: exact derivative and one step of the flow.
struct Plant {
  std::function<Vec(const Vec& x, const Vec& u)> xdot;
  std::function<Vec(const Vec& x, const Vec& u, double dt)> advance;
};

struct EpisodeConfig {
  std::size_t steps = 0;
  ScpOptions scp;
  double p_ex = 0.0;
  std::uint64_t seed = 0;
  bool compute_bound = true;
  /// Half-width pad on each measured derivative, relative to 1 + |xdot_k|.
  /// Covers rounding in the plant's evaluation of the true field.
  double xdot_rel_pad = 1e-14;
};

struct StepRecord {
  std::size_t step = 0;
  double t = 0.0;
  Vec x;               // x^j
  Vec u;               // applied u^j
  double stage_cost = 0.0;  // c(x^j, u^j, x^{j+1}) on the plant
  double J = 0.0, L = 0.0, r = 0.0;
  double bound = 0.0;  // suboptimality bound, infinity when a tube fails
  double width = 0.0;  // ||wd(R_U^{j+1})||_2
  bool excited = false;
  bool no_progress = false;
  int scp_iterations = 0;
  std::size_t lp_solves = 0;
  std::size_t lp_failures = 0;
  double ms = 0.0;     // controller wall-clock: refinement + planning
  std::vector<double> accepted_J;
};

struct EpisodeLog {
  std::vector<StepRecord> steps;
  Vec final_x;
  double total_cost = 0.0;
  std::size_t lp_solves = 0;
  std::size_t lp_failures = 0;
};

/// Per step: plan with the current inclusion (or excite), apply u^j, record the
/// derivative sample (x^j, xdot, u^j) into di and advance the plant.
EpisodeLog run_episode(const Plant& plant, const Vec& x0, DiffInclusion& di, const CostModel& cm,
                       const EpisodeConfig& cfg);

}  // namespace ddc::scp
