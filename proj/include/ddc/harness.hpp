#pragma once

// Ground-truth environments, Lipschitz bound estimation and audit, and the
// reference oracles (adaptive ODE flow, global N-step optimal control, LQR).

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ddc/inclusion.hpp"
#include "ddc/scp.hpp"

namespace ddc::harness {

struct Environment {
  std::string name;
  std::size_t n = 0, m = 0;
  std::vector<MultiIndex> exponents;
  std::function<Vec(const Vec& x)> f;
  std::function<std::vector<Vec>(const Vec& x)> g;       // d vectors of length n
  std::function<Matrix(const Vec& x)> jac_f;             // oracle use only
  std::function<std::vector<Matrix>(const Vec& x)> jac_g;
  IntervalVector X, U;
  double dt = 0.05;
  std::size_t horizon = 2;
  Vec x0;

  // Declared side information, valid for the truth on X.
  Vec weights;
  Vec lipschitz_f;
  Matrix lipschitz_g;
  double bound = 0.0;
  std::optional<KnownTermsSpec> known_terms;
  std::vector<ConstraintSpec> constraints;

  scp::CostModel cost;

  std::size_t d() const { return exponents.size(); }
  Vec xdot(const Vec& x, const Vec& u) const;
  /// Side information up to the requested tier.
  SideInfo side_info(SideTier tier = SideTier::Constraints) const;
  /// Plant backed by the adaptive ODE oracle. Throws Error when the state
  /// leaves X.
  scp::Plant plant() const;
};

/// Episode settings from the environment: its horizon and dt, theta = 0.5,
/// default trust region for its control box and cost scale.
scp::EpisodeConfig episode_config(const Environment& env, std::size_t steps);

/// pendulum, unicycle, duffing, double_integrator.
const std::vector<Environment>& builtin_environments();
/// Throws ConfigError for unknown names.
const Environment& environment(std::string_view name);
std::vector<std::string> environment_names();

/// Pairwise-slope maxima over n_samples uniform points of X (weighted norm),
/// times safety, clamped to 1e-12. The bound M is the sampled maximum of
/// |f_k|, |g_pk| times safety.
SideInfo estimate_lipschitz(const Environment& env, std::size_t n_samples, double safety,
                            std::uint64_t seed = 1);

struct AuditReport {
  std::size_t pairs = 0;
  std::size_t lipschitz_violations = 0;
  std::size_t bound_violations = 0;
  std::size_t constraint_violations = 0;
  std::size_t total() const { return lipschitz_violations + bound_violations + constraint_violations; }
};

/// Dense sampling check of the declared side information against the truth.
AuditReport audit(const Environment& env, std::size_t samples, std::uint64_t seed = 2);

using Field = std::function<Vec(const Vec& x)>;

struct OdeOptions {
  double abs_tol = 1e-10;
  double rel_tol = 1e-10;
  double min_step = 1e-14;
};

/// Adaptive Dormand-Prince flow of xdot = F(x) over time T (may be negative).
/// Throws OracleError when the step size underflows or the state blows up.
Vec integrate(const Field& F, const Vec& x0, double T, const OdeOptions& opt = {});

/// States x^0..x^steps under zero-order-hold controls.
std::vector<Vec> ode_oracle(const Environment& env, const Vec& x0, const std::vector<Vec>& controls,
                            double dt, const OdeOptions& opt = {});

struct OracleResult {
  std::vector<Vec> controls;  // N + 1 stages
  double cost = 0.0;
  double grid_spacing = 0.0;  // tolerance of the grid stage, per control dimension
  std::size_t points_per_dim = 0;
};

/// Global minimum of sum_{q=0}^{N} c(x^q, u^q, x^{q+1}) under the true dynamics
/// by a dense grid over U^{N+1} and one Nelder-Mead polish. Requires
/// m (N + 1) <= 6.
OracleResult optimal_oracle(const Environment& env, const scp::CostModel& cm, const Vec& x_j,
                            std::size_t N, double dt);

/// Cost of a control sequence under the true dynamics.
double rollout_cost(const Environment& env, const scp::CostModel& cm, const Vec& x_j,
                    const std::vector<Vec>& controls, double dt);

struct LqrResult {
  std::vector<Vec> controls;
  double cost = 0.0;
};

/// Finite-horizon discrete LQR for sum_{q=0}^{S-1} x_{q+1}' Q x_{q+1} + u_q' R u_q
/// by the backward Riccati recursion.
LqrResult lqr(const Matrix& A, const Matrix& B, const Matrix& Q, const Matrix& R, std::size_t stages,
              const Vec& x0);

/// Exact zero-order-hold discretization of the double integrator.
std::pair<Matrix, Matrix> double_integrator_zoh(double dt);

/// Golden-section minimization of a unimodal function on [a, b].
double golden_section(const std::function<double(double)>& f, double a, double b, double tol = 1e-10);

/// Zero-control rollout stage costs c(x^j, 0, x^{j+1}) over `steps` steps.
std::vector<double> zero_control_costs(const Environment& env, const scp::CostModel& cm, const Vec& x0,
                                       std::size_t steps, double dt);

}  // namespace ddc::harness
