#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>

#include "ddc/battery.hpp"

namespace ddc::battery {

std::optional<double> vertex_enumeration(const lp::LinearProgram& lp, double tol) {
  const std::size_t n = lp.vars();
  // Every constraint as a . x (rel) b; bounds included.
  struct Con {
    Vec a;
    double b;
    lp::Relation rel;
  };
  std::vector<Con> eq, ineq;
  for (const auto& r : lp.rows) (r.relation == lp::Relation::Equal ? eq : ineq).push_back({r.a, r.rhs, r.relation});
  for (std::size_t j = 0; j < n; ++j) {
    Vec e(n, 0.0);
    e[j] = 1.0;
    ineq.push_back({e, lp.lower[j], lp::Relation::GreaterEq});
    ineq.push_back({e, lp.upper[j], lp::Relation::LessEq});
  }
  auto feasible = [&](const Eigen::VectorXd& x) {
    Vec xv(x.data(), x.data() + n);
    return lp::max_violation(lp, xv) <= tol * (1.0 + std::fabs(x.maxCoeff()) + std::fabs(x.minCoeff()));
  };
  std::optional<double> best;
  const std::size_t need = n > eq.size() ? n - eq.size() : 0;
  std::vector<std::size_t> pick;
  std::function<void(std::size_t)> rec = [&](std::size_t start) {
    if (pick.size() == need) {
      Eigen::MatrixXd A(n, n);
      Eigen::VectorXd b(n);
      std::size_t r = 0;
      for (std::size_t i = 0; i < std::min(eq.size(), n); ++i, ++r) {
        for (std::size_t j = 0; j < n; ++j) A(r, j) = eq[i].a[j];
        b(r) = eq[i].b;
      }
      for (std::size_t k : pick) {
        for (std::size_t j = 0; j < n; ++j) A(r, j) = ineq[k].a[j];
        b(r) = ineq[k].b;
        ++r;
      }
      Eigen::FullPivLU<Eigen::MatrixXd> lu(A);
      if (lu.rank() < static_cast<Eigen::Index>(n)) return;
      const Eigen::VectorXd x = lu.solve(b);
      if (!feasible(x)) return;
      double obj = lp.constant;
      for (std::size_t j = 0; j < n; ++j) obj += lp.objective[j] * x(j);
      if (!best || obj < *best) best = obj;
      return;
    }
    for (std::size_t k = start; k + (need - pick.size()) <= ineq.size(); ++k) {
      pick.push_back(k);
      rec(k + 1);
      pick.pop_back();
    }
  };
  rec(0);
  return best;
}

lp::LinearProgram random_lp(std::mt19937_64& rng, std::size_t max_vars, std::size_t max_rows) {
  std::uniform_int_distribution<std::size_t> nv(1, max_vars), nr(1, max_rows);
  std::uniform_real_distribution<double> coef(-1.0, 1.0), box(0.2, 2.0);
  std::uniform_int_distribution<int> kind(0, 9);
  const std::size_t n = nv(rng), m = nr(rng);
  // Coefficients on a coarse grid so that ties and degenerate vertices occur.
  auto grid = [&](double v) { return kind(rng) < 3 ? std::round(v * 4) / 4 : v; };
  lp::LinearProgram lp;
  for (std::size_t j = 0; j < n; ++j) lp.add_var(grid(coef(rng)), -box(rng), box(rng));
  for (std::size_t i = 0; i < m; ++i) {
    Vec a(n);
    for (double& v : a) v = grid(coef(rng));
    const int k = kind(rng);
    const lp::Relation rel = k < 7 ? lp::Relation::LessEq : (k < 9 ? lp::Relation::GreaterEq : lp::Relation::Equal);
    const double rhs = rel == lp::Relation::Equal ? grid(0.5 * coef(rng)) : grid(coef(rng) + 0.3);
    lp.add_row(a, rel, rhs);
  }
  return lp;
}

}  // namespace ddc::battery
