#include "fairtrain/qp.hpp"

#include "fairtrain/lp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace fairtrain {

namespace {

Vector clipped_step(const GhostSubproblem& p, const Vector& mult) {
  Vector d = p.grad;
  if (mult.size() > 0) d.noalias() += p.cons_jac.transpose() * mult;
  d *= -1.0 / p.tau;
  return d.cwiseMax(-p.beta).cwiseMin(p.beta);
}

// Norm of the dual gradient projected onto the feasible directions at mult.
double projected_norm(const Vector& mult, const Vector& dual_grad) {
  double sq = 0.0;
  for (Index j = 0; j < mult.size(); ++j) {
    const double g = mult(j) > 0.0 ? dual_grad(j) : std::max(dual_grad(j), 0.0);
    sq += g * g;
  }
  return std::sqrt(sq);
}

}  // namespace

void GhostSubproblem::validate() const {
  if (!(tau > 0.0) || !(beta > 0.0)) throw std::invalid_argument("tau and beta must be positive");
  if (!std::isfinite(kappa)) throw std::invalid_argument("kappa must be finite");
  if (cons_jac.rows() != cons_val.size() || (cons_val.size() > 0 && cons_jac.cols() != grad.size())) {
    throw ShapeError("subproblem constraint block does not match the gradient");
  }
  if (!grad.allFinite() || !cons_val.allFinite() || !cons_jac.allFinite()) {
    throw std::invalid_argument("subproblem data must be finite");
  }
}

Vector GhostSubproblem::rhs() const { return Vector::Constant(cons_val.size(), kappa) - cons_val; }

double GhostSubproblem::objective(const Vector& d) const { return grad.dot(d) + 0.5 * tau * d.squaredNorm(); }

double linearized_min_max(const Vector& cons_val, const Matrix& cons_jac, double beta) {
  const Index m = cons_val.size();
  if (m == 0) throw std::invalid_argument("no constraints to linearize");
  if (cons_jac.rows() != m) throw ShapeError("constraint jacobian row count differs from the constraint count");
  const double max_val = cons_val.maxCoeff();
  if (m == 1) {
    return std::min(max_val, cons_val(0) - beta * cons_jac.row(0).lpNorm<1>());
  }

  double scale = std::max(1.0, cons_val.cwiseAbs().maxCoeff());
  for (Index j = 0; j < m; ++j) scale = std::max(scale, beta * cons_jac.row(j).lpNorm<1>());
  const double tol = 1e-12 * scale;

  Index first = 0;
  cons_val.maxCoeff(&first);
  Vector w = Vector::Zero(m);
  w(first) = 1.0;

  std::vector<Vector> cuts;
  double lower = -std::numeric_limits<double>::infinity();
  double upper = std::numeric_limits<double>::infinity();
  Vector objective = Vector::Zero(m + 2);
  objective(m) = 1.0;
  objective(m + 1) = -1.0;
  Matrix eq_rows = Matrix::Zero(1, m + 2);
  eq_rows.leftCols(m).setOnes();
  const Vector eq_rhs = Vector::Ones(1);

  for (int iter = 0; iter < 500; ++iter) {
    const Vector s = cons_jac.transpose() * w;
    lower = std::max(lower, w.dot(cons_val) - beta * s.lpNorm<1>());
    const Vector d = -beta * s.unaryExpr([](double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); });
    cuts.push_back(cons_val + cons_jac * d);

    Matrix le_rows(static_cast<Index>(cuts.size()), m + 2);
    for (std::size_t k = 0; k < cuts.size(); ++k) {
      const auto r = static_cast<Index>(k);
      le_rows.row(r).head(m) = -cuts[k].transpose();
      le_rows(r, m) = 1.0;
      le_rows(r, m + 1) = -1.0;
    }
    const auto lp = solve_lp(objective, le_rows, Vector::Zero(le_rows.rows()), eq_rows, eq_rhs);
    if (lp.status != LpStatus::Optimal) break;
    upper = std::min(upper, lp.value);
    w = lp.x.head(m).cwiseMax(0.0);
    const double total = w.sum();
    if (total > 0.0) w /= total;
    if (upper - lower <= tol) break;
  }
  if (!std::isfinite(upper)) upper = max_val;
  return std::min(upper, max_val);
}

double compute_kappa(const Vector& cons_val, const Matrix& cons_jac, double beta, double lambda) {
  if (!(lambda > 0.0 && lambda < 1.0)) throw std::invalid_argument("kappa weight must lie in (0, 1)");
  if (!(beta > 0.0)) throw std::invalid_argument("beta must be positive");
  if (cons_val.size() == 0) return 0.0;
  const double violation = std::max(cons_val.maxCoeff(), 0.0);
  if (violation == 0.0) return 0.0;
  const double feasibility = std::max(0.0, linearized_min_max(cons_val, cons_jac, beta));
  return (1.0 - lambda) * feasibility + lambda * violation;
}

GhostSolution solve_ghost_qp(const GhostSubproblem& p, const QpSettings& settings) {
  p.validate();
  const Index m = p.cons_val.size();
  GhostSolution sol;
  sol.multipliers = Vector::Zero(m);
  if (m == 0) {
    sol.d = clipped_step(p, sol.multipliers);
    return sol;
  }

  const Vector b = p.rhs();
  {
    // The relaxed constraints must admit some point of the box.
    const double scale = std::max(1.0, b.cwiseAbs().maxCoeff());
    if (linearized_min_max(-b, p.cons_jac, p.beta) > 1e-9 * scale) {
      sol.status = QpStatus::Infeasible;
      sol.d = clipped_step(p, sol.multipliers);
      sol.kkt_residual = std::numeric_limits<double>::infinity();
      return sol;
    }
  }

  const double lipschitz = (p.cons_jac * p.cons_jac.transpose()).selfadjointView<Eigen::Lower>().eigenvalues().maxCoeff() / p.tau;
  Vector mult = Vector::Zero(m);
  if (settings.initial_multipliers.size() == m) mult = settings.initial_multipliers.cwiseMax(0.0);

  auto residual_at = [&](const Vector& mu, Vector& d) {
    d = clipped_step(p, mu);
    const Vector g = p.cons_jac * d - b;
    double comp = 0.0;
    for (Index j = 0; j < m; ++j) comp = std::max(comp, std::abs(mu(j) * g(j)));
    return std::make_pair(projected_norm(mu, g), comp);
  };

  Vector d;
  auto [pg, comp] = residual_at(mult, d);
  Vector best_mult = mult;
  Vector best_d = d;
  double best_pg = pg;
  double best_res = std::max(pg, comp);

  if (lipschitz <= 1e-300) {
    // Constraints do not depend on d; zero multipliers are optimal when feasible.
    sol.multipliers = Vector::Zero(m);
    auto [pg0, comp0] = residual_at(sol.multipliers, sol.d);
    sol.kkt_residual = std::max(pg0, comp0);
    sol.status = pg0 < settings.tolerance ? QpStatus::Optimal : QpStatus::Infeasible;
    return sol;
  }

  const double step = 1.0 / lipschitz;
  Vector extrap = mult;
  double momentum = 1.0;
  std::size_t iter = 0;
  while (best_pg >= settings.tolerance && iter < settings.max_iterations) {
    ++iter;
    const Vector g_extrap = p.cons_jac * clipped_step(p, extrap) - b;
    const Vector next = (extrap + step * g_extrap).cwiseMax(0.0);
    if ((extrap - next).dot(next - mult) > 0.0) {
      // Gradient restart.
      momentum = 1.0;
      extrap = mult;
      continue;
    }
    const double next_momentum = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * momentum * momentum));
    extrap = next + ((momentum - 1.0) / next_momentum) * (next - mult);
    momentum = next_momentum;
    mult = next;

    std::tie(pg, comp) = residual_at(mult, d);
    if (pg < best_pg) {
      best_pg = pg;
      best_res = std::max(pg, comp);
      best_mult = mult;
      best_d = d;
    }
  }
  sol.d = best_d;
  sol.multipliers = best_mult;
  sol.kkt_residual = best_res;
  sol.iterations = iter;
  sol.status = best_pg < settings.tolerance ? QpStatus::Optimal : QpStatus::IterationLimit;
  return sol;
}

}  // namespace fairtrain
