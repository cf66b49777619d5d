#pragma once

#include "fairtrain/types.hpp"

#include <cstddef>

namespace fairtrain {

/// min_d  grad^T d + tau/2 |d|^2
/// s.t.   cons_val + cons_jac d <= kappa e,   |d|_inf <= beta
struct GhostSubproblem {
  Vector grad;
  Vector cons_val;
  Matrix cons_jac;  // m x n
  double tau = 1.0;
  double beta = 1.0;
  double kappa = 0.0;

  void validate() const;
  /// Right-hand side of the linear constraints, kappa e - cons_val.
  Vector rhs() const;
  double objective(const Vector& d) const;
};

enum class QpStatus { Optimal, Infeasible, IterationLimit };

struct GhostSolution {
  Vector d;
  Vector multipliers;
  QpStatus status = QpStatus::Optimal;
  /// max of the projected dual gradient norm and the complementarity gap.
  double kkt_residual = 0.0;
  std::size_t iterations = 0;
};

struct QpSettings {
  double tolerance = 1e-8;
  std::size_t max_iterations = 100000;
  /// Starting multipliers; empty means zero.
  Vector initial_multipliers;
};

/// min over |d|_inf <= beta of max_j (cons_val_j + cons_jac_j d), without the
/// positive part. Computed on the dual side, as the maximum over the unit
/// simplex of w^T cons_val - beta |cons_jac^T w|_1, by a cutting-plane method.
/// Returns an upper bound that is tight to rounding.
double linearized_min_max(const Vector& cons_val, const Matrix& cons_jac, double beta);

/// Relaxation level (1 - lambda) * feasibility value + lambda * max_j max(cons_val_j, 0),
/// where the feasibility value is max(0, linearized_min_max). The subproblem
/// with this kappa always has a feasible point.
double compute_kappa(const Vector& cons_val, const Matrix& cons_jac, double beta, double lambda);

/// Solves the subproblem by accelerated projected gradient ascent on the
/// multipliers; the primal point for fixed multipliers is a clipped step.
GhostSolution solve_ghost_qp(const GhostSubproblem& p, const QpSettings& settings = {});

}  // namespace fairtrain
