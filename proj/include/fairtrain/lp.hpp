#pragma once

#include "fairtrain/types.hpp"

namespace fairtrain {

enum class LpStatus { Optimal, Infeasible, Unbounded };

struct LpResult {
  LpStatus status = LpStatus::Infeasible;
  Vector x;
  double value = 0.0;
};

/// Dense two-phase primal simplex with Bland's rule:
///   maximize objective^T x  s.t.  le_rows x <= le_rhs,  eq_rows x = eq_rhs,  x >= 0.
/// Either block may have zero rows. Meant for small problems only.
LpResult solve_lp(const Vector& objective, const Matrix& le_rows, const Vector& le_rhs, const Matrix& eq_rows,
                  const Vector& eq_rhs);

}  // namespace fairtrain
