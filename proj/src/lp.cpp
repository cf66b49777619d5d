#include "fairtrain/lp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace fairtrain {

namespace {

class Tableau {
 public:
  Tableau(Index rows, Index cols) : t_(Matrix::Zero(rows + 1, cols + 1)), basis_(static_cast<std::size_t>(rows), -1) {}

  Index rows() const { return t_.rows() - 1; }
  Index cols() const { return t_.cols() - 1; }
  double& at(Index i, Index j) { return t_(i, j); }
  double& rhs(Index i) { return t_(i, cols()); }
  double& cost(Index j) { return t_(rows(), j); }
  double& neg_value() { return t_(rows(), cols()); }
  Index& basic(Index i) { return basis_[static_cast<std::size_t>(i)]; }

  void pivot(Index r, Index c) {
    t_.row(r) /= t_(r, c);
    for (Index i = 0; i <= rows(); ++i) {
      if (i == r) continue;
      const double f = t_(i, c);
      if (f != 0.0) t_.row(i) -= f * t_.row(r);
    }
    basic(r) = c;
  }

  // Runs Bland's rule over columns [0, usable); false when unbounded.
  bool optimize(Index usable, double tol) {
    const Index limit = 100000;
    for (Index iter = 0; iter < limit; ++iter) {
      Index enter = -1;
      for (Index j = 0; j < usable; ++j) {
        if (cost(j) > tol) {
          enter = j;
          break;
        }
      }
      if (enter < 0) return true;
      Index leave = -1;
      double best = std::numeric_limits<double>::infinity();
      for (Index i = 0; i < rows(); ++i) {
        const double a = at(i, enter);
        if (a <= tol) continue;
        const double ratio = rhs(i) / a;
        if (leave < 0 || ratio < best - tol) {
          best = ratio;
          leave = i;
        } else if (ratio <= best + tol && basic(i) < basic(leave)) {
          best = std::min(best, ratio);
          leave = i;
        }
      }
      if (leave < 0) return false;
      pivot(leave, enter);
    }
    throw std::runtime_error("simplex iteration limit reached");
  }

 private:
  Matrix t_;
  std::vector<Index> basis_;
};

}  // namespace

LpResult solve_lp(const Vector& objective, const Matrix& le_rows, const Vector& le_rhs, const Matrix& eq_rows,
                  const Vector& eq_rhs) {
  const Index n = objective.size();
  const Index n_le = le_rows.rows();
  const Index n_eq = eq_rows.rows();
  if ((n_le > 0 && le_rows.cols() != n) || (n_eq > 0 && eq_rows.cols() != n) || le_rhs.size() != n_le ||
      eq_rhs.size() != n_eq) {
    throw ShapeError("linear program blocks do not match the variable count");
  }

  // Columns: structural, one slack per <= row, one artificial per row that needs one.
  std::vector<bool> needs_art(static_cast<std::size_t>(n_le + n_eq), false);
  Index n_art = 0;
  for (Index i = 0; i < n_le; ++i) {
    if (le_rhs(i) < 0.0) {
      needs_art[static_cast<std::size_t>(i)] = true;
      ++n_art;
    }
  }
  for (Index i = 0; i < n_eq; ++i) {
    needs_art[static_cast<std::size_t>(n_le + i)] = true;
    ++n_art;
  }
  const Index rows = n_le + n_eq;
  const Index art0 = n + n_le;
  Tableau tab(rows, art0 + n_art);

  double scale = 1.0;
  if (n_le > 0) scale = std::max({scale, le_rows.cwiseAbs().maxCoeff(), le_rhs.cwiseAbs().maxCoeff()});
  if (n_eq > 0) scale = std::max({scale, eq_rows.cwiseAbs().maxCoeff(), eq_rhs.cwiseAbs().maxCoeff()});
  const double tol = 1e-12 * scale;

  Index next_art = art0;
  for (Index i = 0; i < rows; ++i) {
    const bool is_le = i < n_le;
    const double sign = is_le ? (le_rhs(i) < 0.0 ? -1.0 : 1.0) : (eq_rhs(i - n_le) < 0.0 ? -1.0 : 1.0);
    for (Index j = 0; j < n; ++j) tab.at(i, j) = sign * (is_le ? le_rows(i, j) : eq_rows(i - n_le, j));
    tab.rhs(i) = sign * (is_le ? le_rhs(i) : eq_rhs(i - n_le));
    if (is_le) tab.at(i, n + i) = sign;
    if (needs_art[static_cast<std::size_t>(i)]) {
      tab.at(i, next_art) = 1.0;
      tab.basic(i) = next_art++;
    } else {
      tab.basic(i) = n + i;
    }
  }

  LpResult result;
  if (n_art > 0) {
    // Phase 1: maximize -sum(artificials).
    for (Index i = 0; i < rows; ++i) {
      if (tab.basic(i) < art0) continue;
      for (Index j = 0; j < art0; ++j) tab.cost(j) += tab.at(i, j);
      tab.neg_value() += tab.rhs(i);
    }
    tab.optimize(art0 + n_art, tol);
    if (tab.neg_value() > 1e-9 * scale) return result;
    for (Index i = 0; i < rows; ++i) {
      if (tab.basic(i) < art0) continue;
      for (Index j = 0; j < art0; ++j) {
        if (std::abs(tab.at(i, j)) > tol) {
          tab.pivot(i, j);
          break;
        }
      }
    }
  }

  // Phase 2 costs over the non-artificial columns.
  for (Index j = 0; j <= tab.cols(); ++j) tab.cost(j) = 0.0;
  for (Index j = 0; j < n; ++j) tab.cost(j) = objective(j);
  for (Index i = 0; i < rows; ++i) {
    const Index b = tab.basic(i);
    if (b >= n) continue;
    const double cb = objective(b);
    for (Index j = 0; j < art0; ++j) tab.cost(j) -= cb * tab.at(i, j);
    tab.neg_value() -= cb * tab.rhs(i);
  }
  if (!tab.optimize(art0, tol)) {
    result.status = LpStatus::Unbounded;
    return result;
  }
  result.status = LpStatus::Optimal;
  result.x = Vector::Zero(n);
  for (Index i = 0; i < rows; ++i) {
    if (tab.basic(i) < n) result.x(tab.basic(i)) = tab.rhs(i);
  }
  result.value = objective.dot(result.x);
  return result;
}

}  // namespace fairtrain
