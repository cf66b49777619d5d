#pragma once

// Oracles and small problems shared by the test binaries. Nothing here calls
// into the solvers it is used to check.

#include "fairtrain/lp.hpp"
#include "fairtrain/metrics.hpp"
#include "fairtrain/problem.hpp"
#include "fairtrain/qp.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <random>
#include <stdexcept>
#include <vector>

namespace fairtrain::testing {

inline Vector central_difference(const std::function<double(const Vector&)>& f, const Vector& x, double h) {
  Vector g(x.size());
  Vector probe = x;
  for (Index i = 0; i < x.size(); ++i) {
    probe(i) = x(i) + h;
    const double up = f(probe);
    probe(i) = x(i) - h;
    const double down = f(probe);
    probe(i) = x(i);
    g(i) = (up - down) / (2.0 * h);
  }
  return g;
}

inline double max_relative_error(const Vector& a, const Vector& b, double floor = 1e-6) {
  double worst = 0.0;
  for (Index i = 0; i < a.size(); ++i) {
    const double scale = std::max({std::abs(a(i)), std::abs(b(i)), floor});
    worst = std::max(worst, std::abs(a(i) - b(i)) / scale);
  }
  return worst;
}

/// Optimal value of a ghost subproblem by enumerating which box bound each
/// coordinate sits on (free, lower, upper) and which linear rows are tight.
/// For each pattern the candidate is the projection of -grad/tau onto the
/// pattern's affine set; the optimum is the best feasible candidate.
struct EnumerationResult {
  bool feasible = false;
  double value = std::numeric_limits<double>::infinity();
  Vector d;
};

inline EnumerationResult enumerate_ghost_qp(const GhostSubproblem& p, double feas_tol = 1e-9) {
  const Index n = p.grad.size();
  const Index m = p.cons_val.size();
  const Vector rhs = Vector::Constant(m, p.kappa) - p.cons_val;
  const Vector unconstrained = -p.grad / p.tau;

  EnumerationResult best;
  std::size_t box_patterns = 1;
  for (Index i = 0; i < n; ++i) box_patterns *= 3;
  for (std::size_t bp = 0; bp < box_patterns; ++bp) {
    std::vector<int> state(static_cast<std::size_t>(n));
    std::size_t code = bp;
    for (Index i = 0; i < n; ++i) {
      state[static_cast<std::size_t>(i)] = static_cast<int>(code % 3);
      code /= 3;
    }
    std::vector<Index> free_idx;
    Vector fixed = Vector::Zero(n);
    for (Index i = 0; i < n; ++i) {
      const int s = state[static_cast<std::size_t>(i)];
      if (s == 0) free_idx.push_back(i);
      else fixed(i) = s == 1 ? -p.beta : p.beta;
    }
    for (std::size_t mask = 0; mask < (std::size_t{1} << m); ++mask) {
      std::vector<Index> active;
      for (Index j = 0; j < m; ++j) {
        if (mask & (std::size_t{1} << j)) active.push_back(j);
      }
      const auto nf = static_cast<Index>(free_idx.size());
      const auto na = static_cast<Index>(active.size());
      Vector d = fixed;
      for (Index a = 0; a < nf; ++a) d(free_idx[static_cast<std::size_t>(a)]) = unconstrained(free_idx[static_cast<std::size_t>(a)]);
      if (na > 0) {
        if (nf == 0) continue;
        Matrix jf(na, nf);
        Vector r(na);
        for (Index a = 0; a < na; ++a) {
          const Index row = active[static_cast<std::size_t>(a)];
          for (Index b = 0; b < nf; ++b) jf(a, b) = p.cons_jac(row, free_idx[static_cast<std::size_t>(b)]);
          r(a) = rhs(row) - p.cons_jac.row(row).dot(d);
        }
        // Minimal correction of the free coordinates that makes the rows tight.
        const Vector shift = jf.completeOrthogonalDecomposition().solve(r);
        if ((jf * shift - r).cwiseAbs().maxCoeff() > 1e-9) continue;
        for (Index b = 0; b < nf; ++b) d(free_idx[static_cast<std::size_t>(b)]) += shift(b);
      }
      if (d.cwiseAbs().maxCoeff() > p.beta + feas_tol) continue;
      if (m > 0 && (p.cons_jac * d - rhs).maxCoeff() > feas_tol) continue;
      const double value = p.grad.dot(d) + 0.5 * p.tau * d.squaredNorm();
      if (value < best.value) {
        best.feasible = true;
        best.value = value;
        best.d = d;
      }
    }
  }
  return best;
}

/// min over the 2-D box [-beta, beta]^2 of max_j (c_j + J_j d). The function
/// is convex and piecewise linear, so the minimum sits at a vertex of the
/// arrangement formed by the box edges and the lines where two pieces tie.
inline double vertex_min_max(const Vector& c, const Matrix& jac, double beta) {
  const Index m = c.size();
  auto eval = [&](double u, double v) {
    double worst = -std::numeric_limits<double>::infinity();
    for (Index j = 0; j < m; ++j) worst = std::max(worst, c(j) + jac(j, 0) * u + jac(j, 1) * v);
    return worst;
  };
  std::vector<std::array<double, 2>> candidates;
  for (double u : {-beta, beta}) {
    for (double v : {-beta, beta}) candidates.push_back({u, v});
  }
  // Tie line between pieces i and j: a u + b v = r.
  struct Line {
    double a, b, r;
  };
  std::vector<Line> lines;
  for (Index i = 0; i < m; ++i) {
    for (Index j = i + 1; j < m; ++j) lines.push_back({jac(i, 0) - jac(j, 0), jac(i, 1) - jac(j, 1), c(j) - c(i)});
  }
  for (const auto& l : lines) {
    for (double edge : {-beta, beta}) {
      if (l.b != 0.0) candidates.push_back({edge, (l.r - l.a * edge) / l.b});
      if (l.a != 0.0) candidates.push_back({(l.r - l.b * edge) / l.a, edge});
    }
  }
  for (std::size_t p = 0; p < lines.size(); ++p) {
    for (std::size_t q = p + 1; q < lines.size(); ++q) {
      const double det = lines[p].a * lines[q].b - lines[p].b * lines[q].a;
      if (std::abs(det) < 1e-14) continue;
      candidates.push_back({(lines[p].r * lines[q].b - lines[p].b * lines[q].r) / det,
                            (lines[p].a * lines[q].r - lines[p].r * lines[q].a) / det});
    }
  }
  double best = std::numeric_limits<double>::infinity();
  for (const auto& [u, v] : candidates) {
    if (std::abs(u) > beta * (1 + 1e-12) || std::abs(v) > beta * (1 + 1e-12)) continue;
    best = std::min(best, eval(std::clamp(u, -beta, beta), std::clamp(v, -beta, beta)));
  }
  return best;
}

/// Coarse cross-check of vertex_min_max: the best value on a uniform grid.
inline double grid_min_max(const Vector& c, const Matrix& jac, double beta, int points) {
  double best = std::numeric_limits<double>::infinity();
  const double h = 2.0 * beta / (points - 1);
  for (int a = 0; a < points; ++a) {
    for (int b = 0; b < points; ++b) {
      const double u = -beta + a * h, v = -beta + b * h;
      double worst = -std::numeric_limits<double>::infinity();
      for (Index j = 0; j < c.size(); ++j) worst = std::max(worst, c(j) + jac(j, 0) * u + jac(j, 1) * v);
      best = std::min(best, worst);
    }
  }
  return best;
}

/// Random ghost subproblem with n unknowns and m rows, kappa left at zero.
inline GhostSubproblem random_subproblem(Index n, Index m, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> uni(0.3, 2.0);
  GhostSubproblem p;
  p.grad = Vector::NullaryExpr(n, [&](Index) { return normal(rng); });
  p.cons_val = Vector::NullaryExpr(m, [&](Index) { return normal(rng); });
  p.cons_jac = Matrix::NullaryExpr(m, n, [&](Index, Index) { return normal(rng); });
  p.tau = uni(rng);
  p.beta = uni(rng);
  return p;
}

/// Finite-sum problem over a handful of samples: sample i has objective
/// 1/2 |x - target_i|^2 and one constraint row_i^T x - offset_i.
/// Draws are sample indices.
class FiniteSumProblem final : public StochasticProblem {
 public:
  FiniteSumProblem(Matrix targets, Matrix rows, Vector offsets)
      : targets_(std::move(targets)), rows_(std::move(rows)), offsets_(std::move(offsets)) {}

  std::size_t dimension() const override { return static_cast<std::size_t>(targets_.cols()); }
  std::size_t constraint_count() const override { return 1; }
  std::size_t samples() const { return static_cast<std::size_t>(targets_.rows()); }

  SampleBatch draw_objective(std::size_t batch, Rng& rng) const override {
    std::uniform_int_distribution<std::uint64_t> pick(0, samples() - 1);
    SampleBatch out;
    out.cells.emplace_back(batch);
    for (auto& v : out.cells[0]) v = pick(rng);
    return out;
  }
  SampleBatch draw_constraint(std::size_t batch, Rng& rng) const override { return draw_objective(batch, rng); }

  ObjectiveEstimate objective(const Vector& x, const SampleBatch& batch) const override {
    Vector mean_target = Vector::Zero(x.size());
    for (auto i : batch.cells.at(0)) mean_target += targets_.row(static_cast<Index>(i)).transpose();
    mean_target /= static_cast<double>(batch.cells[0].size());
    ObjectiveEstimate est;
    est.gradient = x - mean_target;
    est.value = 0.0;
    for (auto i : batch.cells[0]) est.value += 0.5 * (x - targets_.row(static_cast<Index>(i)).transpose()).squaredNorm();
    est.value /= static_cast<double>(batch.cells[0].size());
    return est;
  }

  ConstraintEstimate constraints(const Vector& x, const SampleBatch& batch) const override {
    ConstraintEstimate est;
    est.jacobian = Matrix::Zero(1, x.size());
    double offset = 0.0;
    for (auto i : batch.cells.at(0)) {
      est.jacobian.row(0) += rows_.row(static_cast<Index>(i));
      offset += offsets_(static_cast<Index>(i));
    }
    const double count = static_cast<double>(batch.cells[0].size());
    est.jacobian /= count;
    est.values = est.jacobian * x - Vector::Constant(1, offset / count);
    return est;
  }

  /// Batch containing every sample once.
  SampleBatch everything() const {
    SampleBatch out;
    out.cells.emplace_back();
    for (std::size_t i = 0; i < samples(); ++i) out.cells[0].push_back(i);
    return out;
  }

 private:
  Matrix targets_;
  Matrix rows_;
  Vector offsets_;
};

/// Objective oracles of an inner problem with constraint values and
/// Jacobian fixed regardless of x and the draws.
class FixedConstraintProblem final : public StochasticProblem {
 public:
  FixedConstraintProblem(const StochasticProblem& inner, Vector values, Matrix jacobian)
      : inner_(inner), values_(std::move(values)), jacobian_(std::move(jacobian)) {}

  std::size_t dimension() const override { return inner_.dimension(); }
  std::size_t constraint_count() const override { return static_cast<std::size_t>(values_.size()); }
  SampleBatch draw_objective(std::size_t batch, Rng& rng) const override { return inner_.draw_objective(batch, rng); }
  SampleBatch draw_constraint(std::size_t batch, Rng& rng) const override {
    SampleBatch out;
    out.cells.emplace_back(batch);
    for (auto& v : out.cells[0]) v = rng();
    return out;
  }
  ObjectiveEstimate objective(const Vector& x, const SampleBatch& batch) const override {
    return inner_.objective(x, batch);
  }
  ConstraintEstimate constraints(const Vector&, const SampleBatch&) const override { return {values_, jacobian_}; }

 private:
  const StochasticProblem& inner_;
  Vector values_;
  Matrix jacobian_;
};

/// Gap metrics recomputed from integer contingency counts.
struct CountingOracle {
  // counts[group][label][pred]
  std::map<int, std::array<std::array<long, 2>, 2>> counts;

  CountingOracle(const std::vector<double>& scores, const std::vector<int>& labels, const std::vector<int>& groups,
                 double threshold) {
    for (std::size_t i = 0; i < scores.size(); ++i) {
      auto& c = counts[groups[i]];
      c[static_cast<std::size_t>(labels[i])][scores[i] > threshold ? 1 : 0] += 1;
    }
  }

  static double ratio(long num, long den) { return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den); }

  double rate_pos(int g) const {
    const auto& c = counts.at(g);
    return ratio(c[0][1] + c[1][1], c[0][0] + c[0][1] + c[1][0] + c[1][1]);
  }
  double rate_pos_given_label(int g, int y) const {
    const auto& c = counts.at(g);
    return ratio(c[static_cast<std::size_t>(y)][1], c[static_cast<std::size_t>(y)][0] + c[static_cast<std::size_t>(y)][1]);
  }
  double rate_label_given_pred(int g, int pred) const {
    const auto& c = counts.at(g);
    return ratio(c[1][static_cast<std::size_t>(pred)], c[0][static_cast<std::size_t>(pred)] + c[1][static_cast<std::size_t>(pred)]);
  }

  template <class F>
  double worst_pair(F gap) const {
    double worst = 0.0;
    for (auto a = counts.begin(); a != counts.end(); ++a) {
      for (auto b = std::next(a); b != counts.end(); ++b) worst = std::max(worst, gap(a->first, b->first));
    }
    return worst;
  }

  double ind() const {
    return worst_pair([&](int a, int b) { return std::abs(rate_pos(a) - rate_pos(b)); });
  }
  double sp() const {
    return worst_pair([&](int a, int b) {
      return std::abs(rate_pos_given_label(a, 0) - rate_pos_given_label(b, 0)) +
             std::abs(rate_pos_given_label(a, 1) - rate_pos_given_label(b, 1));
    });
  }
  double sf() const {
    return worst_pair([&](int a, int b) {
      return std::abs(rate_label_given_pred(a, 0) - rate_label_given_pred(b, 0)) +
             std::abs(rate_label_given_pred(a, 1) - rate_label_given_pred(b, 1));
    });
  }
};

/// Optimal transport cost between uniform empirical measures, as a linear
/// program over the coupling matrix.
inline double transport_w1(const std::vector<double>& a, const std::vector<double>& b) {
  const auto na = static_cast<Index>(a.size());
  const auto nb = static_cast<Index>(b.size());
  Vector cost(na * nb);
  Matrix eq = Matrix::Zero(na + nb, na * nb);
  Vector rhs(na + nb);
  for (Index i = 0; i < na; ++i) {
    for (Index j = 0; j < nb; ++j) {
      const Index v = i * nb + j;
      cost(v) = -std::abs(a[static_cast<std::size_t>(i)] - b[static_cast<std::size_t>(j)]);
      eq(i, v) = 1.0;
      eq(na + j, v) = 1.0;
    }
  }
  rhs.head(na).setConstant(1.0 / static_cast<double>(na));
  rhs.tail(nb).setConstant(1.0 / static_cast<double>(nb));
  const auto lp = solve_lp(cost, Matrix(0, na * nb), Vector(0), eq, rhs);
  if (lp.status != LpStatus::Optimal) throw std::runtime_error("transport program not solved");
  return -lp.value;
}

/// Random prediction set in which every (group, label) and (group, prediction)
/// cell is populated. Some scores sit exactly on the threshold.
inline PredictionSet random_predictions(std::mt19937_64& rng, std::size_t groups) {
  std::uniform_int_distribution<std::size_t> size(groups * 8, 60);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  while (true) {
    const std::size_t n = size(rng);
    PredictionSet p;
    p.scores = Vector(static_cast<Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
      p.scores(static_cast<Index>(i)) = unit(rng) < 0.1 ? 0.5 : unit(rng);
      p.labels.push_back(unit(rng) < 0.4 ? 1 : 0);
      p.groups.push_back(static_cast<int>(rng() % groups));
    }
    CountingOracle o(std::vector<double>(p.scores.data(), p.scores.data() + n), p.labels, p.groups, 0.5);
    bool complete = o.counts.size() == groups;
    for (const auto& [g, c] : o.counts) {
      complete = complete && c[0][0] + c[0][1] > 0 && c[1][0] + c[1][1] > 0;
      complete = complete && c[0][0] + c[1][0] > 0 && c[0][1] + c[1][1] > 0;
    }
    if (complete) return p;
  }
}

}  // namespace fairtrain::testing
