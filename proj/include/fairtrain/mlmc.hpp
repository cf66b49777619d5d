#pragma once

#include "fairtrain/problem.hpp"
#include "fairtrain/qp.hpp"

#include <cstddef>

namespace fairtrain {

/// Parameters of one direction subproblem.
struct GhostSettings {
  double tau = 1.0;
  double beta = 10.0;
  double lambda = 0.5;
  QpSettings qp;
};

struct MlmcSettings {
  double p0 = 0.4;
  /// Draws per cell in the smallest batch.
  std::size_t base_batch = 1;
  /// Largest level drawn. The level distribution is the geometric law
  /// conditioned on N <= max_level, and the correction is weighted by that
  /// conditioned probability, so the estimator targets the direction at batch
  /// size base_batch * 2^(max_level + 1).
  std::size_t max_level = 20;
  GhostSettings ghost;

  void validate() const;
  /// P(N = level) under the truncated geometric law.
  double level_probability(std::size_t level) const;
};

struct MlmcDraw {
  Vector direction;
  std::size_t level = 0;
  /// False if any of the four subproblems was not solved to optimality.
  bool ok = true;
  QpStatus worst_status = QpStatus::Optimal;
};

/// Direction of the subproblem built from one batch (kappa computed from it).
GhostSolution batch_direction(const StochasticProblem& problem, const Vector& x, const SampleBatch& objective_batch,
                              const SampleBatch& constraint_batch, const GhostSettings& settings);

/// Draws the level from the truncated geometric law using `rng`.
std::size_t draw_level(const MlmcSettings& settings, Rng& rng);

/// Multilevel estimate of the full-population subproblem direction:
///   d = [d_full - (d_odd + d_even) / 2] / P(N) + d_single.
/// The single-sample term uses its own draws; the big batch holds
/// base_batch * 2^(N+1) draws per cell, split by position parity.
MlmcDraw mlmc_direction(const StochasticProblem& problem, const Vector& x, const MlmcSettings& settings,
                        SamplingStreams& streams);

}  // namespace fairtrain
