#include "fairtrain/optim.hpp"

#include <cmath>

namespace fairtrain {

void StGhConfig::validate() const {
  if (!(p0 > 0.0 && p0 < 1.0)) throw std::invalid_argument("p0 must lie in (0, 1)");
  if (!(alpha0 > 0.0) || !(alpha_hat > 0.0)) throw std::invalid_argument("alpha0 and alpha_hat must be positive");
  if (!(alpha0 * alpha_hat < 1.0)) throw std::invalid_argument("alpha0 * alpha_hat must be below 1");
  if (!(tau > 0.0) || !(beta > 0.0)) throw std::invalid_argument("tau and beta must be positive");
  if (!(lambda > 0.0 && lambda < 1.0)) throw std::invalid_argument("lambda must lie in (0, 1)");
  if (base_batch == 0) throw std::invalid_argument("base batch must be at least 1");
  if (!(max_skip_fraction >= 0.0)) throw std::invalid_argument("skip fraction must be non-negative");
}

MlmcSettings StGhConfig::mlmc() const {
  MlmcSettings s;
  s.p0 = p0;
  s.base_batch = base_batch;
  s.max_level = max_level;
  s.ghost.tau = tau;
  s.ghost.beta = beta;
  s.ghost.lambda = lambda;
  return s;
}

StGhResult run_stgh(const StochasticProblem& problem, const Vector& x0, const StGhConfig& cfg,
                    SamplingStreams& streams, const IterateObserver& observer) {
  cfg.validate();
  if (static_cast<std::size_t>(x0.size()) != problem.dimension()) throw ShapeError("initial point has the wrong size");
  const auto settings = cfg.mlmc();
  const auto allowed = static_cast<std::size_t>(std::floor(cfg.max_skip_fraction * static_cast<double>(cfg.iterations)));

  StGhResult res;
  res.x = x0;
  double alpha = cfg.alpha0;
  if (observer) observer(0, res.x);
  for (std::size_t k = 0; k < cfg.iterations; ++k) {
    if (k > 0) alpha = next_ghost_stepsize(alpha, cfg.alpha_hat);
    const auto draw = mlmc_direction(problem, res.x, settings, streams);
    if (draw.ok && draw.direction.allFinite()) {
      res.x += alpha * draw.direction;
    } else if (++res.skipped > allowed) {
      throw OptimizerError("direction subproblem failed in " + std::to_string(res.skipped) + " of " +
                           std::to_string(k + 1) + " iterations");
    }
    res.last_stepsize = alpha;
    if (observer) observer(k + 1, res.x);
  }
  return res;
}

}  // namespace fairtrain
