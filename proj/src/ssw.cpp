#include "fairtrain/optim.hpp"

#include <limits>

namespace fairtrain {

SswResult run_ssw(const StochasticProblem& problem, const Vector& x0, const SswConfig& cfg, SamplingStreams& streams,
                  const IterateObserver& observer) {
  cfg.validate();
  if (static_cast<std::size_t>(x0.size()) != problem.dimension()) throw ShapeError("initial point has the wrong size");
  const bool constrained = problem.constraint_count() > 0;

  SswResult res;
  Vector x = x0;
  WeightedReservoir reservoir;
  if (observer) observer(0, x);
  for (std::size_t k = 0; k < cfg.iterations; ++k) {
    double violation = -std::numeric_limits<double>::infinity();
    if (constrained) {
      violation = problem.constraint_values(x, problem.draw_constraint(cfg.constraint_batch, streams.constraint))
                      .maxCoeff();
    }
    const bool objective_step = violation <= cfg.tolerance(k);
    if (k >= cfg.k0) {
      res.recorded.push_back(k);
      if (reservoir.offer(objective_step ? cfg.eta_f : cfg.eta_c, streams.algorithm)) {
        res.chosen = k;
        res.x = x;
      }
    }
    if (objective_step) {
      const auto obj = problem.objective(x, problem.draw_objective(cfg.objective_batch, streams.objective));
      x = x - cfg.eta_f * obj.gradient;
      ++res.objective_steps;
    } else {
      const auto con = problem.constraints(x, problem.draw_constraint(cfg.step_batch, streams.constraint));
      Index worst = 0;
      con.values.maxCoeff(&worst);
      x = x - cfg.eta_c * con.jacobian.row(worst).transpose();
      ++res.constraint_steps;
    }
    if (observer) observer(k + 1, x);
  }
  if (res.recorded.empty()) throw OptimizerError("no iterate was recorded for the output draw");
  res.last = x;
  return res;
}

}  // namespace fairtrain
