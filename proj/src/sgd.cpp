#include "fairtrain/optim.hpp"

namespace fairtrain {

void SgdConfig::validate() const {
  if (!(lr > 0.0)) throw std::invalid_argument("learning rate must be positive");
  if (batch == 0) throw std::invalid_argument("batch size must be positive");
}

Vector run_sgd(const StochasticProblem& problem, const Vector& x0, const SgdConfig& cfg, SamplingStreams& streams,
               const IterateObserver& observer) {
  cfg.validate();
  if (static_cast<std::size_t>(x0.size()) != problem.dimension()) throw ShapeError("initial point has the wrong size");
  Vector x = x0;
  if (observer) observer(0, x);
  for (std::size_t k = 0; k < cfg.iterations; ++k) {
    const auto obj = problem.objective(x, problem.draw_objective(cfg.batch, streams.objective));
    x = x - cfg.lr * obj.gradient;
    if (observer) observer(k + 1, x);
  }
  return x;
}

}  // namespace fairtrain
