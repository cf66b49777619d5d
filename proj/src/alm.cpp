#include "fairtrain/optim.hpp"

namespace fairtrain {

void AlmConfig::validate() const {
  if (!(mu >= 0.0) || !(rho >= 0.0) || !(eta >= 0.0)) throw std::invalid_argument("mu, rho and eta must be >= 0");
  if (!(tau > 0.0)) throw std::invalid_argument("tau must be positive");
  if (!(beta > 0.0 && beta <= 1.0)) throw std::invalid_argument("beta must lie in (0, 1]");
  if (!(multiplier_bound > 0.0)) throw std::invalid_argument("multiplier bound must be positive");
  if (objective_batch == 0 || constraint_batch == 0) throw std::invalid_argument("batch sizes must be positive");
}

AlmResult run_ssl_alm(const StochasticProblem& problem, const Vector& x0, const AlmConfig& cfg,
                      SamplingStreams& streams, const IterateObserver& observer,
                      const AlStateObserver& state_observer) {
  cfg.validate();
  const auto n = static_cast<Index>(problem.dimension());
  const auto m = static_cast<Index>(problem.constraint_count());
  if (x0.size() != n) throw ShapeError("initial point has the wrong size");

  AlmResult res;
  AlState& st = res.state;
  st.x = Vector::Zero(n + m);
  st.x.head(n) = x0;
  st.y = Vector::Zero(m);
  st.z = st.x;

  if (observer) observer(0, x0);
  Vector step(n + m);
  for (std::size_t k = 0; k < cfg.iterations; ++k) {
    const Vector params = st.x.head(n);
    const auto slack = st.x.tail(m);
    const auto obj = problem.objective(params, problem.draw_objective(cfg.objective_batch, streams.objective));
    const auto batch1 = problem.draw_constraint(cfg.constraint_batch, streams.constraint);
    const auto batch2 = problem.draw_constraint(cfg.constraint_batch, streams.constraint);
    const auto con1 = problem.constraints(params, batch1);
    const Vector con2 = problem.constraint_values(params, batch2) + slack;

    st.y += cfg.eta * (con1.values + slack);
    if (st.y.norm() >= cfg.multiplier_bound) {
      st.y.setZero();
      ++res.multiplier_resets;
    }

    const Vector weights = st.y + cfg.rho * con2;
    step.head(n) = obj.gradient + con1.jacobian.transpose() * weights + cfg.mu * (params - st.z.head(n));
    step.tail(m) = weights + cfg.mu * (slack - st.z.tail(m));

    const Vector previous = st.x;
    st.x = previous - cfg.tau * step;
    st.x.tail(m) = st.x.tail(m).cwiseMax(0.0);
    st.z += cfg.beta * (previous - st.z);

    if (state_observer) state_observer(k, st);
    if (observer) observer(k + 1, st.x.head(n));
  }
  res.x = st.x.head(n);
  return res;
}

}  // namespace fairtrain
