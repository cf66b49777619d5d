#include "fairtrain/mlmc.hpp"

#include <cmath>

namespace fairtrain {

void MlmcSettings::validate() const {
  if (!(p0 > 0.0 && p0 < 1.0)) throw std::invalid_argument("p0 must lie in (0, 1)");
  if (base_batch == 0) throw std::invalid_argument("base batch must be at least 1");
  if (max_level > 40) throw std::invalid_argument("max_level above 40 is not supported");
  if (!(ghost.tau > 0.0) || !(ghost.beta > 0.0)) throw std::invalid_argument("tau and beta must be positive");
  if (!(ghost.lambda > 0.0 && ghost.lambda < 1.0)) throw std::invalid_argument("lambda must lie in (0, 1)");
}

double MlmcSettings::level_probability(std::size_t level) const {
  if (level > max_level) return 0.0;
  const double q = 1.0 - p0;
  const double mass = 1.0 - std::pow(q, static_cast<double>(max_level + 1));
  return std::pow(q, static_cast<double>(level)) * p0 / mass;
}

std::size_t draw_level(const MlmcSettings& settings, Rng& rng) {
  std::geometric_distribution<std::size_t> geom(settings.p0);
  while (true) {
    const std::size_t level = geom(rng);
    if (level <= settings.max_level) return level;
  }
}

GhostSolution batch_direction(const StochasticProblem& problem, const Vector& x, const SampleBatch& objective_batch,
                              const SampleBatch& constraint_batch, const GhostSettings& settings) {
  const auto obj = problem.objective(x, objective_batch);
  GhostSubproblem sub;
  sub.tau = settings.tau;
  sub.beta = settings.beta;
  sub.grad = obj.gradient;
  if (problem.constraint_count() > 0) {
    auto con = problem.constraints(x, constraint_batch);
    sub.kappa = compute_kappa(con.values, con.jacobian, settings.beta, settings.lambda);
    sub.cons_val = std::move(con.values);
    sub.cons_jac = std::move(con.jacobian);
  } else {
    sub.cons_val = Vector(0);
    sub.cons_jac = Matrix(0, x.size());
  }
  return solve_ghost_qp(sub, settings.qp);
}

MlmcDraw mlmc_direction(const StochasticProblem& problem, const Vector& x, const MlmcSettings& settings,
                        SamplingStreams& streams) {
  settings.validate();
  MlmcDraw out;
  auto track = [&out](const GhostSolution& s) {
    if (s.status != QpStatus::Optimal) {
      out.ok = false;
      if (out.worst_status != QpStatus::Infeasible) out.worst_status = s.status;
    }
  };

  const auto single_obj = problem.draw_objective(settings.base_batch, streams.objective);
  const auto single_con = problem.draw_constraint(settings.base_batch, streams.constraint);
  out.level = draw_level(settings, streams.algorithm);
  const std::size_t big = settings.base_batch << (out.level + 1);
  const auto full_obj = problem.draw_objective(big, streams.objective);
  const auto full_con = problem.draw_constraint(big, streams.constraint);

  const auto single = batch_direction(problem, x, single_obj, single_con, settings.ghost);
  const auto full = batch_direction(problem, x, full_obj, full_con, settings.ghost);
  const auto odd = batch_direction(problem, x, full_obj.odd(), full_con.odd(), settings.ghost);
  const auto even = batch_direction(problem, x, full_obj.even(), full_con.even(), settings.ghost);
  track(single);
  track(full);
  track(odd);
  track(even);

  out.direction = (full.d - 0.5 * (odd.d + even.d)) / settings.level_probability(out.level) + single.d;
  return out;
}

}  // namespace fairtrain
