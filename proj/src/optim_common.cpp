#include "fairtrain/optim.hpp"

#include <cmath>

namespace fairtrain {

TrajectoryLogger::TrajectoryLogger(Evaluator train, Evaluator test, std::size_t every, std::size_t last)
    : train_(std::move(train)), test_(std::move(test)), every_(every), last_(last) {
  if (every_ == 0) throw std::invalid_argument("logging interval must be at least 1");
}

void TrajectoryLogger::operator()(std::size_t k, const Vector& x) {
  const auto paused_at = Clock::now();
  if (!started_) {
    started_ = true;
    start_ = paused_at;
  }
  if (k % every_ != 0 && k != last_) return;
  TrajectoryRow row;
  row.iteration = k;
  row.elapsed = std::chrono::duration<double>(paused_at - start_ - paused_).count();
  auto train = train_(x);
  row.train_loss = train.loss;
  row.train_constraints = std::move(train.constraints);
  if (test_) {
    auto test = test_(x);
    row.test_loss = test.loss;
    row.test_constraints = std::move(test.constraints);
  }
  rows_.push_back(std::move(row));
  paused_ += Clock::now() - paused_at;
}

double next_ghost_stepsize(double alpha, double alpha_hat) { return alpha * (1.0 - alpha_hat * alpha); }

bool WeightedReservoir::offer(double weight, Rng& rng) {
  if (!(weight >= 0.0)) throw std::invalid_argument("reservoir weights must be non-negative");
  ++offers_;
  total_ += weight;
  const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  return total_ > 0.0 && u * total_ < weight;
}

void SswConfig::validate() const {
  if (!(eta_f > 0.0) || !(eta_c > 0.0)) throw std::invalid_argument("SSw stepsizes must be positive");
  if (!(decay > 0.0 && decay <= 1.0)) throw std::invalid_argument("SSw decay must lie in (0, 1]");
  if (!(eps0 >= 0.0)) throw std::invalid_argument("SSw tolerance must be non-negative");
  if (objective_batch == 0 || constraint_batch == 0 || step_batch == 0) throw std::invalid_argument("SSw batch sizes must be positive");
  if (k0 >= iterations) throw std::invalid_argument("SSw k0 must be below the iteration count");
}

double SswConfig::tolerance(std::size_t k) const {
  if (k < switch_iter) return eps0;
  return eps0 * std::pow(decay, static_cast<double>(k - switch_iter));
}

}  // namespace fairtrain
