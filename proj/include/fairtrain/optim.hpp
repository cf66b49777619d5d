#pragma once

#include "fairtrain/mlmc.hpp"
#include "fairtrain/problem.hpp"

#include <chrono>
#include <functional>
#include <optional>
#include <vector>

namespace fairtrain {

/// Receives the iterate after k iterations, for k = 0, 1, ..., K.
using IterateObserver = std::function<void(std::size_t k, const Vector& x)>;

/// One logged point of a run.
struct TrajectoryRow {
  std::size_t iteration = 0;
  double elapsed = 0.0;  // seconds, evaluation time excluded
  double train_loss = 0.0;
  Vector train_constraints;
  double test_loss = 0.0;
  Vector test_constraints;
};

/// Observer that evaluates train and test sets every `every` iterations and
/// at the last one. The clock starts at the first call and stops while the
/// evaluation runs.
class TrajectoryLogger {
 public:
  using Evaluator = std::function<FullEvaluation(const Vector&)>;

  TrajectoryLogger(Evaluator train, Evaluator test, std::size_t every, std::size_t last);

  void operator()(std::size_t k, const Vector& x);
  const std::vector<TrajectoryRow>& rows() const { return rows_; }

 private:
  using Clock = std::chrono::steady_clock;
  Evaluator train_;
  Evaluator test_;
  std::size_t every_;
  std::size_t last_;
  bool started_ = false;
  Clock::time_point start_;
  Clock::duration paused_{};
  std::vector<TrajectoryRow> rows_;
};

// ---------------------------------------------------------------- StGh

struct StGhConfig {
  double p0 = 0.4;
  double alpha0 = 0.05;
  double alpha_hat = 0.05;
  double rho = 0.8;  // accepted for completeness, not used by the method
  double tau = 1.0;
  double beta = 10.0;
  double lambda = 0.5;
  std::size_t iterations = 1000;
  std::size_t base_batch = 1;
  std::size_t max_level = 20;
  /// Fraction of iterations whose direction may fail before the run aborts.
  double max_skip_fraction = 0.01;

  bool operator==(const StGhConfig&) const = default;
  void validate() const;
  MlmcSettings mlmc() const;
};

/// alpha_{k} = alpha_{k-1} (1 - alpha_hat alpha_{k-1}).
double next_ghost_stepsize(double alpha, double alpha_hat);

struct StGhResult {
  Vector x;
  std::size_t skipped = 0;
  double last_stepsize = 0.0;
};

StGhResult run_stgh(const StochasticProblem& problem, const Vector& x0, const StGhConfig& cfg,
                    SamplingStreams& streams, const IterateObserver& observer = {});

// ------------------------------------------------------- SSL-ALM / ALM

struct AlmConfig {
  double mu = 2.0;   // proximal weight; 0 gives plain ALM
  double rho = 1.0;  // penalty weight
  double tau = 0.01;
  double eta = 0.05;
  double beta = 0.5;
  double multiplier_bound = 10.0;
  std::size_t iterations = 1000;
  std::size_t objective_batch = 1;
  std::size_t constraint_batch = 1;

  bool operator==(const AlmConfig&) const = default;
  void validate() const;
};

/// Variables of the slack-extended augmented Lagrangian iteration.
struct AlState {
  Vector x;  // parameters followed by one slack per constraint component
  Vector y;  // multipliers
  Vector z;  // proximal anchor, same layout as x
};

/// Called after each iteration k = 0..K-1 with the updated state.
using AlStateObserver = std::function<void(std::size_t k, const AlState& state)>;

struct AlmResult {
  Vector x;
  AlState state;
  std::size_t multiplier_resets = 0;
};

AlmResult run_ssl_alm(const StochasticProblem& problem, const Vector& x0, const AlmConfig& cfg,
                      SamplingStreams& streams, const IterateObserver& observer = {},
                      const AlStateObserver& state_observer = {});

// -------------------------------------------------------------- SSw

struct SswConfig {
  double eta_f = 0.5;
  double eta_c = 0.05;
  double eps0 = 1e-4;
  std::size_t switch_iter = 500;
  double decay = 0.97;
  /// Draws behind one objective subgradient.
  std::size_t objective_batch = 1;
  /// Draws per cell for the infeasibility test.
  std::size_t constraint_batch = 1;
  /// Draws per cell behind one constraint subgradient.
  std::size_t step_batch = 1;
  std::size_t k0 = 0;
  std::size_t iterations = 1000;

  bool operator==(const SswConfig&) const = default;
  void validate() const;
  /// eps0 before switch_iter, eps0 * decay^(k - switch_iter) from then on.
  double tolerance(std::size_t k) const;
};

/// Keeps one of the offered items with probability proportional to its weight,
/// using one uniform draw per offer.
class WeightedReservoir {
 public:
  /// Returns true if the offered item replaced the current choice.
  bool offer(double weight, Rng& rng);
  double total_weight() const { return total_; }
  std::size_t offers() const { return offers_; }

 private:
  double total_ = 0.0;
  std::size_t offers_ = 0;
};

struct SswResult {
  Vector x;  // the sampled output iterate
  Vector last;
  std::vector<std::size_t> recorded;
  std::size_t chosen = 0;
  std::size_t objective_steps = 0;
  std::size_t constraint_steps = 0;
};

SswResult run_ssw(const StochasticProblem& problem, const Vector& x0, const SswConfig& cfg, SamplingStreams& streams,
                  const IterateObserver& observer = {});

// -------------------------------------------------------------- SGD

struct SgdConfig {
  double lr = 0.05;
  std::size_t batch = 1;
  std::size_t iterations = 1000;

  bool operator==(const SgdConfig&) const = default;
  void validate() const;
};

Vector run_sgd(const StochasticProblem& problem, const Vector& x0, const SgdConfig& cfg, SamplingStreams& streams,
               const IterateObserver& observer = {});

}  // namespace fairtrain
