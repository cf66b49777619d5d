#include "support.hpp"

#include "fairtrain/optim.hpp"

#include <doctest.h>

#include <numeric>

using namespace fairtrain;

namespace {

NoisyQuadraticProblem toy(double sigma) {
  Vector target(2);
  target << 2.0, 2.0;
  Matrix rows(1, 2);
  rows << 1.0, 1.0;
  Vector rhs(1);
  rhs << 1.0;
  return NoisyQuadraticProblem(target, rows, rhs, sigma);
}

struct SmallFairness {
  std::shared_ptr<GroupedDataset> data;
  std::unique_ptr<FairnessProblem> problem;
  Vector x0;

  SmallFairness() {
    SyntheticConfig cfg;
    cfg.n = 400;
    cfg.d = 3;
    data = std::make_shared<GroupedDataset>(generate_synthetic(cfg));
    std::vector<std::size_t> train(data->size());
    std::iota(train.begin(), train.end(), std::size_t{0});
    NetworkSpec net{3, {4}, Activation::ReLU};
    problem = std::make_unique<FairnessProblem>(net, data, train, ConstraintSpec{ConstraintKind::LossGap, 0.01, {}});
    Rng rng(1);
    x0 = initialize_parameters(net, rng);
  }
};

}  // namespace

TEST_CASE("ghost stepsizes follow the recursion") {
  CHECK(next_ghost_stepsize(0.05, 0.05) == doctest::Approx(0.049875).epsilon(1e-15));
  std::vector<double> seen;
  StGhConfig cfg;
  cfg.iterations = 3;
  cfg.lambda = 0.5;
  auto problem = toy(0.0);
  SamplingStreams streams(1);
  const auto res = run_stgh(problem, Vector::Zero(2), cfg, streams);
  double alpha = cfg.alpha0;
  for (int k = 1; k < 3; ++k) alpha = next_ghost_stepsize(alpha, cfg.alpha_hat);
  CHECK(res.last_stepsize == alpha);
}

TEST_CASE("sum of squared stepsizes telescopes to (alpha_0 - alpha_K) / alpha_hat") {
  const double alpha_hat = 0.05;
  for (std::size_t K : {std::size_t{10}, std::size_t{1000}, std::size_t{1000000}}) {
    double alpha = 0.05;
    double sum = 0.0, carry = 0.0;
    for (std::size_t k = 0; k < K; ++k) {
      // Compensated summation keeps rounding far below the tolerance.
      const double term = alpha * alpha - carry;
      const double next = sum + term;
      carry = (next - sum) - term;
      sum = next;
      alpha = next_ghost_stepsize(alpha, alpha_hat);
    }
    CAPTURE(K);
    CHECK(sum == doctest::Approx((0.05 - alpha) / alpha_hat).epsilon(1e-9));
    CHECK(alpha > 0.0);
  }
}

TEST_CASE("stepsizes are decreasing, positive and not summable") {
  double alpha = 0.05;
  double total = 0.0;
  for (int k = 0; k < 200000; ++k) {
    const double next = next_ghost_stepsize(alpha, 0.05);
    REQUIRE(next < alpha);
    REQUIRE(next > 0.0);
    total += alpha;
    alpha = next;
  }
  // alpha_k behaves like 1 / (alpha_hat k), so the partial sums grow like log k / alpha_hat.
  CHECK(total > 100.0);
}

TEST_CASE("ALM with zero multiplier step, penalty and smoothing is plain SGD") {
  SmallFairness f;
  AlmConfig alm;
  alm.mu = 0.0;
  alm.rho = 0.0;
  alm.eta = 0.0;
  alm.tau = 0.1;
  alm.objective_batch = 8;
  alm.constraint_batch = 4;
  alm.iterations = 200;
  SgdConfig sgd;
  sgd.lr = 0.1;
  sgd.batch = 8;
  sgd.iterations = 200;
  SamplingStreams s1(9), s2(9);
  const auto a = run_ssl_alm(*f.problem, f.x0, alm, s1);
  const Vector b = run_sgd(*f.problem, f.x0, sgd, s2);
  CHECK(a.x == b);
  CHECK(a.state.y.isZero());
}

TEST_CASE("multipliers reset to zero once their norm reaches the bound") {
  auto inner = toy(0.0);
  Vector one(1);
  one << 1.0;
  testing::FixedConstraintProblem problem(inner, one, Matrix::Zero(1, 2));
  AlmConfig cfg;
  cfg.eta = 0.0625;
  cfg.multiplier_bound = 12.5;  // reached exactly after 200 updates of 1/16
  cfg.iterations = 450;
  std::vector<std::size_t> reset_at;
  double previous = 0.0;
  auto watch = [&](std::size_t k, const AlState& st) {
    if (st.y(0) < previous) reset_at.push_back(k);
    previous = st.y(0);
    CHECK(st.x(2) >= 0.0);
  };
  SamplingStreams streams(1);
  const auto res = run_ssl_alm(problem, Vector::Zero(2), cfg, streams, {}, watch);
  REQUIRE(reset_at.size() == 2);
  CHECK(reset_at[0] == 199);
  CHECK(reset_at[1] == 399);
  CHECK(res.multiplier_resets == 2);
}

TEST_CASE("slack variables stay non-negative") {
  auto problem = toy(0.1);
  AlmConfig cfg;
  cfg.iterations = 500;
  SamplingStreams streams(2);
  auto check = [](std::size_t, const AlState& st) { CHECK(st.x.tail(1).minCoeff() >= 0.0); };
  run_ssl_alm(problem, Vector::Zero(2), cfg, streams, {}, check);
}

TEST_CASE("SSw on an always-feasible problem is SGD with the objective stepsize") {
  SmallFairness f;
  Vector minus_one = Vector::Constant(2, -1.0);
  testing::FixedConstraintProblem feasible(*f.problem, minus_one, Matrix::Zero(2, static_cast<Index>(f.x0.size())));
  SswConfig ssw;
  ssw.eta_f = 0.2;
  ssw.objective_batch = 8;
  ssw.iterations = 150;
  ssw.k0 = 100;
  SgdConfig sgd;
  sgd.lr = 0.2;
  sgd.batch = 8;
  sgd.iterations = 150;
  SamplingStreams s1(4), s2(4);
  const auto a = run_ssw(feasible, f.x0, ssw, s1);
  const Vector b = run_sgd(feasible, f.x0, sgd, s2);
  CHECK(a.last == b);
  CHECK(a.objective_steps == 150);
  CHECK(a.constraint_steps == 0);
  CHECK(a.recorded.size() == 50);
  CHECK(a.chosen >= 100);
}

TEST_CASE("SSw takes constraint steps while infeasible") {
  auto inner = toy(0.0);
  Vector one(1);
  one << 1.0;
  Matrix jac(1, 2);
  jac << 1.0, -1.0;
  testing::FixedConstraintProblem infeasible(inner, one, jac);
  SswConfig cfg;
  cfg.eta_c = 0.5;
  cfg.iterations = 4;
  SamplingStreams streams(1);
  const auto res = run_ssw(infeasible, Vector::Zero(2), cfg, streams);
  CHECK(res.constraint_steps == 4);
  CHECK(res.last(0) == doctest::Approx(-2.0));
  CHECK(res.last(1) == doctest::Approx(2.0));
}

TEST_CASE("tolerance schedule holds eps0 then decays geometrically") {
  SswConfig cfg;
  CHECK(cfg.tolerance(0) == 1e-4);
  CHECK(cfg.tolerance(499) == 1e-4);
  CHECK(cfg.tolerance(500) == 1e-4);
  CHECK(cfg.tolerance(600) == doctest::Approx(1e-4 * std::pow(0.97, 100)).epsilon(1e-12));
}

TEST_CASE("weighted reservoir picks items in proportion to their weight") {
  Rng rng(5);
  const int trials = 100000;
  int second = 0;
  for (int t = 0; t < trials; ++t) {
    WeightedReservoir r;
    r.offer(1.0, rng);
    if (r.offer(10.0, rng)) ++second;
  }
  const double p = 10.0 / 11.0;
  const double se = std::sqrt(p * (1 - p) / trials);
  CHECK(std::abs(second / static_cast<double>(trials) - p) < 4 * se);

  const std::vector<double> weights{0.5, 0.05, 0.05, 0.5, 0.05};
  std::vector<int> counts(weights.size(), 0);
  for (int t = 0; t < trials; ++t) {
    WeightedReservoir r;
    std::size_t chosen = 0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
      if (r.offer(weights[i], rng)) chosen = i;
    }
    ++counts[chosen];
  }
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  for (std::size_t i = 0; i < weights.size(); ++i) {
    const double q = weights[i] / total;
    CAPTURE(i);
    CHECK(std::abs(counts[i] / static_cast<double>(trials) - q) < 4 * std::sqrt(q * (1 - q) / trials));
  }
}

TEST_CASE("the first positive offer is always taken") {
  Rng rng(1);
  WeightedReservoir r;
  CHECK(r.offer(0.3, rng));
  CHECK(r.offers() == 1);
  CHECK(r.total_weight() == 0.3);
  CHECK_THROWS(r.offer(-1.0, rng));
}

TEST_CASE("optimizers are deterministic given the seed") {
  SmallFairness f;
  SswConfig ssw;
  ssw.iterations = 60;
  ssw.k0 = 30;
  ssw.constraint_batch = 4;
  SamplingStreams a(3), b(3);
  const auto r1 = run_ssw(*f.problem, f.x0, ssw, a);
  const auto r2 = run_ssw(*f.problem, f.x0, ssw, b);
  CHECK(r1.x == r2.x);
  CHECK(r1.chosen == r2.chosen);

  StGhConfig stgh;
  stgh.iterations = 5;
  SamplingStreams c(3), d(3);
  CHECK(run_stgh(*f.problem, f.x0, stgh, c).x == run_stgh(*f.problem, f.x0, stgh, d).x);
}

TEST_CASE("invalid settings are rejected") {
  auto problem = toy(0.1);
  SamplingStreams streams(1);
  SswConfig ssw;
  ssw.k0 = ssw.iterations;
  CHECK_THROWS(run_ssw(problem, Vector::Zero(2), ssw, streams));
  AlmConfig alm;
  alm.beta = 0.0;
  CHECK_THROWS(run_ssl_alm(problem, Vector::Zero(2), alm, streams));
  StGhConfig stgh;
  stgh.lambda = 1.0;
  CHECK_THROWS(run_stgh(problem, Vector::Zero(2), stgh, streams));
  SgdConfig sgd;
  CHECK_THROWS_AS(run_sgd(problem, Vector::Zero(3), sgd, streams), ShapeError);
}

TEST_CASE("trajectory logger records every interval and the last iteration") {
  auto problem = toy(0.0);
  auto eval = [&](const Vector& x) { return FullEvaluation{problem.exact_objective(x), problem.exact_constraints(x)}; };
  TrajectoryLogger logger(eval, eval, 10, 25);
  SgdConfig cfg;
  cfg.lr = 0.1;
  cfg.iterations = 25;
  SamplingStreams streams(1);
  run_sgd(problem, Vector::Zero(2), cfg, streams, std::ref(logger));
  std::vector<std::size_t> its;
  for (const auto& row : logger.rows()) its.push_back(row.iteration);
  CHECK(its == std::vector<std::size_t>{0, 10, 20, 25});
  CHECK(logger.rows().front().elapsed == 0.0);
  for (std::size_t i = 1; i < logger.rows().size(); ++i) CHECK(logger.rows()[i].elapsed >= logger.rows()[i - 1].elapsed);
  CHECK(logger.rows().back().train_loss < logger.rows().front().train_loss);
}
