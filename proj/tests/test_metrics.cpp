#include "support.hpp"

#include "fairtrain/metrics.hpp"

#include <doctest.h>

using namespace fairtrain;

TEST_CASE("wasserstein_1d matches the transport linear program") {
  std::mt19937_64 rng(31);
  std::uniform_int_distribution<std::size_t> size(1, 6);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> a(size(rng)), b(size(rng));
    for (auto& v : a) v = unit(rng);
    for (auto& v : b) v = trial % 5 == 0 ? std::round(unit(rng) * 3) / 3 : unit(rng);
    CAPTURE(trial);
    CHECK(std::abs(wasserstein_1d(a, b) - testing::transport_w1(a, b)) < 1e-9);
  }
}

TEST_CASE("wasserstein_1d basic properties") {
  CHECK(wasserstein_1d({0.1, 0.4}, {0.4, 0.1}) == 0.0);
  CHECK(wasserstein_1d({0.0}, {0.3}) == doctest::Approx(0.3));
  CHECK(wasserstein_1d({0.0, 1.0}, {0.5}) == doctest::Approx(0.5));
  const std::vector<double> a{0.1, 0.7, 0.2}, b{0.9, 0.3};
  CHECK(wasserstein_1d(a, b) == doctest::Approx(wasserstein_1d(b, a)).epsilon(1e-15));
  CHECK_THROWS_AS(wasserstein_1d({}, {0.1}), DataError);
}

TEST_CASE("gap metrics match contingency counting exactly") {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t groups = trial % 4 == 0 ? 3 : 2;
    const auto p = testing::random_predictions(rng, groups);
    const auto n = static_cast<std::size_t>(p.scores.size());
    testing::CountingOracle o(std::vector<double>(p.scores.data(), p.scores.data() + n), p.labels, p.groups, 0.5);
    CAPTURE(trial);
    CHECK(independence_gap(p) == o.ind());
    CHECK(separation_gap(p) == o.sp());
    CHECK(sufficiency_gap(p) == o.sf());
  }
}

TEST_CASE("report on a hand-counted example") {
  PredictionSet p;
  p.scores = Vector(6);
  p.scores << 0.5, 0.51, 0.2, 0.9, 0.1, 0.7;
  p.labels = {1, 1, 0, 0, 1, 0};
  p.groups = {0, 1, 0, 1, 1, 0};
  const auto r = fairness_report(p);
  CHECK(r.ina == doctest::Approx(4.0 / 6.0));  // 0.5 is not above the threshold
  CHECK(r.ind == doctest::Approx(1.0 / 3.0));
  // positive rate given y = 0: 1/2 vs 1/1; given y = 1: 0/1 vs 1/2
  CHECK(r.sp == doctest::Approx(0.5 + 0.5));
  // P(y = 1 | pred -): 1/2 vs 1/1; P(y = 1 | pred +): 0/1 vs 1/2
  CHECK(r.sf == doctest::Approx(0.5 + 0.5));
  CHECK(r.wd == doctest::Approx((0.1 + 0.01 + 0.2) / 3.0));
}

TEST_CASE("invalid prediction sets are rejected") {
  PredictionSet p;
  p.scores = Vector(2);
  p.scores << 0.2, 0.8;
  p.labels = {0, 1};
  p.groups = {0, 0};
  CHECK_THROWS_AS(independence_gap(p), DataError);
  p.groups = {0, 1};
  p.labels = {0, 2};
  CHECK_THROWS(independence_gap(p));
  p.labels = {0, 1};
  p.scores(0) = 1.5;
  CHECK_THROWS(independence_gap(p));
  p.scores(0) = 0.2;
  // Group 1 has no negative label, so the separation cell is empty.
  CHECK_THROWS_AS(separation_gap(p), DataError);
}
