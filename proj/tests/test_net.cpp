#include "support.hpp"

#include "fairtrain/net.hpp"

#include <doctest.h>

using namespace fairtrain;

namespace {

NetworkSpec random_spec(std::mt19937_64& rng, std::size_t max_params) {
  std::uniform_int_distribution<std::size_t> layers(0, 2), width(1, 6), input(1, 5);
  std::uniform_int_distribution<int> act(0, 1);
  while (true) {
    NetworkSpec spec;
    spec.input_dim = input(rng);
    const auto depth = layers(rng);
    for (std::size_t l = 0; l < depth; ++l) spec.hidden_dims.push_back(width(rng));
    spec.activation = act(rng) ? Activation::SoftPlus : Activation::ReLU;
    if (spec.parameter_count() <= max_params) return spec;
  }
}

RowMatrix random_inputs(Index rows, Index cols, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  return RowMatrix::NullaryExpr(rows, cols, [&](Index, Index) { return normal(rng); });
}

}  // namespace

TEST_CASE("parameter count follows the layer widths") {
  NetworkSpec spec{9, {64, 32}, Activation::ReLU};
  CHECK(spec.layer_dims() == std::vector<std::size_t>{9, 64, 32, 1});
  CHECK(spec.parameter_count() == 9 * 64 + 64 + 64 * 32 + 32 + 32 + 1);
  NetworkSpec linear{4, {}, Activation::ReLU};
  CHECK(linear.parameter_count() == 5);
}

TEST_CASE("zero-width layers are rejected") {
  NetworkSpec spec{3, {4, 0}, Activation::ReLU};
  CHECK_THROWS_AS(spec.validate(), ShapeError);
  NetworkSpec no_input{0, {2}, Activation::ReLU};
  CHECK_THROWS_AS(no_input.validate(), ShapeError);
}

TEST_CASE("initialization draws weights within the Glorot bound and zero biases") {
  NetworkSpec spec{5, {7}, Activation::ReLU};
  Rng rng(3);
  const Vector p = initialize_parameters(spec, rng);
  REQUIRE(static_cast<std::size_t>(p.size()) == spec.parameter_count());
  const double bound1 = std::sqrt(6.0 / (5 + 7));
  const double bound2 = std::sqrt(6.0 / (7 + 1));
  CHECK(p.segment(0, 35).cwiseAbs().maxCoeff() <= bound1);
  CHECK(p.segment(35, 7).isZero());
  CHECK(p.segment(42, 7).cwiseAbs().maxCoeff() <= bound2);
  CHECK(p(49) == 0.0);
}

TEST_CASE("forward matches a hand-written two-layer evaluation") {
  NetworkSpec spec{2, {3}, Activation::ReLU};
  Vector p(spec.parameter_count());
  // W1 (3x2, column-major), b1, W2 (1x3), b2
  p << 1.0, -1.0, 0.5, 2.0, 0.0, -0.5, 0.1, 0.2, -0.3, 1.0, -2.0, 0.5, 0.25;
  RowMatrix X(2, 2);
  X << 1.0, 2.0, -1.0, 0.5;
  const Vector logits = predict_logits(spec, p, X);
  for (Index r = 0; r < 2; ++r) {
    const double x0 = X(r, 0), x1 = X(r, 1);
    const double h0 = std::max(0.0, 1.0 * x0 + 2.0 * x1 + 0.1);
    const double h1 = std::max(0.0, -1.0 * x0 + 0.0 * x1 + 0.2);
    const double h2 = std::max(0.0, 0.5 * x0 - 0.5 * x1 - 0.3);
    CHECK(logits(r) == doctest::Approx(1.0 * h0 - 2.0 * h1 + 0.5 * h2 + 0.25).epsilon(1e-14));
  }
}

TEST_CASE("bce_term is stable for large logits") {
  CHECK(bce_term(800.0, 1.0) == doctest::Approx(0.0));
  CHECK(bce_term(-800.0, 0.0) == doctest::Approx(0.0));
  CHECK(bce_term(800.0, 0.0) == doctest::Approx(800.0));
  CHECK(bce_term(0.0, 1.0) == doctest::Approx(std::log(2.0)));
  CHECK(sigmoid(-800.0) >= 0.0);
  CHECK(sigmoid(800.0) == doctest::Approx(1.0));
}

TEST_CASE("backprop matches central differences on random small nets") {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 20; ++trial) {
    const auto spec = random_spec(rng, 100);
    Rng init(static_cast<std::uint64_t>(trial));
    const Vector p = initialize_parameters(spec, init) + Vector::Constant(static_cast<Index>(spec.parameter_count()), 0.01);
    const RowMatrix X = random_inputs(7, static_cast<Index>(spec.input_dim), rng);
    Vector y(7);
    for (Index i = 0; i < 7; ++i) y(i) = static_cast<double>(rng() % 2);

    auto loss = [&](const Vector& q) { return bce_loss(predict_logits(spec, q, X), y); };
    auto fwd = forward(spec, p, X);
    const Vector analytic = backward(spec, p, std::move(fwd.tape), y);
    const Vector numeric = testing::central_difference(loss, p, 1e-6);
    CAPTURE(trial);
    CHECK(testing::max_relative_error(analytic, numeric, 1e-4) < 1e-5);
  }
}

TEST_CASE("seeded backward is a vector-Jacobian product") {
  std::mt19937_64 rng(5);
  NetworkSpec spec{3, {4, 3}, Activation::SoftPlus};
  Rng init(1);
  const Vector p = initialize_parameters(spec, init);
  const RowMatrix X = random_inputs(6, 3, rng);
  Matrix seeds = Matrix::Random(6, 3);

  auto fwd = forward(spec, p, X);
  const Matrix block = backward_seeded(spec, p, std::move(fwd.tape), seeds);
  for (Index c = 0; c < 3; ++c) {
    const Vector seed = seeds.col(c);
    auto f = [&](const Vector& q) { return seed.dot(predict_logits(spec, q, X)); };
    auto one = forward(spec, p, X);
    const Vector single = backward_seeded(spec, p, std::move(one.tape), seed);
    CHECK((single - block.col(c)).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(testing::max_relative_error(single, testing::central_difference(f, p, 1e-6), 1e-4) < 1e-5);
  }
}

TEST_CASE("shape mismatches raise ShapeError") {
  NetworkSpec spec{3, {2}, Activation::ReLU};
  const Vector p = Vector::Zero(static_cast<Index>(spec.parameter_count()));
  CHECK_THROWS_AS(predict_logits(spec, p, RowMatrix::Zero(4, 2)), ShapeError);
  CHECK_THROWS_AS(predict_logits(spec, Vector::Zero(3), RowMatrix::Zero(4, 3)), ShapeError);
  auto fwd = forward(spec, p, RowMatrix::Zero(4, 3));
  CHECK_THROWS_AS(backward(spec, p, std::move(fwd.tape), Vector::Zero(5)), ShapeError);
}

TEST_CASE("activation names round trip") {
  CHECK(activation_from_string(to_string(Activation::ReLU)) == Activation::ReLU);
  CHECK(activation_from_string(to_string(Activation::SoftPlus)) == Activation::SoftPlus);
  CHECK_THROWS(activation_from_string("tanh"));
}
