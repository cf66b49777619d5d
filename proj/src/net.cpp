#include "fairtrain/net.hpp"

#include <cmath>
#include <cstring>

namespace fairtrain {

struct TapeAccess {
  static std::vector<Matrix>& pre(ForwardTape& t) { return t.pre_; }
  static std::vector<Matrix>& post(ForwardTape& t) { return t.post_; }
  static std::size_t& batch(ForwardTape& t) { return t.batch_size_; }
  static std::size_t& count(ForwardTape& t) { return t.param_count_; }
  static std::uint64_t& hash(ForwardTape& t) { return t.param_hash_; }
};

namespace {

std::uint64_t hash_params(const Vector& params) {
  // FNV-1a over the raw bytes.
  std::uint64_t h = 1469598103934665603ULL;
  const auto* bytes = reinterpret_cast<const unsigned char*>(params.data());
  const std::size_t len = static_cast<std::size_t>(params.size()) * sizeof(double);
  for (std::size_t i = 0; i < len; ++i) {
    h ^= bytes[i];
    h *= 1099511628211ULL;
  }
  return h;
}

double activate(Activation a, double t) {
  switch (a) {
    case Activation::ReLU:
      return t > 0.0 ? t : 0.0;
    case Activation::SoftPlus:
      return std::max(t, 0.0) + std::log1p(std::exp(-std::abs(t)));
  }
  return t;
}

// ReLU'(0) is taken as 0.
double activate_derivative(Activation a, double t) {
  switch (a) {
    case Activation::ReLU:
      return t > 0.0 ? 1.0 : 0.0;
    case Activation::SoftPlus:
      return sigmoid(t);
  }
  return 1.0;
}

void check_inputs(const NetworkSpec& spec, const Vector& params, const RowMatrix& X) {
  spec.validate();
  if (static_cast<std::size_t>(X.cols()) != spec.input_dim) {
    throw ShapeError("feature matrix has " + std::to_string(X.cols()) + " columns, network expects " +
                     std::to_string(spec.input_dim));
  }
  if (static_cast<std::size_t>(params.size()) != spec.parameter_count()) {
    throw ShapeError("parameter vector has length " + std::to_string(params.size()) + ", network has " +
                     std::to_string(spec.parameter_count()) + " parameters");
  }
}

template <typename Record>
Vector run_forward(const NetworkSpec& spec, const Vector& params, const RowMatrix& X, Record&& record) {
  const auto dims = spec.layer_dims();
  const Index n = X.rows();
  Matrix activ = X.transpose();
  Index offset = 0;
  for (std::size_t layer = 1; layer < dims.size(); ++layer) {
    const Index in = static_cast<Index>(dims[layer - 1]);
    const Index out = static_cast<Index>(dims[layer]);
    Eigen::Map<const Matrix> w(params.data() + offset, out, in);
    offset += out * in;
    Eigen::Map<const Vector> b(params.data() + offset, out);
    offset += out;
    Matrix z = w * activ;
    z.colwise() += b;
    const bool is_output = layer + 1 == dims.size();
    Matrix next = is_output ? z : z.unaryExpr([&](double t) { return activate(spec.activation, t); }).eval();
    record(std::move(activ), std::move(z));
    activ = std::move(next);
  }
  Vector logits(n);
  for (Index j = 0; j < n; ++j) logits(j) = activ(0, j);
  return logits;
}

}  // namespace

std::string to_string(Activation a) {
  return a == Activation::ReLU ? "relu" : "softplus";
}

Activation activation_from_string(const std::string& name) {
  if (name == "relu") return Activation::ReLU;
  if (name == "softplus") return Activation::SoftPlus;
  throw std::invalid_argument("unknown activation '" + name + "'");
}

std::vector<std::size_t> NetworkSpec::layer_dims() const {
  std::vector<std::size_t> dims;
  dims.reserve(hidden_dims.size() + 2);
  dims.push_back(input_dim);
  dims.insert(dims.end(), hidden_dims.begin(), hidden_dims.end());
  dims.push_back(1);
  return dims;
}

std::size_t NetworkSpec::parameter_count() const {
  const auto dims = layer_dims();
  std::size_t n = 0;
  for (std::size_t i = 1; i < dims.size(); ++i) n += dims[i - 1] * dims[i] + dims[i];
  return n;
}

void NetworkSpec::validate() const {
  if (input_dim == 0) throw ShapeError("network input dimension must be at least 1");
  for (auto h : hidden_dims) {
    if (h == 0) throw ShapeError("hidden layer widths must be at least 1");
  }
}

Vector initialize_parameters(const NetworkSpec& spec, Rng& rng) {
  spec.validate();
  const auto dims = spec.layer_dims();
  Vector params = Vector::Zero(static_cast<Index>(spec.parameter_count()));
  Index offset = 0;
  for (std::size_t layer = 1; layer < dims.size(); ++layer) {
    const auto in = dims[layer - 1];
    const auto out = dims[layer];
    const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
    std::uniform_real_distribution<double> dist(-limit, limit);
    for (std::size_t k = 0; k < in * out; ++k) params(offset++) = dist(rng);
    offset += static_cast<Index>(out);
  }
  return params;
}

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

ForwardResult forward(const NetworkSpec& spec, const Vector& params, const RowMatrix& X) {
  check_inputs(spec, params, X);
  ForwardResult result;
  auto& pre = TapeAccess::pre(result.tape);
  auto& post = TapeAccess::post(result.tape);
  result.logits = run_forward(spec, params, X, [&](Matrix&& in, Matrix&& z) {
    post.push_back(std::move(in));
    pre.push_back(std::move(z));
  });
  TapeAccess::batch(result.tape) = static_cast<std::size_t>(X.rows());
  TapeAccess::count(result.tape) = static_cast<std::size_t>(params.size());
  TapeAccess::hash(result.tape) = hash_params(params);
  return result;
}

Vector predict_logits(const NetworkSpec& spec, const Vector& params, const RowMatrix& X) {
  check_inputs(spec, params, X);
  return run_forward(spec, params, X, [](Matrix&&, Matrix&&) {});
}

double bce_term(double logit, double label) {
  return std::log1p(std::exp(-std::abs(logit))) + std::max(logit, 0.0) - label * logit;
}

double bce_loss(const Vector& logits, const Vector& labels) {
  if (logits.size() != labels.size()) throw ShapeError("logits and labels differ in length");
  if (logits.size() == 0) throw std::invalid_argument("mean loss of an empty batch is undefined");
  double sum = 0.0;
  for (Index j = 0; j < logits.size(); ++j) sum += bce_term(logits(j), labels(j));
  return sum / static_cast<double>(logits.size());
}

Matrix backward_seeded(const NetworkSpec& spec, const Vector& params, ForwardTape&& tape,
                       const Matrix& seeds) {
  auto& pre = TapeAccess::pre(tape);
  auto& post = TapeAccess::post(tape);
  const auto dims = spec.layer_dims();
  if (pre.size() != dims.size() - 1 || TapeAccess::count(tape) != static_cast<std::size_t>(params.size()) ||
      TapeAccess::hash(tape) != hash_params(params)) {
    throw ShapeError("forward tape was not produced by these parameters");
  }
  if (static_cast<std::size_t>(seeds.rows()) != tape.batch_size()) {
    throw ShapeError("seed length differs from the taped batch size");
  }

  std::vector<Index> offsets(dims.size(), 0);
  for (std::size_t layer = 1; layer < dims.size(); ++layer) {
    offsets[layer] = offsets[layer - 1] + static_cast<Index>(dims[layer - 1] * dims[layer] + dims[layer]);
  }
  std::vector<Matrix> slopes;
  slopes.reserve(pre.size());
  for (std::size_t layer = 0; layer + 1 < pre.size(); ++layer) {
    slopes.push_back(pre[layer].unaryExpr([&](double t) { return activate_derivative(spec.activation, t); }));
  }

  Matrix grads(params.size(), seeds.cols());
  for (Index k = 0; k < seeds.cols(); ++k) {
    Matrix delta = seeds.col(k).transpose();
    for (std::size_t layer = dims.size() - 1; layer >= 1; --layer) {
      const Index in = static_cast<Index>(dims[layer - 1]);
      const Index out = static_cast<Index>(dims[layer]);
      const Index offset = offsets[layer - 1];
      Eigen::Map<Matrix> gw(grads.col(k).data() + offset, out, in);
      Eigen::Map<Vector> gb(grads.col(k).data() + offset + out * in, out);
      gw.noalias() = delta * post[layer - 1].transpose();
      gb = delta.rowwise().sum();
      if (layer == 1) break;
      Eigen::Map<const Matrix> w(params.data() + offset, out, in);
      Matrix back = w.transpose() * delta;
      delta = back.cwiseProduct(slopes[layer - 2]);
    }
  }
  pre.clear();
  post.clear();
  return grads;
}

Vector backward_seeded(const NetworkSpec& spec, const Vector& params, ForwardTape&& tape,
                       const Vector& seed) {
  return backward_seeded(spec, params, std::move(tape), Matrix(seed));
}

Vector backward(const NetworkSpec& spec, const Vector& params, ForwardTape&& tape, const Vector& labels) {
  const auto n = tape.batch_size();
  if (static_cast<std::size_t>(labels.size()) != n) throw ShapeError("labels differ in length from the taped batch");
  if (n == 0) throw std::invalid_argument("mean loss of an empty batch is undefined");
  const auto& pre = TapeAccess::pre(tape);
  if (pre.empty() || pre.back().cols() != static_cast<Index>(n)) {
    throw ShapeError("forward tape is empty or already consumed");
  }
  const Matrix& logits = pre.back();
  Vector seed(static_cast<Index>(n));
  for (Index j = 0; j < seed.size(); ++j) seed(j) = (sigmoid(logits(0, j)) - labels(j)) / static_cast<double>(n);
  return backward_seeded(spec, params, std::move(tape), seed);
}

}  // namespace fairtrain
