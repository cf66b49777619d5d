#pragma once

#include "fairtrain/types.hpp"

#include <string>
#include <vector>

namespace fairtrain {

enum class Activation { ReLU, SoftPlus };

std::string to_string(Activation a);
Activation activation_from_string(const std::string& name);

/// Fully connected network with a single logit output.
///
/// Parameters are stored flat, layer by layer: the weight matrix of each layer
/// in column-major order (out x in) followed by its bias vector.
struct NetworkSpec {
  std::size_t input_dim = 1;
  std::vector<std::size_t> hidden_dims;
  Activation activation = Activation::ReLU;

  /// Layer widths including input and the scalar output.
  std::vector<std::size_t> layer_dims() const;
  std::size_t parameter_count() const;
  void validate() const;

  bool operator==(const NetworkSpec&) const = default;
};

/// Glorot-uniform weights, zero biases.
Vector initialize_parameters(const NetworkSpec& spec, Rng& rng);

/// Activations recorded by `forward` and consumed by one `backward` call.
class ForwardTape {
 public:
  std::size_t batch_size() const { return batch_size_; }

 private:
  friend struct TapeAccess;
  std::vector<Matrix> pre_;   // pre-activations per layer, out x N
  std::vector<Matrix> post_;  // post_[0] is the input transposed
  std::size_t batch_size_ = 0;
  std::size_t param_count_ = 0;
  std::uint64_t param_hash_ = 0;
};

struct ForwardResult {
  Vector logits;
  ForwardTape tape;
};

/// Logits for every row of `X` plus the tape needed for a backward pass.
ForwardResult forward(const NetworkSpec& spec, const Vector& params, const RowMatrix& X);

/// Logits only; skips storing intermediate activations.
Vector predict_logits(const NetworkSpec& spec, const Vector& params, const RowMatrix& X);

/// Per-sample BCE-with-logits, log(1 + exp(-|z|)) + max(z, 0) - y z.
double bce_term(double logit, double label);

/// Mean BCE-with-logits over the batch.
double bce_loss(const Vector& logits, const Vector& labels);

/// Gradient of mean BCE with respect to every parameter.
Vector backward(const NetworkSpec& spec, const Vector& params, ForwardTape&& tape,
                const Vector& labels);

/// Gradient of sum_j seed_j * logit_j, i.e. a vector-Jacobian product through the net.
Vector backward_seeded(const NetworkSpec& spec, const Vector& params, ForwardTape&& tape,
                       const Vector& seed);

/// One vector-Jacobian product per column of `seeds` (batch x k); returns params x k.
Matrix backward_seeded(const NetworkSpec& spec, const Vector& params, ForwardTape&& tape,
                       const Matrix& seeds);

double sigmoid(double z);

}  // namespace fairtrain
