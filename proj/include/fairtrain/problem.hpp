#pragma once

#include "fairtrain/data.hpp"
#include "fairtrain/net.hpp"
#include "fairtrain/types.hpp"

#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace fairtrain {

/// Sample means of the objective value and gradient over one mini-batch.
struct ObjectiveEstimate {
  double value = 0.0;
  Vector gradient;
};

/// Sample means of the m constraint components and their m x n Jacobian.
struct ConstraintEstimate {
  Vector values;
  Matrix jacobian;
};

/// The draws behind one mini-batch, grouped into sampling cells. What a draw
/// means is up to the problem that produced it (a row index, a noise seed).
struct SampleBatch {
  std::vector<std::vector<std::uint64_t>> cells;

  /// Draws in the smallest cell.
  std::size_t size() const;
  /// Draws at positions 0, 2, 4, ... of every cell.
  SampleBatch odd() const;
  /// Draws at positions 1, 3, 5, ... of every cell.
  SampleBatch even() const;
};

/// Stochastic oracles for min E[f(x, xi)] s.t. E[c(x, zeta)] <= 0.
class StochasticProblem {
 public:
  virtual ~StochasticProblem() = default;

  virtual std::size_t dimension() const = 0;
  virtual std::size_t constraint_count() const = 0;

  /// `batch` iid objective draws.
  virtual SampleBatch draw_objective(std::size_t batch, Rng& rng) const = 0;
  /// `batch` iid constraint draws (per sampling cell).
  virtual SampleBatch draw_constraint(std::size_t batch, Rng& rng) const = 0;

  virtual ObjectiveEstimate objective(const Vector& x, const SampleBatch& batch) const = 0;
  virtual ConstraintEstimate constraints(const Vector& x, const SampleBatch& batch) const = 0;
  /// Constraint values without the Jacobian.
  virtual Vector constraint_values(const Vector& x, const SampleBatch& batch) const {
    return constraints(x, batch).values;
  }
};

/// Independent engines for objective draws, constraint draws and the
/// algorithm's own randomness, so that adding constraint sampling to a method
/// does not perturb its objective sample path.
struct SamplingStreams {
  explicit SamplingStreams(std::uint64_t seed);
  Rng objective;
  Rng constraint;
  Rng algorithm;
};

enum class ConstraintKind { LossGap, EqualOpportunity, EqualizedOdds };

std::string to_string(ConstraintKind kind);
ConstraintKind constraint_kind_from_string(const std::string& name);

/// Two-sided bound on the loss gap between groups, |L_A - L_B| <= delta,
/// split into one-sided components (gap - delta, -gap - delta).
struct ConstraintSpec {
  ConstraintKind kind = ConstraintKind::LossGap;
  double delta = 0.0;
  /// Group pairs (A, B). Empty: every group paired with group 0.
  std::vector<std::pair<int, int>> pairs;

  void validate(std::size_t group_count) const;
  std::vector<std::pair<int, int>> resolved_pairs(std::size_t group_count) const;
  /// Label values conditioning the loss cells; nullopt means unconditioned.
  std::vector<std::optional<int>> label_conditions() const;
  /// Per-component bound: delta, or delta / 2 for each label of equalized odds.
  double component_bound() const;
  std::size_t component_count(std::size_t group_count) const;

  bool operator==(const ConstraintSpec&) const = default;
};

/// Full-set loss and constraint values.
struct FullEvaluation {
  double loss = 0.0;
  Vector constraints;
};

/// Fairness-constrained ERM on a network: BCE objective over uniform draws
/// from the training rows, loss-gap constraints over group-balanced draws.
/// Objective draws form one cell; constraint draws form one cell per
/// (group, label condition).
class FairnessProblem final : public StochasticProblem {
 public:
  FairnessProblem(NetworkSpec net, std::shared_ptr<const GroupedDataset> data, std::vector<std::size_t> train,
                  ConstraintSpec constraint, double penalty = 0.0);

  std::size_t dimension() const override { return net_.parameter_count(); }
  std::size_t constraint_count() const override { return components_.size() * 2; }

  SampleBatch draw_objective(std::size_t batch, Rng& rng) const override;
  SampleBatch draw_constraint(std::size_t batch, Rng& rng) const override;

  /// Mean BCE plus, when the penalty weight is positive, weight * gap^2 for
  /// every constrained gap measured inside the batch.
  ObjectiveEstimate objective(const Vector& x, const SampleBatch& batch) const override;
  ConstraintEstimate constraints(const Vector& x, const SampleBatch& batch) const override;
  Vector constraint_values(const Vector& x, const SampleBatch& batch) const override;

  /// Exact loss and constraint values over the rows `idx` (no sampling).
  FullEvaluation evaluate(const Vector& x, const std::vector<std::size_t>& idx) const;
  /// Constraint cells of `idx` in the layout used by constraint batches.
  SampleBatch full_cells(const std::vector<std::size_t>& idx) const;
  /// Sigmoid scores for the rows `idx`.
  Vector scores(const Vector& x, const std::vector<std::size_t>& idx) const;

  const NetworkSpec& network() const { return net_; }
  const GroupedDataset& data() const { return *data_; }
  const ConstraintSpec& constraint() const { return constraint_; }
  const std::vector<std::size_t>& train_rows() const { return train_; }
  double penalty() const { return penalty_; }

 private:
  struct CellKey {
    int group;
    std::optional<int> label;
  };
  struct Component {
    std::size_t cell_a;
    std::size_t cell_b;
  };

  RowMatrix gather(const std::vector<std::size_t>& rows) const;
  std::size_t cell_of(const CellKey& key);

  NetworkSpec net_;
  std::shared_ptr<const GroupedDataset> data_;
  std::vector<std::size_t> train_;
  ConstraintSpec constraint_;
  double penalty_;
  std::vector<CellKey> cell_keys_;
  std::vector<std::vector<std::size_t>> train_cells_;
  std::vector<Component> components_;  // one per (pair, label condition)
};

/// min 1/2 |x - target|^2 s.t. A x <= b, with additive Gaussian noise:
///   f(x, xi)   = 1/2 |x - target|^2 + sigma xi^T x
///   c_j(x, zeta) = (A_j + sigma zeta_j)^T x - b_j + sigma zeta_j0
/// Every draw is a 64-bit seed expanded into the noise it stands for.
class NoisyQuadraticProblem final : public StochasticProblem {
 public:
  NoisyQuadraticProblem(Vector target, Matrix rows, Vector rhs, double sigma);

  std::size_t dimension() const override { return static_cast<std::size_t>(target_.size()); }
  std::size_t constraint_count() const override { return static_cast<std::size_t>(rhs_.size()); }

  SampleBatch draw_objective(std::size_t batch, Rng& rng) const override;
  SampleBatch draw_constraint(std::size_t batch, Rng& rng) const override;
  ObjectiveEstimate objective(const Vector& x, const SampleBatch& batch) const override;
  ConstraintEstimate constraints(const Vector& x, const SampleBatch& batch) const override;

  /// Noise-free objective and constraint values.
  double exact_objective(const Vector& x) const;
  Vector exact_constraints(const Vector& x) const;

 private:
  Vector target_;
  Matrix rows_;
  Vector rhs_;
  double sigma_;
};

}  // namespace fairtrain
