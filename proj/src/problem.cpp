#include "fairtrain/problem.hpp"

#include <algorithm>
#include <cmath>

namespace fairtrain {

namespace {

struct WeightedRow {
  std::size_t row;
  double weight;  // multiplicity / batch size
};

// Collapses repeated draws into distinct rows weighted by multiplicity.
std::vector<WeightedRow> collapse(const std::vector<std::uint64_t>& draws) {
  if (draws.empty()) throw DataError("mini-batch cell is empty");
  std::vector<std::uint64_t> sorted = draws;
  std::sort(sorted.begin(), sorted.end());
  std::vector<WeightedRow> out;
  const double total = static_cast<double>(draws.size());
  std::size_t i = 0;
  while (i < sorted.size()) {
    std::size_t j = i;
    while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
    out.push_back({static_cast<std::size_t>(sorted[i]), static_cast<double>(j - i) / total});
    i = j;
  }
  return out;
}

SampleBatch take_parity(const SampleBatch& batch, std::size_t parity) {
  SampleBatch out;
  out.cells.reserve(batch.cells.size());
  for (const auto& cell : batch.cells) {
    std::vector<std::uint64_t> half;
    half.reserve(cell.size() / 2 + 1);
    for (std::size_t i = parity; i < cell.size(); i += 2) half.push_back(cell[i]);
    out.cells.push_back(std::move(half));
  }
  return out;
}

// Counter-based generator turning one draw seed into a noise stream.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}
  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }
  double normal() {
    // Box-Muller with u1 in (0, 1].
    const double u1 = (static_cast<double>(next() >> 11) + 1.0) * 0x1.0p-53;
    const double u2 = static_cast<double>(next() >> 11) * 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

 private:
  std::uint64_t state_;
};

}  // namespace

std::size_t SampleBatch::size() const {
  if (cells.empty()) return 0;
  std::size_t n = cells.front().size();
  for (const auto& c : cells) n = std::min(n, c.size());
  return n;
}

SampleBatch SampleBatch::odd() const { return take_parity(*this, 0); }
SampleBatch SampleBatch::even() const { return take_parity(*this, 1); }

SamplingStreams::SamplingStreams(std::uint64_t seed) {
  std::seed_seq obj{seed, std::uint64_t{1}};
  std::seed_seq con{seed, std::uint64_t{2}};
  std::seed_seq alg{seed, std::uint64_t{3}};
  objective.seed(obj);
  constraint.seed(con);
  algorithm.seed(alg);
}

std::string to_string(ConstraintKind kind) {
  switch (kind) {
    case ConstraintKind::LossGap:
      return "loss_gap";
    case ConstraintKind::EqualOpportunity:
      return "equal_opportunity";
    case ConstraintKind::EqualizedOdds:
      return "equalized_odds";
  }
  return "loss_gap";
}

ConstraintKind constraint_kind_from_string(const std::string& name) {
  if (name == "loss_gap" || name == "demographic_parity") return ConstraintKind::LossGap;
  if (name == "equal_opportunity") return ConstraintKind::EqualOpportunity;
  if (name == "equalized_odds") return ConstraintKind::EqualizedOdds;
  throw std::invalid_argument("unknown constraint kind '" + name + "'");
}

void ConstraintSpec::validate(std::size_t group_count) const {
  if (!(delta >= 0.0) || !std::isfinite(delta)) throw std::invalid_argument("constraint delta must be >= 0");
  if (group_count < 2) throw std::invalid_argument("group constraints need at least two groups");
  for (const auto& [a, b] : pairs) {
    if (a == b) throw std::invalid_argument("constraint pair must name two different groups");
    const auto g = static_cast<int>(group_count);
    if (a < 0 || b < 0 || a >= g || b >= g) throw std::invalid_argument("constraint pair names an unknown group");
  }
}

std::vector<std::pair<int, int>> ConstraintSpec::resolved_pairs(std::size_t group_count) const {
  if (!pairs.empty()) return pairs;
  std::vector<std::pair<int, int>> out;
  for (std::size_t g = 1; g < group_count; ++g) out.emplace_back(0, static_cast<int>(g));
  return out;
}

std::vector<std::optional<int>> ConstraintSpec::label_conditions() const {
  switch (kind) {
    case ConstraintKind::LossGap:
      return {std::nullopt};
    case ConstraintKind::EqualOpportunity:
      return {1};
    case ConstraintKind::EqualizedOdds:
      return {1, 0};
  }
  return {std::nullopt};
}

double ConstraintSpec::component_bound() const {
  return kind == ConstraintKind::EqualizedOdds ? 0.5 * delta : delta;
}

std::size_t ConstraintSpec::component_count(std::size_t group_count) const {
  return 2 * resolved_pairs(group_count).size() * label_conditions().size();
}

FairnessProblem::FairnessProblem(NetworkSpec net, std::shared_ptr<const GroupedDataset> data,
                                 std::vector<std::size_t> train, ConstraintSpec constraint, double penalty)
    : net_(std::move(net)),
      data_(std::move(data)),
      train_(std::move(train)),
      constraint_(std::move(constraint)),
      penalty_(penalty) {
  if (!data_) throw std::invalid_argument("problem needs a dataset");
  net_.validate();
  if (net_.input_dim != data_->dim()) throw ShapeError("network input dimension differs from the feature count");
  if (train_.empty()) throw DataError("training index set is empty");
  if (!(penalty_ >= 0.0)) throw std::invalid_argument("penalty weight must be >= 0");
  constraint_.validate(data_->group_count());

  for (const auto& [a, b] : constraint_.resolved_pairs(data_->group_count())) {
    for (const auto& label : constraint_.label_conditions()) {
      components_.push_back({cell_of({a, label}), cell_of({b, label})});
    }
  }
  train_cells_.resize(cell_keys_.size());
  for (auto i : train_) {
    for (std::size_t c = 0; c < cell_keys_.size(); ++c) {
      const auto& key = cell_keys_[c];
      if (data_->groups[i] != key.group) continue;
      if (key.label && static_cast<int>(data_->y(static_cast<Index>(i))) != *key.label) continue;
      train_cells_[c].push_back(i);
    }
  }
  for (std::size_t c = 0; c < cell_keys_.size(); ++c) {
    if (train_cells_[c].empty()) {
      std::string name = "group '" + data_->group_names[static_cast<std::size_t>(cell_keys_[c].group)] + "'";
      if (cell_keys_[c].label) name += " with label " + std::to_string(*cell_keys_[c].label);
      throw DataError("constraint cell " + name + " has no training rows");
    }
  }
}

std::size_t FairnessProblem::cell_of(const CellKey& key) {
  for (std::size_t c = 0; c < cell_keys_.size(); ++c) {
    if (cell_keys_[c].group == key.group && cell_keys_[c].label == key.label) return c;
  }
  cell_keys_.push_back(key);
  return cell_keys_.size() - 1;
}

RowMatrix FairnessProblem::gather(const std::vector<std::size_t>& rows) const {
  RowMatrix out(static_cast<Index>(rows.size()), data_->X.cols());
  for (std::size_t k = 0; k < rows.size(); ++k) out.row(static_cast<Index>(k)) = data_->X.row(static_cast<Index>(rows[k]));
  return out;
}

SampleBatch FairnessProblem::draw_objective(std::size_t batch, Rng& rng) const {
  std::uniform_int_distribution<std::size_t> pick(0, train_.size() - 1);
  SampleBatch out;
  out.cells.emplace_back(batch);
  for (auto& v : out.cells[0]) v = train_[pick(rng)];
  return out;
}

SampleBatch FairnessProblem::draw_constraint(std::size_t batch, Rng& rng) const {
  SampleBatch out;
  out.cells.reserve(train_cells_.size());
  for (const auto& cell : train_cells_) {
    std::uniform_int_distribution<std::size_t> pick(0, cell.size() - 1);
    std::vector<std::uint64_t> draws(batch);
    for (auto& v : draws) v = cell[pick(rng)];
    out.cells.push_back(std::move(draws));
  }
  return out;
}

ObjectiveEstimate FairnessProblem::objective(const Vector& x, const SampleBatch& batch) const {
  if (batch.cells.size() != 1) throw ShapeError("objective batch must have exactly one cell");
  const auto rows = collapse(batch.cells[0]);
  std::vector<std::size_t> ids(rows.size());
  for (std::size_t k = 0; k < rows.size(); ++k) ids[k] = rows[k].row;

  auto fwd = forward(net_, x, gather(ids));
  const Index n = fwd.logits.size();
  Vector losses(n), residual(n);
  ObjectiveEstimate est;
  Vector seed(n);
  for (Index k = 0; k < n; ++k) {
    const double label = data_->y(static_cast<Index>(ids[static_cast<std::size_t>(k)]));
    losses(k) = bce_term(fwd.logits(k), label);
    residual(k) = sigmoid(fwd.logits(k)) - label;
    est.value += rows[static_cast<std::size_t>(k)].weight * losses(k);
    seed(k) = rows[static_cast<std::size_t>(k)].weight * residual(k);
  }

  if (penalty_ > 0.0) {
    for (const auto& comp : components_) {
      const auto& key_a = cell_keys_[comp.cell_a];
      const auto& key_b = cell_keys_[comp.cell_b];
      auto in_cell = [&](std::size_t row, const CellKey& key) {
        if (data_->groups[row] != key.group) return false;
        return !key.label || static_cast<int>(data_->y(static_cast<Index>(row))) == *key.label;
      };
      double mass_a = 0.0, mass_b = 0.0, loss_a = 0.0, loss_b = 0.0;
      for (Index k = 0; k < n; ++k) {
        const auto& r = rows[static_cast<std::size_t>(k)];
        if (in_cell(r.row, key_a)) {
          mass_a += r.weight;
          loss_a += r.weight * losses(k);
        } else if (in_cell(r.row, key_b)) {
          mass_b += r.weight;
          loss_b += r.weight * losses(k);
        }
      }
      if (mass_a == 0.0 || mass_b == 0.0) continue;
      const double gap = loss_a / mass_a - loss_b / mass_b;
      est.value += penalty_ * gap * gap;
      const double scale = 2.0 * penalty_ * gap;
      for (Index k = 0; k < n; ++k) {
        const auto& r = rows[static_cast<std::size_t>(k)];
        if (in_cell(r.row, key_a)) {
          seed(k) += scale * r.weight / mass_a * residual(k);
        } else if (in_cell(r.row, key_b)) {
          seed(k) -= scale * r.weight / mass_b * residual(k);
        }
      }
    }
  }
  est.gradient = backward_seeded(net_, x, std::move(fwd.tape), seed);
  return est;
}

ConstraintEstimate FairnessProblem::constraints(const Vector& x, const SampleBatch& batch) const {
  if (batch.cells.size() != cell_keys_.size()) throw ShapeError("constraint batch has the wrong number of cells");
  std::vector<std::size_t> ids;
  std::vector<double> weights;
  std::vector<std::size_t> start(cell_keys_.size() + 1, 0);
  for (std::size_t c = 0; c < cell_keys_.size(); ++c) {
    for (const auto& r : collapse(batch.cells[c])) {
      ids.push_back(r.row);
      weights.push_back(r.weight);
    }
    start[c + 1] = ids.size();
  }

  auto fwd = forward(net_, x, gather(ids));
  const Index n = fwd.logits.size();
  Vector residual(n);
  std::vector<double> cell_loss(cell_keys_.size(), 0.0);
  for (std::size_t c = 0; c < cell_keys_.size(); ++c) {
    for (std::size_t k = start[c]; k < start[c + 1]; ++k) {
      const double label = data_->y(static_cast<Index>(ids[k]));
      const double z = fwd.logits(static_cast<Index>(k));
      cell_loss[c] += weights[k] * bce_term(z, label);
      residual(static_cast<Index>(k)) = weights[k] * (sigmoid(z) - label);
    }
  }

  Matrix seeds = Matrix::Zero(n, static_cast<Index>(components_.size()));
  for (std::size_t k = 0; k < components_.size(); ++k) {
    const auto& comp = components_[k];
    for (std::size_t r = start[comp.cell_a]; r < start[comp.cell_a + 1]; ++r) {
      seeds(static_cast<Index>(r), static_cast<Index>(k)) += residual(static_cast<Index>(r));
    }
    for (std::size_t r = start[comp.cell_b]; r < start[comp.cell_b + 1]; ++r) {
      seeds(static_cast<Index>(r), static_cast<Index>(k)) -= residual(static_cast<Index>(r));
    }
  }
  const Matrix grads = backward_seeded(net_, x, std::move(fwd.tape), seeds);

  const double bound = constraint_.component_bound();
  ConstraintEstimate est;
  est.values.resize(static_cast<Index>(2 * components_.size()));
  est.jacobian.resize(static_cast<Index>(2 * components_.size()), x.size());
  for (std::size_t k = 0; k < components_.size(); ++k) {
    const double gap = cell_loss[components_[k].cell_a] - cell_loss[components_[k].cell_b];
    const auto i = static_cast<Index>(2 * k);
    est.values(i) = gap - bound;
    est.values(i + 1) = -gap - bound;
    est.jacobian.row(i) = grads.col(static_cast<Index>(k)).transpose();
    est.jacobian.row(i + 1) = -grads.col(static_cast<Index>(k)).transpose();
  }
  return est;
}

Vector FairnessProblem::constraint_values(const Vector& x, const SampleBatch& batch) const {
  if (batch.cells.size() != cell_keys_.size()) throw ShapeError("constraint batch has the wrong number of cells");
  std::vector<double> cell_loss(cell_keys_.size(), 0.0);
  for (std::size_t c = 0; c < cell_keys_.size(); ++c) {
    const auto rows = collapse(batch.cells[c]);
    std::vector<std::size_t> ids(rows.size());
    for (std::size_t k = 0; k < rows.size(); ++k) ids[k] = rows[k].row;
    const Vector z = predict_logits(net_, x, gather(ids));
    for (std::size_t k = 0; k < rows.size(); ++k) {
      cell_loss[c] += rows[k].weight * bce_term(z(static_cast<Index>(k)), data_->y(static_cast<Index>(ids[k])));
    }
  }
  const double bound = constraint_.component_bound();
  Vector values(static_cast<Index>(2 * components_.size()));
  for (std::size_t k = 0; k < components_.size(); ++k) {
    const double gap = cell_loss[components_[k].cell_a] - cell_loss[components_[k].cell_b];
    values(static_cast<Index>(2 * k)) = gap - bound;
    values(static_cast<Index>(2 * k + 1)) = -gap - bound;
  }
  return values;
}

SampleBatch FairnessProblem::full_cells(const std::vector<std::size_t>& idx) const {
  SampleBatch out;
  out.cells.resize(cell_keys_.size());
  for (auto i : idx) {
    for (std::size_t c = 0; c < cell_keys_.size(); ++c) {
      const auto& key = cell_keys_[c];
      if (data_->groups[i] != key.group) continue;
      if (key.label && static_cast<int>(data_->y(static_cast<Index>(i))) != *key.label) continue;
      out.cells[c].push_back(i);
    }
  }
  return out;
}

FullEvaluation FairnessProblem::evaluate(const Vector& x, const std::vector<std::size_t>& idx) const {
  if (idx.empty()) throw DataError("cannot evaluate on an empty index set");
  const Vector z = predict_logits(net_, x, gather(idx));
  std::vector<double> cell_sum(cell_keys_.size(), 0.0);
  std::vector<std::size_t> cell_count(cell_keys_.size(), 0);
  double total = 0.0;
  for (std::size_t k = 0; k < idx.size(); ++k) {
    const auto row = idx[k];
    const double label = data_->y(static_cast<Index>(row));
    const double loss = bce_term(z(static_cast<Index>(k)), label);
    total += loss;
    for (std::size_t c = 0; c < cell_keys_.size(); ++c) {
      const auto& key = cell_keys_[c];
      if (data_->groups[row] != key.group) continue;
      if (key.label && static_cast<int>(label) != *key.label) continue;
      cell_sum[c] += loss;
      ++cell_count[c];
    }
  }
  FullEvaluation out;
  out.loss = total / static_cast<double>(idx.size());
  const double bound = constraint_.component_bound();
  out.constraints.resize(static_cast<Index>(2 * components_.size()));
  for (std::size_t k = 0; k < components_.size(); ++k) {
    const auto a = components_[k].cell_a;
    const auto b = components_[k].cell_b;
    if (cell_count[a] == 0 || cell_count[b] == 0) throw DataError("evaluation set leaves a constraint cell empty");
    const double gap = cell_sum[a] / static_cast<double>(cell_count[a]) - cell_sum[b] / static_cast<double>(cell_count[b]);
    out.constraints(static_cast<Index>(2 * k)) = gap - bound;
    out.constraints(static_cast<Index>(2 * k + 1)) = -gap - bound;
  }
  return out;
}

Vector FairnessProblem::scores(const Vector& x, const std::vector<std::size_t>& idx) const {
  return predict_logits(net_, x, gather(idx)).unaryExpr([](double z) { return sigmoid(z); });
}

NoisyQuadraticProblem::NoisyQuadraticProblem(Vector target, Matrix rows, Vector rhs, double sigma)
    : target_(std::move(target)), rows_(std::move(rows)), rhs_(std::move(rhs)), sigma_(sigma) {
  if (rows_.cols() != target_.size() || rows_.rows() != rhs_.size()) {
    throw ShapeError("constraint rows do not match the target dimension");
  }
  if (!(sigma_ >= 0.0)) throw std::invalid_argument("noise level must be >= 0");
}

SampleBatch NoisyQuadraticProblem::draw_objective(std::size_t batch, Rng& rng) const {
  SampleBatch out;
  out.cells.emplace_back(batch);
  for (auto& v : out.cells[0]) v = rng();
  return out;
}

SampleBatch NoisyQuadraticProblem::draw_constraint(std::size_t batch, Rng& rng) const {
  return draw_objective(batch, rng);
}

ObjectiveEstimate NoisyQuadraticProblem::objective(const Vector& x, const SampleBatch& batch) const {
  if (batch.cells.size() != 1 || batch.cells[0].empty()) throw ShapeError("objective batch must be one non-empty cell");
  const auto& draws = batch.cells[0];
  Vector noise = Vector::Zero(x.size());
  for (auto seed : draws) {
    SplitMix64 gen(seed);
    for (Index i = 0; i < x.size(); ++i) noise(i) += gen.normal();
  }
  noise *= sigma_ / static_cast<double>(draws.size());
  ObjectiveEstimate est;
  est.value = 0.5 * (x - target_).squaredNorm() + noise.dot(x);
  est.gradient = x - target_ + noise;
  return est;
}

ConstraintEstimate NoisyQuadraticProblem::constraints(const Vector& x, const SampleBatch& batch) const {
  if (batch.cells.size() != 1 || batch.cells[0].empty()) throw ShapeError("constraint batch must be one non-empty cell");
  const auto& draws = batch.cells[0];
  const Index m = rhs_.size();
  const Index n = x.size();
  Matrix jac_noise = Matrix::Zero(m, n);
  Vector value_noise = Vector::Zero(m);
  for (auto seed : draws) {
    SplitMix64 gen(~seed);
    for (Index j = 0; j < m; ++j) {
      value_noise(j) += gen.normal();
      for (Index i = 0; i < n; ++i) jac_noise(j, i) += gen.normal();
    }
  }
  const double scale = sigma_ / static_cast<double>(draws.size());
  ConstraintEstimate est;
  est.jacobian = rows_ + scale * jac_noise;
  est.values = est.jacobian * x - rhs_ + scale * value_noise;
  return est;
}

double NoisyQuadraticProblem::exact_objective(const Vector& x) const { return 0.5 * (x - target_).squaredNorm(); }

Vector NoisyQuadraticProblem::exact_constraints(const Vector& x) const { return rows_ * x - rhs_; }

}  // namespace fairtrain
