#pragma once

#include "fairtrain/types.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace fairtrain {

/// Features, binary labels and protected-group ids for N observations.
struct GroupedDataset {
  RowMatrix X;                            // N x d
  Vector y;                               // 0/1 labels
  std::vector<int> groups;                // ids in [0, G)
  std::vector<std::string> group_names;   // G entries
  std::vector<std::string> feature_names; // d entries

  std::size_t size() const { return static_cast<std::size_t>(X.rows()); }
  std::size_t dim() const { return static_cast<std::size_t>(X.cols()); }
  std::size_t group_count() const { return group_names.size(); }

  /// Checks equal lengths, id range and that no group is empty.
  void validate() const;
};

/// Maps CSV columns onto a GroupedDataset.
struct CsvSchema {
  std::string label_column;
  /// Cell values (as text) counted as the positive class.
  std::vector<std::string> positive_values;
  /// When set, a numeric label cell strictly above the threshold is positive.
  std::optional<double> label_threshold;

  std::string group_column;
  /// Raw group value -> group name. Key "*" catches every unlisted value.
  /// Empty map: raw values are used as names.
  std::map<std::string, std::string> group_map;
  /// Fixes the id order of groups. Empty: names sorted lexicographically.
  std::vector<std::string> group_names;

  std::vector<std::string> feature_columns;
  /// Declared categories for one-hot encoded feature columns.
  std::map<std::string, std::vector<std::string>> categorical;

  bool operator==(const CsvSchema&) const = default;
};

GroupedDataset load_csv(const std::string& path, const CsvSchema& schema);
GroupedDataset parse_csv(std::istream& in, const CsvSchema& schema);

/// Writes features, a `label` column (0/1) and a `group` column holding names.
void write_csv(const GroupedDataset& ds, const std::string& path);
void write_csv(const GroupedDataset& ds, std::ostream& out);

/// Schema that reads back a file produced by `write_csv` for this dataset.
CsvSchema written_schema(const GroupedDataset& ds);

struct SplitIndices {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
  std::uint64_t seed = 0;
};

/// Random split stratified by protected group. The test side receives
/// ceil((1 - train_frac) * N) rows; per-group shares are allotted by largest
/// remainder so every group is within one row of its exact share.
SplitIndices stratified_split(const GroupedDataset& ds, double train_frac, std::uint64_t seed);

/// Column standardization with the population (1/N) standard deviation.
struct Scaler {
  Vector mean;
  Vector std;
};

Scaler fit_scaler(const GroupedDataset& ds, const std::vector<std::size_t>& idx);
RowMatrix apply_scaler(const Scaler& scaler, const RowMatrix& X);

/// Uniform draws with replacement from `idx`.
std::vector<std::size_t> sample_objective_batch(const std::vector<std::size_t>& idx, std::size_t batch,
                                                Rng& rng);

/// Rows of `idx` per group, optionally restricted to one label value.
std::vector<std::vector<std::size_t>> group_cells(const GroupedDataset& ds, const std::vector<std::size_t>& idx,
                                                  std::optional<int> label = std::nullopt);

/// `per_group` draws with replacement from every group's cell.
std::vector<std::vector<std::size_t>> sample_group_balanced_batch(const GroupedDataset& ds,
                                                                  const std::vector<std::size_t>& idx,
                                                                  std::size_t per_group, Rng& rng,
                                                                  std::optional<int> label = std::nullopt);

struct SyntheticConfig {
  std::size_t n = 10000;
  std::size_t d = 9;
  std::size_t groups = 2;
  std::vector<double> group_weights{0.7, 0.3};
  std::vector<double> label_bias{0.31, 0.21};
  std::uint64_t seed = 0;
  /// Distance between the class-conditional means.
  double class_separation = 1.3;
  /// Distance between the outermost group means along a direction orthogonal to the class direction.
  double group_shift = 1.5;

  bool operator==(const SyntheticConfig&) const = default;
};

/// Gaussian class-conditional features: X = class term + group term + N(0, I).
GroupedDataset generate_synthetic(const SyntheticConfig& config);

}  // namespace fairtrain
