#include "fairtrain/data.hpp"

#include "fairtrain/csv.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>

namespace fairtrain {

namespace {

std::optional<double> parse_number(const std::string& text) {
  const char* first = text.data();
  const char* last = text.data() + text.size();
  while (first < last && *first == ' ') ++first;
  while (last > first && last[-1] == ' ') --last;
  if (first == last) return std::nullopt;
  if (*first == '+') ++first;
  double value = 0.0;
  auto res = std::from_chars(first, last, value);
  if (res.ec != std::errc() || res.ptr != last) return std::nullopt;
  return value;
}

bool same_value(const std::string& cell, const std::string& key) {
  if (cell == key) return true;
  auto a = parse_number(cell);
  auto b = parse_number(key);
  return a && b && *a == *b;
}

std::string group_name_for(const CsvSchema& schema, const std::string& raw, std::size_t row) {
  if (schema.group_map.empty()) return raw;
  for (const auto& [key, name] : schema.group_map) {
    if (key != "*" && same_value(raw, key)) return name;
  }
  auto wildcard = schema.group_map.find("*");
  if (wildcard != schema.group_map.end()) return wildcard->second;
  throw ParseError(row, "group value '" + raw + "' has no mapping");
}

}  // namespace

void GroupedDataset::validate() const {
  const auto n = size();
  if (static_cast<std::size_t>(y.size()) != n || groups.size() != n) {
    throw DataError("features, labels and groups differ in length");
  }
  if (feature_names.size() != dim()) throw DataError("feature names do not match feature columns");
  std::vector<std::size_t> counts(group_count(), 0);
  for (std::size_t i = 0; i < n; ++i) {
    const int g = groups[i];
    if (g < 0 || static_cast<std::size_t>(g) >= group_count()) {
      throw DataError("group id " + std::to_string(g) + " out of range at row " + std::to_string(i));
    }
    ++counts[static_cast<std::size_t>(g)];
    if (y(static_cast<Index>(i)) != 0.0 && y(static_cast<Index>(i)) != 1.0) {
      throw DataError("label at row " + std::to_string(i) + " is not binary");
    }
  }
  for (std::size_t g = 0; g < counts.size(); ++g) {
    if (counts[g] == 0) throw DataError("group '" + group_names[g] + "' has no observations");
  }
}

GroupedDataset parse_csv(std::istream& in, const CsvSchema& schema) {
  const auto table = csv::read(in);
  const auto label_col = table.column(schema.label_column);
  const auto group_col = table.column(schema.group_column);

  struct FeatureColumn {
    std::size_t index;
    const std::vector<std::string>* categories;
  };
  std::vector<FeatureColumn> features;
  std::vector<std::string> feature_names;
  for (const auto& name : schema.feature_columns) {
    if (name == schema.group_column) throw ParseError(0, "protected column '" + name + "' listed as a feature");
    const auto col = table.column(name);
    auto cat = schema.categorical.find(name);
    if (cat != schema.categorical.end()) {
      features.push_back({col, &cat->second});
      for (const auto& level : cat->second) feature_names.push_back(name + "=" + level);
    } else {
      features.push_back({col, nullptr});
      feature_names.push_back(name);
    }
  }

  const std::size_t n = table.rows.size();
  GroupedDataset ds;
  ds.X = RowMatrix::Zero(static_cast<Index>(n), static_cast<Index>(feature_names.size()));
  ds.y = Vector::Zero(static_cast<Index>(n));
  ds.feature_names = feature_names;

  std::vector<std::string> raw_groups(n);
  for (std::size_t r = 0; r < n; ++r) {
    const auto& cells = table.rows[r];
    const std::size_t row = r + 1;
    for (const auto& cell : cells) {
      if (cell.empty()) throw ParseError(row, "missing value");
    }
    Index c = 0;
    for (const auto& f : features) {
      const auto& cell = cells[f.index];
      if (f.categories) {
        auto it = std::find_if(f.categories->begin(), f.categories->end(),
                               [&](const std::string& level) { return same_value(cell, level); });
        if (it == f.categories->end()) {
          throw ParseError(row, "unknown category '" + cell + "' in column '" + table.header[f.index] + "'");
        }
        ds.X(static_cast<Index>(r), c + (it - f.categories->begin())) = 1.0;
        c += static_cast<Index>(f.categories->size());
      } else {
        auto v = parse_number(cell);
        if (!v || !std::isfinite(*v)) {
          throw ParseError(row, "non-numeric value '" + cell + "' in column '" + table.header[f.index] + "'");
        }
        ds.X(static_cast<Index>(r), c++) = *v;
      }
    }

    const auto& label = cells[label_col];
    bool positive = false;
    if (schema.label_threshold) {
      auto v = parse_number(label);
      if (!v) throw ParseError(row, "non-numeric label '" + label + "'");
      positive = *v > *schema.label_threshold;
    } else {
      positive = std::any_of(schema.positive_values.begin(), schema.positive_values.end(),
                             [&](const std::string& p) { return same_value(label, p); });
    }
    ds.y(static_cast<Index>(r)) = positive ? 1.0 : 0.0;
    raw_groups[r] = group_name_for(schema, cells[group_col], row);
  }

  if (!schema.group_names.empty()) {
    ds.group_names = schema.group_names;
  } else {
    std::set<std::string> names(raw_groups.begin(), raw_groups.end());
    ds.group_names.assign(names.begin(), names.end());
  }
  ds.groups.resize(n);
  for (std::size_t r = 0; r < n; ++r) {
    auto it = std::find(ds.group_names.begin(), ds.group_names.end(), raw_groups[r]);
    if (it == ds.group_names.end()) throw ParseError(r + 1, "group '" + raw_groups[r] + "' is not declared");
    ds.groups[r] = static_cast<int>(it - ds.group_names.begin());
  }
  ds.validate();
  return ds;
}

GroupedDataset load_csv(const std::string& path, const CsvSchema& schema) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  return parse_csv(in, schema);
}

void write_csv(const GroupedDataset& ds, std::ostream& out) {
  auto header = ds.feature_names;
  header.push_back("label");
  header.push_back("group");
  csv::write_row(out, header);
  std::vector<std::string> fields(header.size());
  for (std::size_t r = 0; r < ds.size(); ++r) {
    for (std::size_t c = 0; c < ds.dim(); ++c) {
      fields[c] = csv::format_double(ds.X(static_cast<Index>(r), static_cast<Index>(c)));
    }
    fields[ds.dim()] = ds.y(static_cast<Index>(r)) > 0.5 ? "1" : "0";
    fields[ds.dim() + 1] = ds.group_names[static_cast<std::size_t>(ds.groups[r])];
    csv::write_row(out, fields);
  }
}

void write_csv(const GroupedDataset& ds, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  write_csv(ds, out);
}

CsvSchema written_schema(const GroupedDataset& ds) {
  CsvSchema schema;
  schema.label_column = "label";
  schema.positive_values = {"1"};
  schema.group_column = "group";
  schema.group_names = ds.group_names;
  schema.feature_columns = ds.feature_names;
  return schema;
}

SplitIndices stratified_split(const GroupedDataset& ds, double train_frac, std::uint64_t seed) {
  if (!(train_frac > 0.0 && train_frac < 1.0)) throw DataError("train fraction must lie in (0, 1)");
  const auto cells = group_cells(ds, [&] {
    std::vector<std::size_t> all(ds.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    return all;
  }());
  for (std::size_t g = 0; g < cells.size(); ++g) {
    if (cells[g].size() < 2) throw DataError("group '" + ds.group_names[g] + "' has fewer than 2 observations");
  }

  const double n = static_cast<double>(ds.size());
  const auto n_test = static_cast<std::size_t>(std::ceil((1.0 - train_frac) * n - 1e-9));
  const std::size_t n_train = ds.size() - n_test;

  // Largest-remainder allotment of train rows to groups.
  std::vector<std::size_t> quota(cells.size());
  std::vector<std::pair<double, std::size_t>> remainders;
  std::size_t allotted = 0;
  for (std::size_t g = 0; g < cells.size(); ++g) {
    const double exact = train_frac * static_cast<double>(cells[g].size());
    quota[g] = static_cast<std::size_t>(std::floor(exact));
    allotted += quota[g];
    remainders.emplace_back(exact - std::floor(exact), g);
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t k = 0; allotted < n_train && k < remainders.size(); ++k, ++allotted) {
    ++quota[remainders[k].second];
  }

  Rng rng(seed);
  SplitIndices split;
  split.seed = seed;
  for (std::size_t g = 0; g < cells.size(); ++g) {
    auto rows = cells[g];
    std::shuffle(rows.begin(), rows.end(), rng);
    split.train.insert(split.train.end(), rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(quota[g]));
    split.test.insert(split.test.end(), rows.begin() + static_cast<std::ptrdiff_t>(quota[g]), rows.end());
  }
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.test.begin(), split.test.end());
  return split;
}

Scaler fit_scaler(const GroupedDataset& ds, const std::vector<std::size_t>& idx) {
  if (idx.empty()) throw DataError("cannot fit a scaler on an empty index set");
  const Index d = ds.X.cols();
  Scaler s{Vector::Zero(d), Vector::Zero(d)};
  const double count = static_cast<double>(idx.size());
  for (auto i : idx) s.mean += ds.X.row(static_cast<Index>(i)).transpose();
  s.mean /= count;
  for (auto i : idx) s.std += (ds.X.row(static_cast<Index>(i)).transpose() - s.mean).cwiseAbs2();
  s.std = (s.std / count).cwiseSqrt();
  for (Index c = 0; c < d; ++c) {
    // Constant columns (up to rounding) keep unit scale and map to zero.
    const double tol = 10.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(s.mean(c)));
    if (s.std(c) <= tol) s.std(c) = 1.0;
  }
  return s;
}

RowMatrix apply_scaler(const Scaler& scaler, const RowMatrix& X) {
  if (X.cols() != scaler.mean.size()) throw ShapeError("scaler width differs from the feature matrix");
  RowMatrix out = X.rowwise() - scaler.mean.transpose();
  return out.array().rowwise() / scaler.std.transpose().array();
}

std::vector<std::size_t> sample_objective_batch(const std::vector<std::size_t>& idx, std::size_t batch,
                                                Rng& rng) {
  if (idx.empty()) throw DataError("cannot sample from an empty index set");
  std::uniform_int_distribution<std::size_t> pick(0, idx.size() - 1);
  std::vector<std::size_t> out(batch);
  for (auto& v : out) v = idx[pick(rng)];
  return out;
}

std::vector<std::vector<std::size_t>> group_cells(const GroupedDataset& ds, const std::vector<std::size_t>& idx,
                                                  std::optional<int> label) {
  std::vector<std::vector<std::size_t>> cells(ds.group_count());
  for (auto i : idx) {
    if (label && static_cast<int>(ds.y(static_cast<Index>(i))) != *label) continue;
    cells[static_cast<std::size_t>(ds.groups[i])].push_back(i);
  }
  return cells;
}

std::vector<std::vector<std::size_t>> sample_group_balanced_batch(const GroupedDataset& ds,
                                                                  const std::vector<std::size_t>& idx,
                                                                  std::size_t per_group, Rng& rng,
                                                                  std::optional<int> label) {
  auto cells = group_cells(ds, idx, label);
  std::vector<std::vector<std::size_t>> out;
  out.reserve(cells.size());
  for (std::size_t g = 0; g < cells.size(); ++g) {
    if (cells[g].empty()) {
      std::string name = "group '" + ds.group_names[g] + "'";
      if (label) name += " with label " + std::to_string(*label);
      throw DataError("sampling cell " + name + " is empty");
    }
    out.push_back(sample_objective_batch(cells[g], per_group, rng));
  }
  return out;
}

GroupedDataset generate_synthetic(const SyntheticConfig& config) {
  if (config.n == 0 || config.d == 0 || config.groups == 0) throw DataError("synthetic sizes must be positive");
  if (config.group_weights.size() != config.groups || config.label_bias.size() != config.groups) {
    throw DataError("need one weight and one label bias per group");
  }
  double total = 0.0;
  for (double w : config.group_weights) {
    if (!(w >= 0.0)) throw DataError("group weights must be nonnegative");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-9) throw DataError("group weights must sum to 1");
  for (double p : config.label_bias) {
    if (!(p >= 0.0 && p <= 1.0)) throw DataError("label biases must lie in [0, 1]");
  }

  const Index d = static_cast<Index>(config.d);
  const Vector class_dir = Vector::Constant(d, 1.0 / std::sqrt(static_cast<double>(d)));
  Vector group_dir = Vector::Zero(d);
  for (Index j = 0; j < d; ++j) group_dir(j) = (j % 2 == 0) ? 1.0 : -1.0;
  group_dir -= group_dir.dot(class_dir) * class_dir;
  if (group_dir.norm() > 0.0) group_dir.normalize();

  Rng rng(config.seed);
  std::discrete_distribution<int> pick_group(config.group_weights.begin(), config.group_weights.end());
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> noise(0.0, 1.0);

  GroupedDataset ds;
  ds.X.resize(static_cast<Index>(config.n), d);
  ds.y.resize(static_cast<Index>(config.n));
  ds.groups.resize(config.n);
  for (std::size_t g = 0; g < config.groups; ++g) ds.group_names.push_back("g" + std::to_string(g));
  for (Index j = 0; j < d; ++j) ds.feature_names.push_back("f" + std::to_string(j));

  const double span = config.groups > 1 ? static_cast<double>(config.groups - 1) : 1.0;
  for (std::size_t i = 0; i < config.n; ++i) {
    const int g = config.groups > 1 ? pick_group(rng) : 0;
    const double label = unit(rng) < config.label_bias[static_cast<std::size_t>(g)] ? 1.0 : 0.0;
    const double group_pos = config.groups > 1 ? static_cast<double>(g) / span - 0.5 : 0.0;
    Vector row = config.class_separation * (label - 0.5) * class_dir + config.group_shift * group_pos * group_dir;
    for (Index j = 0; j < d; ++j) row(j) += noise(rng);
    ds.X.row(static_cast<Index>(i)) = row.transpose();
    ds.y(static_cast<Index>(i)) = label;
    ds.groups[i] = g;
  }
  ds.validate();
  return ds;
}

}  // namespace fairtrain
