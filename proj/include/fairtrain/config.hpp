#pragma once

#include "fairtrain/data.hpp"
#include "fairtrain/net.hpp"
#include "fairtrain/optim.hpp"
#include "fairtrain/problem.hpp"

#include <json.hpp>

#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace fairtrain {

/// Schema violation in a run config; `pointer()` is a JSON pointer to the offending value.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& pointer, const std::string& what)
      : std::runtime_error((pointer.empty() ? std::string("/") : pointer) + ": " + what), pointer_(pointer) {}
  const std::string& pointer() const { return pointer_; }

 private:
  std::string pointer_;
};

struct DataSource {
  enum class Kind { Synthetic, Csv };
  Kind kind = Kind::Synthetic;
  SyntheticConfig synthetic;
  std::string csv_path;
  CsvSchema schema;

  bool operator==(const DataSource&) const = default;
};

struct SplitConfig {
  double train_fraction = 0.8;
  std::uint64_t seed = 0;

  bool operator==(const SplitConfig&) const = default;
};

/// Hidden layers and activation; the input width comes from the data.
struct NetworkConfig {
  std::vector<std::size_t> hidden{64, 32};
  Activation activation = Activation::ReLU;

  bool operator==(const NetworkConfig&) const = default;
};

struct AlgorithmConfig {
  /// One of stgh, ssl_alm, alm, ssw, sgd.
  std::string name = "sgd";
  std::variant<StGhConfig, AlmConfig, SswConfig, SgdConfig> params = SgdConfig{};
  /// Loss-gap-squared penalty weight, sgd only.
  double penalty = 0.0;

  std::size_t iterations() const;
  bool operator==(const AlgorithmConfig&) const = default;
};

struct RunConfig {
  DataSource data;
  SplitConfig split;
  NetworkConfig network;
  ConstraintSpec constraint;
  AlgorithmConfig algorithm;
  std::size_t repetitions = 10;
  std::uint64_t base_seed = 0;
  std::string output_dir = "out";
  std::size_t log_every = 10;

  bool operator==(const RunConfig&) const = default;
};

RunConfig parse_config(const nlohmann::json& j);
RunConfig parse_config_text(const std::string& text);
RunConfig parse_config_file(const std::string& path);
nlohmann::json to_json(const RunConfig& cfg);

SyntheticConfig parse_synthetic(const nlohmann::json& j, const std::string& pointer = "");
nlohmann::json to_json(const SyntheticConfig& cfg);
CsvSchema parse_schema(const nlohmann::json& j, const std::string& pointer = "");
nlohmann::json to_json(const CsvSchema& schema);

}  // namespace fairtrain
