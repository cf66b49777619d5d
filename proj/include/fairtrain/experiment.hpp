#pragma once

#include "fairtrain/config.hpp"
#include "fairtrain/metrics.hpp"
#include "fairtrain/optim.hpp"

#include <json.hpp>

#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace fairtrain {

/// Raised when at least one run of an experiment aborted.
class RunFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Standardized dataset and split shared by every run of an experiment.
struct PreparedData {
  std::shared_ptr<const GroupedDataset> data;
  SplitIndices split;
  Scaler scaler;
  /// Schema that reads raw rows of this data source.
  CsvSchema schema;
};

PreparedData prepare_data(const RunConfig& cfg);

struct SplitSummary {
  FullEvaluation evaluation;
  /// Largest |gap| over constrained pairs and label conditions.
  double max_abs_gap = 0.0;
  FairnessReport metrics;
};

struct RunRecord {
  std::size_t index = 0;
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  std::vector<TrajectoryRow> trajectory;
  Vector params;
  SplitSummary train;
  SplitSummary test;
  nlohmann::json optimizer_stats = nlohmann::json::object();
  double wall_clock_seconds = 0.0;
};

/// Runs repetition `index` with seed base_seed + index. Does not throw for
/// optimizer failures; they are reported in the record.
RunRecord execute_run(const RunConfig& cfg, const PreparedData& prepared, std::size_t index);

SplitSummary summarize_split(const FairnessProblem& problem, const Vector& params, const std::vector<std::size_t>& idx);

struct MetricStats {
  double mean = 0.0;
  double std = 0.0;  // population (1/R) standard deviation
  double min = 0.0;
  double max = 0.0;
  double median = 0.0;
};

MetricStats summarize(const std::vector<double>& values);

/// Linear-interpolation quantile of sorted data.
double quantile(const std::vector<double>& sorted, double q);

/// Values of a piecewise-linear trajectory at `grid`; constant before the
/// first and after the last sample.
std::vector<double> resample(const std::vector<double>& times, const std::vector<double>& values,
                             const std::vector<double>& grid);

struct BandStats {
  std::vector<double> mean;
  std::vector<double> median;
  std::vector<double> q1;
  std::vector<double> q3;
};

struct TrajectorySummary {
  std::vector<double> time;
  BandStats train_loss;
  BandStats test_loss;
  BandStats train_constraint;  // largest constraint component
  BandStats test_constraint;
};

TrajectorySummary summarize_trajectories(const std::vector<RunRecord>& runs, std::size_t points = 200);

/// metrics.json content. Keys starting with "wall_clock" hold timings and
/// are the only fields that differ between repeated executions.
nlohmann::json metrics_json(const RunConfig& cfg, const std::vector<RunRecord>& runs);

/// Copy of `j` without any object key that starts with "wall_clock".
nlohmann::json strip_wall_clock(const nlohmann::json& j);

struct ExperimentOptions {
  std::size_t jobs = 1;
  bool write_artifacts = true;
};

struct ExperimentResult {
  std::vector<RunRecord> runs;
  nlohmann::json metrics;
  TrajectorySummary trajectory;
  bool ok = true;
};

/// Runs all repetitions (in parallel up to `jobs`) and writes artifacts to
/// cfg.output_dir. Failed runs are flagged in metrics.json and make `ok` false.
ExperimentResult run_experiment(const RunConfig& cfg, const ExperimentOptions& options = {});

}  // namespace fairtrain
