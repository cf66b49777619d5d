#include "fairtrain/experiment.hpp"

#include "fairtrain/checkpoint.hpp"
#include "fairtrain/csv.hpp"
#include "fairtrain/svg.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <thread>

namespace fairtrain {

using nlohmann::json;
namespace fs = std::filesystem;

PreparedData prepare_data(const RunConfig& cfg) {
  PreparedData out;
  GroupedDataset ds;
  if (cfg.data.kind == DataSource::Kind::Synthetic) {
    ds = generate_synthetic(cfg.data.synthetic);
    out.schema = written_schema(ds);
  } else {
    ds = load_csv(cfg.data.csv_path, cfg.data.schema);
    out.schema = cfg.data.schema;
  }
  out.split = stratified_split(ds, cfg.split.train_fraction, cfg.split.seed);
  out.scaler = fit_scaler(ds, out.split.train);
  ds.X = apply_scaler(out.scaler, ds.X);
  out.data = std::make_shared<const GroupedDataset>(std::move(ds));
  return out;
}

SplitSummary summarize_split(const FairnessProblem& problem, const Vector& params, const std::vector<std::size_t>& idx) {
  SplitSummary s;
  s.evaluation = problem.evaluate(params, idx);
  const double bound = problem.constraint().component_bound();
  s.max_abs_gap = s.evaluation.constraints.size() > 0 ? s.evaluation.constraints.maxCoeff() + bound : 0.0;

  PredictionSet p;
  p.scores = problem.scores(params, idx);
  p.labels.reserve(idx.size());
  p.groups.reserve(idx.size());
  for (auto i : idx) {
    p.labels.push_back(static_cast<int>(problem.data().y(static_cast<Index>(i))));
    p.groups.push_back(problem.data().groups[i]);
  }
  s.metrics = fairness_report(p);
  return s;
}

RunRecord execute_run(const RunConfig& cfg, const PreparedData& prepared, std::size_t index) {
  RunRecord rec;
  rec.index = index;
  rec.seed = cfg.base_seed + index;
  const auto started = std::chrono::steady_clock::now();
  try {
    NetworkSpec spec;
    spec.input_dim = prepared.data->dim();
    spec.hidden_dims = cfg.network.hidden;
    spec.activation = cfg.network.activation;
    std::seed_seq init_seq{rec.seed, std::uint64_t{0}};
    Rng init_rng(init_seq);
    const Vector x0 = initialize_parameters(spec, init_rng);

    const FairnessProblem problem(spec, prepared.data, prepared.split.train, cfg.constraint, cfg.algorithm.penalty);
    SamplingStreams streams(rec.seed);
    const auto& train_idx = prepared.split.train;
    const auto& test_idx = prepared.split.test;
    TrajectoryLogger logger([&](const Vector& x) { return problem.evaluate(x, train_idx); },
                            [&](const Vector& x) { return problem.evaluate(x, test_idx); }, cfg.log_every,
                            cfg.algorithm.iterations());
    IterateObserver observer = [&logger](std::size_t k, const Vector& x) { logger(k, x); };

    const auto& params = cfg.algorithm.params;
    if (const auto* c = std::get_if<StGhConfig>(&params)) {
      auto res = run_stgh(problem, x0, *c, streams, observer);
      rec.params = std::move(res.x);
      rec.optimizer_stats = {{"skipped_iterations", res.skipped}, {"last_stepsize", res.last_stepsize}};
    } else if (const auto* c = std::get_if<AlmConfig>(&params)) {
      auto res = run_ssl_alm(problem, x0, *c, streams, observer);
      rec.params = std::move(res.x);
      std::vector<double> y(res.state.y.data(), res.state.y.data() + res.state.y.size());
      rec.optimizer_stats = {{"multiplier_resets", res.multiplier_resets}, {"multipliers", y}};
    } else if (const auto* c = std::get_if<SswConfig>(&params)) {
      auto res = run_ssw(problem, x0, *c, streams, observer);
      rec.params = std::move(res.x);
      rec.optimizer_stats = {{"objective_steps", res.objective_steps},
                             {"constraint_steps", res.constraint_steps},
                             {"recorded", res.recorded.size()},
                             {"chosen_iteration", res.chosen}};
    } else if (const auto* c = std::get_if<SgdConfig>(&params)) {
      rec.params = run_sgd(problem, x0, *c, streams, observer);
    }
    rec.trajectory = logger.rows();
    rec.train = summarize_split(problem, rec.params, train_idx);
    rec.test = summarize_split(problem, rec.params, test_idx);
    rec.ok = true;
  } catch (const std::exception& e) {
    rec.ok = false;
    rec.error = e.what();
  }
  rec.wall_clock_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return rec;
}

double quantile(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) throw std::invalid_argument("quantile of an empty sample");
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

MetricStats summarize(const std::vector<double>& values) {
  if (values.empty()) throw std::invalid_argument("no values to summarize");
  MetricStats s;
  const auto n = static_cast<double>(values.size());
  for (double v : values) s.mean += v;
  s.mean /= n;
  double sq = 0.0;
  for (double v : values) sq += (v - s.mean) * (v - s.mean);
  s.std = std::sqrt(sq / n);
  auto sorted = values;
  std::sort(sorted.begin(), sorted.end());
  s.min = sorted.front();
  s.max = sorted.back();
  s.median = quantile(sorted, 0.5);
  // Guard the mean against rounding outside the observed range.
  s.mean = std::clamp(s.mean, s.min, s.max);
  return s;
}

std::vector<double> resample(const std::vector<double>& times, const std::vector<double>& values,
                             const std::vector<double>& grid) {
  if (times.empty() || times.size() != values.size()) throw std::invalid_argument("trajectory is empty or ragged");
  std::vector<double> out;
  out.reserve(grid.size());
  std::size_t j = 0;
  for (double t : grid) {
    if (t <= times.front()) {
      out.push_back(values.front());
      continue;
    }
    if (t >= times.back()) {
      out.push_back(values.back());
      continue;
    }
    while (j + 1 < times.size() && times[j + 1] < t) ++j;
    const double t0 = times[j], t1 = times[j + 1];
    const double w = t1 > t0 ? (t - t0) / (t1 - t0) : 1.0;
    out.push_back(values[j] + w * (values[j + 1] - values[j]));
  }
  return out;
}

TrajectorySummary summarize_trajectories(const std::vector<RunRecord>& runs, std::size_t points) {
  TrajectorySummary s;
  double end = 0.0;
  std::size_t used = 0;
  for (const auto& r : runs) {
    if (!r.ok || r.trajectory.empty()) continue;
    end = std::max(end, r.trajectory.back().elapsed);
    ++used;
  }
  if (used == 0 || points < 2) return s;
  for (std::size_t i = 0; i < points; ++i) s.time.push_back(end * static_cast<double>(i) / static_cast<double>(points - 1));

  auto band = [&](auto pick) {
    std::vector<std::vector<double>> curves;
    for (const auto& r : runs) {
      if (!r.ok || r.trajectory.empty()) continue;
      std::vector<double> t, v;
      for (const auto& row : r.trajectory) {
        t.push_back(row.elapsed);
        v.push_back(pick(row));
      }
      curves.push_back(resample(t, v, s.time));
    }
    BandStats b;
    for (std::size_t i = 0; i < points; ++i) {
      std::vector<double> column;
      for (const auto& c : curves) column.push_back(c[i]);
      std::sort(column.begin(), column.end());
      double mean = 0.0;
      for (double v : column) mean += v;
      b.mean.push_back(mean / static_cast<double>(column.size()));
      b.median.push_back(quantile(column, 0.5));
      b.q1.push_back(quantile(column, 0.25));
      b.q3.push_back(quantile(column, 0.75));
    }
    return b;
  };
  auto max_of = [](const Vector& v) { return v.size() > 0 ? v.maxCoeff() : 0.0; };
  s.train_loss = band([](const TrajectoryRow& r) { return r.train_loss; });
  s.test_loss = band([](const TrajectoryRow& r) { return r.test_loss; });
  s.train_constraint = band([&](const TrajectoryRow& r) { return max_of(r.train_constraints); });
  s.test_constraint = band([&](const TrajectoryRow& r) { return max_of(r.test_constraints); });
  return s;
}

namespace {

std::vector<double> to_list(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

json split_json(const SplitSummary& s) {
  return {{"loss", s.evaluation.loss},
          {"constraints", to_list(s.evaluation.constraints)},
          {"max_abs_gap", s.max_abs_gap},
          {"ind", s.metrics.ind},
          {"sp", s.metrics.sp},
          {"sf", s.metrics.sf},
          {"ina", s.metrics.ina},
          {"wd", s.metrics.wd}};
}

json stats_json(const MetricStats& s) {
  return {{"mean", s.mean}, {"std", s.std}, {"min", s.min}, {"max", s.max}, {"median", s.median}};
}

const char* const kSplitMetrics[] = {"loss", "max_abs_gap", "ind", "sp", "sf", "ina", "wd"};

void write_trajectory_csv(const RunRecord& r, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  const Index m = r.trajectory.empty() ? 0 : r.trajectory.front().train_constraints.size();
  std::vector<std::string> header{"iteration", "elapsed_s", "train_loss"};
  for (Index j = 0; j < m; ++j) header.push_back("train_c" + std::to_string(j));
  header.push_back("test_loss");
  for (Index j = 0; j < m; ++j) header.push_back("test_c" + std::to_string(j));
  csv::write_row(out, header);
  for (const auto& row : r.trajectory) {
    std::vector<std::string> f{std::to_string(row.iteration), csv::format_double(row.elapsed),
                               csv::format_double(row.train_loss)};
    for (Index j = 0; j < m; ++j) f.push_back(csv::format_double(row.train_constraints(j)));
    f.push_back(csv::format_double(row.test_loss));
    for (Index j = 0; j < m; ++j) f.push_back(csv::format_double(row.test_constraints(j)));
    csv::write_row(out, f);
  }
}

void write_band_plot(const BandStats& b, const std::vector<double>& time, const std::string& title,
                     const std::string& y_label, std::vector<double> refs, const std::string& path) {
  SvgPlot plot;
  plot.title = title;
  plot.x_label = "time (s)";
  plot.y_label = y_label;
  plot.bands.push_back({time, b.q1, b.q3, "#1f77b4", 0.25});
  plot.series.push_back({"mean", time, b.mean, "#1f77b4", false});
  plot.series.push_back({"median", time, b.median, "#d62728", true});
  plot.reference_lines = std::move(refs);
  write_svg(plot, path);
}

}  // namespace

json metrics_json(const RunConfig& cfg, const std::vector<RunRecord>& runs) {
  json out;
  out["config"] = to_json(cfg);
  json per_run = json::array();
  std::vector<std::size_t> failed;
  for (const auto& r : runs) {
    json j = {{"index", r.index}, {"seed", r.seed}, {"status", r.ok ? "ok" : "failed"}};
    if (r.ok) {
      j["train"] = split_json(r.train);
      j["test"] = split_json(r.test);
      j["optimizer"] = r.optimizer_stats;
    } else {
      j["error"] = r.error;
      failed.push_back(r.index);
    }
    j["wall_clock_seconds"] = r.wall_clock_seconds;
    per_run.push_back(std::move(j));
  }
  out["runs"] = per_run;
  out["status"] = failed.empty() ? "ok" : "failed";
  out["failed_runs"] = failed;

  json aggregate = json::object();
  aggregate["completed_runs"] = runs.size() - failed.size();
  if (failed.size() < runs.size()) {
    for (const char* split : {"train", "test"}) {
      json block = json::object();
      for (const char* metric : kSplitMetrics) {
        std::vector<double> values;
        for (const auto& r : per_run) {
          if (r["status"] == "ok") values.push_back(r[split][metric].get<double>());
        }
        block[metric] = stats_json(summarize(values));
      }
      aggregate[split] = block;
    }
    std::vector<double> times;
    for (const auto& r : runs) {
      if (r.ok) times.push_back(r.wall_clock_seconds);
    }
    aggregate["wall_clock_seconds"] = stats_json(summarize(times));
  }
  out["aggregate"] = aggregate;
  return out;
}

json strip_wall_clock(const json& j) {
  if (j.is_object()) {
    json out = json::object();
    for (auto it = j.begin(); it != j.end(); ++it) {
      if (it.key().rfind("wall_clock", 0) == 0) continue;
      out[it.key()] = strip_wall_clock(it.value());
    }
    return out;
  }
  if (j.is_array()) {
    json out = json::array();
    for (const auto& v : j) out.push_back(strip_wall_clock(v));
    return out;
  }
  return j;
}

ExperimentResult run_experiment(const RunConfig& cfg, const ExperimentOptions& options) {
  const auto prepared = prepare_data(cfg);
  ExperimentResult result;
  result.runs.resize(cfg.repetitions);

  const std::size_t workers = std::max<std::size_t>(1, std::min(options.jobs, cfg.repetitions));
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < cfg.repetitions; i = next++) result.runs[i] = execute_run(cfg, prepared, i);
  };
  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < workers; ++t) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }

  result.metrics = metrics_json(cfg, result.runs);
  result.trajectory = summarize_trajectories(result.runs);
  result.ok = std::all_of(result.runs.begin(), result.runs.end(), [](const RunRecord& r) { return r.ok; });

  if (options.write_artifacts) {
    const fs::path dir(cfg.output_dir);
    fs::create_directories(dir);
    ModelCheckpoint model;
    model.network.input_dim = prepared.data->dim();
    model.network.hidden_dims = cfg.network.hidden;
    model.network.activation = cfg.network.activation;
    model.schema = prepared.schema;
    model.scaler = prepared.scaler;
    for (const auto& r : result.runs) {
      if (!r.ok) continue;
      write_trajectory_csv(r, (dir / ("run_" + std::to_string(r.index) + ".csv")).string());
      model.parameters = r.params;
      save_checkpoint(model, (dir / ("model_" + std::to_string(r.index) + ".json")).string());
    }
    {
      std::ofstream out(dir / "metrics.json");
      if (!out) throw std::runtime_error("cannot write metrics.json in '" + dir.string() + "'");
      out << result.metrics.dump(2) << '\n';
    }
    if (!result.trajectory.time.empty()) {
      const double bound = cfg.constraint.component_bound();
      const auto& t = result.trajectory;
      write_band_plot(t.train_loss, t.time, "Train loss", "loss", {}, (dir / "trajectory_loss_train.svg").string());
      write_band_plot(t.test_loss, t.time, "Test loss", "loss", {}, (dir / "trajectory_loss_test.svg").string());
      write_band_plot(t.train_constraint, t.time, "Train constraint (largest component)", "|gap| - bound",
                      {0.0, -bound}, (dir / "trajectory_constraint_train.svg").string());
      write_band_plot(t.test_constraint, t.time, "Test constraint (largest component)", "|gap| - bound", {0.0, -bound},
                      (dir / "trajectory_constraint_test.svg").string());
    }
  }
  return result;
}

}  // namespace fairtrain
