// fairtrain command line: run experiments, generate synthetic data, score saved models.

#include "fairtrain/checkpoint.hpp"
#include "fairtrain/config.hpp"
#include "fairtrain/experiment.hpp"
#include "fairtrain/metrics.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

namespace {

using namespace fairtrain;
using nlohmann::json;

constexpr int kConfigError = 2;
constexpr int kRunFailure = 3;

int cmd_run(const std::string& path, std::size_t jobs, const std::optional<std::string>& out_dir,
            const std::optional<std::uint64_t>& seed) {
  RunConfig cfg;
  try {
    cfg = parse_config_file(path);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  }
  if (out_dir) cfg.output_dir = *out_dir;
  if (seed) cfg.base_seed = *seed;

  ExperimentResult result;
  try {
    ExperimentOptions options;
    options.jobs = jobs;
    result = run_experiment(cfg, options);
  } catch (const std::exception& e) {
    std::cerr << "run failed: " << e.what() << '\n';
    return kRunFailure;
  }

  const auto& agg = result.metrics["aggregate"];
  std::cout << cfg.algorithm.name << ": " << agg["completed_runs"].get<std::size_t>() << "/" << cfg.repetitions
            << " runs completed, artifacts in " << cfg.output_dir << '\n';
  if (agg.contains("train")) {
    for (const char* split : {"train", "test"}) {
      std::cout << "  " << split;
      for (const char* m : {"loss", "max_abs_gap", "ind", "sp", "sf", "ina", "wd"}) {
        std::cout << "  " << m << "=" << agg[split][m]["mean"].get<double>() << "+-" << agg[split][m]["std"].get<double>();
      }
      std::cout << '\n';
    }
  }
  if (!result.ok) {
    for (const auto& r : result.runs) {
      if (!r.ok) std::cerr << "run " << r.index << " (seed " << r.seed << ") failed: " << r.error << '\n';
    }
    return kRunFailure;
  }
  return 0;
}

int cmd_gen_synth(const std::string& path) {
  SyntheticConfig synth;
  std::string output;
  try {
    std::ifstream in(path);
    if (!in) throw ConfigError("", "cannot open '" + path + "'");
    json j;
    try {
      j = json::parse(in);
    } catch (const json::parse_error& e) {
      throw ConfigError("", std::string("invalid JSON: ") + e.what());
    }
    if (!j.is_object()) throw ConfigError("", "expected an object");
    for (auto it = j.begin(); it != j.end(); ++it) {
      if (it.key() != "synthetic" && it.key() != "output") throw ConfigError("/" + it.key(), "unknown key");
    }
    if (!j.contains("output") || !j["output"].is_string()) throw ConfigError("/output", "expected an output path");
    output = j["output"].get<std::string>();
    synth = parse_synthetic(j.value("synthetic", json::object()), "/synthetic");
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  }
  try {
    const auto ds = generate_synthetic(synth);
    const auto parent = std::filesystem::path(output).parent_path();
    if (!parent.empty()) std::filesystem::create_directories(parent);
    write_csv(ds, output);
    std::ofstream schema(output + ".schema.json");
    schema << to_json(written_schema(ds)).dump(2) << '\n';
    std::cout << "wrote " << ds.size() << " rows to " << output << " (schema in " << output << ".schema.json)\n";
  } catch (const std::exception& e) {
    std::cerr << "generation failed: " << e.what() << '\n';
    return kRunFailure;
  }
  return 0;
}

int cmd_eval(const std::string& model_path, const std::string& data_path) {
  ModelCheckpoint model;
  try {
    model = load_checkpoint(model_path);
    if (!model.schema) throw std::runtime_error("model file has no data schema; cannot read raw CSV rows");
  } catch (const std::exception& e) {
    std::cerr << "model error: " << e.what() << '\n';
    return kConfigError;
  }
  try {
    auto ds = load_csv(data_path, *model.schema);
    if (ds.dim() != model.network.input_dim) throw ShapeError("data width differs from the model input width");
    if (model.scaler) ds.X = apply_scaler(*model.scaler, ds.X);
    const Vector logits = predict_logits(model.network, model.parameters, ds.X);
    PredictionSet p;
    p.scores = logits.unaryExpr([](double z) { return sigmoid(z); });
    for (std::size_t i = 0; i < ds.size(); ++i) {
      p.labels.push_back(static_cast<int>(ds.y(static_cast<Index>(i))));
      p.groups.push_back(ds.groups[i]);
    }
    const auto r = fairness_report(p);
    const json out = {{"rows", ds.size()},           {"groups", ds.group_names},
                      {"loss", bce_loss(logits, ds.y)}, {"ind", r.ind},
                      {"sp", r.sp},                  {"sf", r.sf},
                      {"ina", r.ina},                {"wd", r.wd}};
    std::cout << out.dump(2) << '\n';
  } catch (const std::exception& e) {
    std::cerr << "evaluation failed: " << e.what() << '\n';
    return kRunFailure;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fairness-constrained stochastic training toolkit"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "Run a configured experiment");
  std::string run_config;
  std::size_t jobs = 1;
  std::optional<std::string> out_dir;
  std::optional<std::uint64_t> seed;
  run->add_option("config", run_config, "Run config (JSON)")->required();
  run->add_option("--jobs,-j", jobs, "Parallel runs")->check(CLI::PositiveNumber);
  run->add_option("--out,-o", out_dir, "Output directory (overrides the config)");
  run->add_option("--seed,-s", seed, "Base seed (overrides the config)");

  auto* gen = app.add_subcommand("gen-synth", "Write a synthetic dataset as CSV");
  std::string gen_config;
  gen->add_option("config", gen_config, "Generator config (JSON)")->required();

  auto* eval = app.add_subcommand("eval", "Score a saved model on a CSV file");
  std::string model_path, data_path;
  eval->add_option("model", model_path, "Model checkpoint (JSON)")->required();
  eval->add_option("data", data_path, "Data file (CSV)")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kConfigError;
  }

  if (run->parsed()) return cmd_run(run_config, jobs, out_dir, seed);
  if (gen->parsed()) return cmd_gen_synth(gen_config);
  return cmd_eval(model_path, data_path);
}
