// Command-line front end: train / eval / sweep / gradcheck / datagen.
// Exit codes: 0 success, 2 configuration error, 3 numerical failure, 4 I/O error.

#include "pmfl/grad.hpp"
#include "pmfl/synth.hpp"
#include "pmfl/trainer.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

namespace {

int run_train(const std::string& config_path, const std::string& out_dir, long long seed,
              long long iterations, const std::string& data_path, bool resume) {
  pmfl::ProxConfig cfg = pmfl::load_config(config_path);
  if (seed >= 0) {
    cfg.seed = static_cast<std::uint64_t>(seed);
  }
  if (iterations > 0) cfg.iterations = iterations;
  if (!data_path.empty()) cfg.data.path = data_path;

  const pmfl::TrainResult res = pmfl::train(cfg, out_dir, resume);
  std::printf("run %s: %lld steps, final risk_weighted=%.8g risk_unweighted=%.8g\n",
              res.run_dir.string().c_str(), static_cast<long long>(res.last.iter),
              res.last.risk_weighted, res.last.risk_unweighted);
  if (res.non_converged_steps > 0)
    std::printf("sinkhorn iteration cap reached in %lld steps\n",
                static_cast<long long>(res.non_converged_steps));
  return 0;
}

int run_eval(const std::string& checkpoint, const std::string& data_path, const std::string& mode,
             bool raw_weights, bool json_only) {
  pmfl::LoadedRun run = pmfl::load_run(checkpoint);
  if (!data_path.empty()) run.cfg.data.path = data_path;

  const pmfl::Dataset full = pmfl::load_dataset(run.cfg.data);
  pmfl::Dataset eval_set = full;
  if (run.cfg.has_split) {
    pmfl::SplitSpec split_used = run.cfg.split_spec;
    split_used.seed = run.cfg.split_seed.value_or(run.cfg.seed);
    eval_set = pmfl::split(full, split_used).second;
  }

  const pmfl::ModelSpec model = pmfl::parse_model_tag(run.meta.model);
  const auto est_mode =
      mode == "weighted" ? pmfl::EstimateMode::Weighted : pmfl::EstimateMode::Unweighted;
  const bool normalize = raw_weights ? false : run.cfg.normalize_weighted;
  const pmfl::EvalReport report = pmfl::evaluate(run.cloud, model, eval_set, est_mode, normalize);

  std::cout << report.to_json_text() << '\n';
  if (!json_only) std::cout << report.to_table(eval_set.display_zero_one);
  return 0;
}

int run_sweep(const std::string& config_path, const std::string& parameter,
              const std::string& values_csv, const std::string& out_dir) {
  std::vector<double> values;
  std::stringstream ss(values_csv);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    try {
      values.push_back(std::stod(tok));
    } catch (const std::exception&) {
      throw pmfl::ConfigError("sweep: bad value '" + tok + "'");
    }
  }
  const pmfl::ProxConfig cfg = pmfl::load_config(config_path);
  const auto rows = pmfl::sweep(cfg, parameter, values, out_dir);
  std::printf("%-10s %-14s %-14s %-10s %-10s\n", parameter.c_str(), "risk_w", "risk_u", "acc",
              "runtime_s");
  for (const auto& r : rows)
    std::printf("%-10g %-14.6g %-14.6g %-10.4f %-10.2f\n", r.value, r.final_risk_weighted,
                r.final_risk_unweighted, r.accuracy, r.runtime_s);
  return 0;
}

int run_gradcheck(int trials, long long seed) {
  const pmfl::GradCheckReport report =
      pmfl::gradcheck(trials, static_cast<std::uint64_t>(seed));
  std::printf("gradcheck: %d trials\n", report.trials);
  std::printf("  max relative error, binary head:      %.3e\n", report.max_rel_err_binary);
  std::printf("  max relative error, multi-class head: %.3e\n", report.max_rel_err_multiclass);
  const bool ok = report.max_rel_err_binary <= 1e-6 && report.max_rel_err_multiclass <= 1e-6;
  std::printf("  gate 1e-6: %s\n", ok ? "pass" : "FAIL");
  return ok ? 0 : 3;
}

int run_datagen(const std::string& dataset, const std::string& out_path, long long seed) {
  if (dataset == "banana") {
    if (seed >= 0)
      pmfl::write_banana_csv(out_path, static_cast<std::uint64_t>(seed));
    else
      pmfl::write_banana_csv(out_path);
  } else if (dataset == "twonorm") {
    if (seed >= 0)
      pmfl::write_twonorm_csv(out_path, static_cast<std::uint64_t>(seed));
    else
      pmfl::write_twonorm_csv(out_path);
  } else {
    throw pmfl::ConfigError("datagen: unknown dataset '" + dataset + "'");
  }
  std::printf("wrote %s\n", out_path.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Weighted-particle mean-field training via Sinkhorn proximal recursions"};
  app.require_subcommand(1);

  std::string config_path, out_dir = "runs/out", data_path, checkpoint, mode = "weighted";
  std::string parameter, values_csv, dataset;
  long long seed = -1, iterations = -1;
  int trials = 100;
  bool resume = false, raw_weights = false, json_only = false;

  auto* train = app.add_subcommand("train", "Run the proximal training loop");
  train->add_option("--config", config_path, "Config JSON")->required();
  train->add_option("--out", out_dir, "Run directory");
  train->add_option("--seed", seed, "Override the master seed");
  train->add_option("--iterations", iterations, "Override the iteration count");
  train->add_option("--data", data_path, "Override the dataset path");
  train->add_flag("--resume", resume, "Continue from the checkpoint in the run directory");

  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint");
  eval->add_option("--checkpoint", checkpoint, "Run or checkpoint directory")->required();
  eval->add_option("--data", data_path, "Override the dataset path");
  eval->add_option("--mode", mode, "weighted | unweighted")
      ->check(CLI::IsMember({"weighted", "unweighted"}));
  eval->add_flag("--raw-weights", raw_weights, "Skip the weight self-normalization");
  eval->add_flag("--json", json_only, "JSON report only");

  auto* sweep = app.add_subcommand("sweep", "Train once per parameter value");
  sweep->add_option("--config", config_path, "Config JSON")->required();
  sweep->add_option("--param", parameter, "epsilon | beta | N")->required();
  sweep->add_option("--values", values_csv, "Comma-separated values")->required();
  sweep->add_option("--out", out_dir, "Sweep directory");

  auto* gradcheck = app.add_subcommand("gradcheck", "Finite-difference gradient gate");
  gradcheck->add_option("--trials", trials, "Random instances");
  gradcheck->add_option("--seed", seed, "Instance seed");

  auto* datagen = app.add_subcommand("datagen", "Write a synthetic benchmark CSV");
  datagen->add_option("--dataset", dataset, "banana | twonorm")->required();
  datagen->add_option("--out", out_dir, "Output file")->required();
  datagen->add_option("--seed", seed, "Generator seed");

  CLI11_PARSE(app, argc, argv);

  try {
    if (train->parsed()) return run_train(config_path, out_dir, seed, iterations, data_path, resume);
    if (eval->parsed()) return run_eval(checkpoint, data_path, mode, raw_weights, json_only);
    if (sweep->parsed()) return run_sweep(config_path, parameter, values_csv, out_dir);
    if (gradcheck->parsed()) return run_gradcheck(trials, seed < 0 ? 2024 : seed);
    if (datagen->parsed()) return run_datagen(dataset, out_dir, seed);
  } catch (const pmfl::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const pmfl::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 3;
  } catch (const pmfl::IoError& e) {
    std::cerr << "I/O error: " << e.what() << '\n';
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
