#pragma once

#include "pmfl/cloud.hpp"
#include "pmfl/data.hpp"
#include "pmfl/dynamics.hpp"
#include "pmfl/model.hpp"
#include "pmfl/prox.hpp"
#include "pmfl/rng.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace pmfl {

struct DatasetDesc {
  std::string kind;  // wdbc | semeion | banana | diabetes | twonorm | sinusoid
  std::filesystem::path path;  // file-backed kinds
  // sinusoid generator parameters
  Index n_points = 100;
  double x_lo = -M_PI;
  double x_hi = M_PI;
  std::uint64_t gen_seed = 7;
};

Dataset load_dataset(const DatasetDesc& desc);

struct RhoInit {
  WeightInit mode = WeightInit::UniformDensity;
  double lo = 0.0;
  double hi = 1000.0;
  double value = 1.0;
};

struct InitDesc {
  Interval a{0.9, 1.1};
  Interval b{-0.1, 0.1};
  Interval w{-1.0, 1.0};
  RhoInit rho0;
};

struct ProxConfig {
  std::string name = "run";
  Head head = Head::BinaryTanh;
  Index classes = 0;  // multi-class only; 0 means take it from the dataset
  DatasetDesc data;
  bool has_split = true;
  SplitSpec split_spec;
  std::optional<std::uint64_t> split_seed;  // empty: follows the master seed
  InitDesc init;

  double beta = 0.05;
  double h = 1e-3;
  double epsilon = 1.0;
  double delta = 1e-3;
  int max_sinkhorn_iters = 300;
  Index n_particles = 1000;
  std::int64_t iterations = 1000;
  std::uint64_t seed = 1;
  double noise_scale = 1.0;
  int log_every = 1;
  std::int64_t checkpoint_every = 0;  // 0: only the final checkpoint
  bool normalize_weighted = true;

  void check() const;
};

ProxConfig config_from_json_text(const std::string& text);
ProxConfig load_config(const std::filesystem::path& path);
std::string config_to_json_text(const ProxConfig& cfg);
// FNV-1a over the canonical serialization, iterations excluded so a resumed
// run may extend the horizon.
std::string config_hash(const ProxConfig& cfg);

/// Immutable per-run problem data: the split, one-hot labels and risk targets
/// prepared once.
struct ProxLearnProblem {
  ModelSpec model;
  Matrix X_train;
  Vector y_train;        // signed labels / regression targets / class indices
  Matrix Y_train_onehot; // multi-class only
  Matrix X_eval;
  Vector y_eval;
  Matrix Y_eval_onehot;
  Vector targets_eval;   // quadratic-risk targets on the eval side

  static ProxLearnProblem make(const Dataset& train, const Dataset& eval_set,
                               const ModelSpec& model);
};

struct MetricsRow {
  std::int64_t iter = 0;
  double risk_weighted = std::numeric_limits<double>::quiet_NaN();
  double risk_unweighted = std::numeric_limits<double>::quiet_NaN();
  int sinkhorn_iters = 0;
  double marginal_residual = 0.0;
  double wall_ms = 0.0;
  bool sinkhorn_converged = true;
};

/// One full recursion: potentials at theta_{k-1}, drift, Euler-Maruyama move,
/// cost matrix between the new and old locations, Gibbs kernel, xi, Sinkhorn
/// fixed point, weight update; step_index advances by one. Risks on the eval
/// side are filled when with_risks is set.
MetricsRow prox_learn_step(ParticleCloud& cloud, const ProxLearnProblem& problem,
                           const ProxConfig& cfg, Rng& rng, bool with_risks = true);

// Risk pair on the eval data at the cloud's current locations.
std::pair<double, double> eval_risks(const ParticleCloud& cloud, const ProxLearnProblem& problem,
                                     bool normalize_weighted);

struct TrainResult {
  std::filesystem::path run_dir;
  MetricsRow last;
  std::int64_t non_converged_steps = 0;
};

/// Runs cfg.iterations recursions, writing metrics.csv (header
/// iter,risk_weighted,risk_unweighted,sinkhorn_iters,marginal_residual,wall_ms)
/// every log_every steps, a rolling checkpoint every checkpoint_every steps
/// and a final one under <out>/checkpoint. The resolved config, a dataset
/// manifest and the RNG state land in the run directory as well. With resume
/// set, continues from the stored checkpoint and RNG state.
TrainResult train(const ProxConfig& cfg, const std::filesystem::path& out_dir,
                  bool resume = false);

struct EvalReport {
  Task task = Task::Binary;
  double accuracy = std::numeric_limits<double>::quiet_NaN();
  Eigen::MatrixXi confusion;  // empty for regression
  double risk_weighted = 0.0;
  double risk_unweighted = 0.0;
  std::int64_t step_index = 0;
  std::string to_table(bool zero_one_labels) const;
  std::string to_json_text() const;
};

EvalReport evaluate(const ParticleCloud& cloud, const ModelSpec& model, const Dataset& data,
                    EstimateMode mode, bool normalize);

// Loads the checkpoint under run_dir (or run_dir itself if it holds the
// matrices) plus the resolved config stored next to it.
struct LoadedRun {
  ParticleCloud cloud;
  CheckpointMeta meta;
  ProxConfig cfg;
};
LoadedRun load_run(const std::filesystem::path& run_dir);

struct SweepRow {
  double value = 0.0;
  double final_risk_weighted = 0.0;
  double final_risk_unweighted = 0.0;
  double accuracy = std::numeric_limits<double>::quiet_NaN();
  double runtime_s = 0.0;
};

// parameter in {epsilon, beta, N}: one train + evaluate per value; the rows
// are also written to <out>/sweep_summary.csv.
std::vector<SweepRow> sweep(const ProxConfig& cfg, const std::string& parameter,
                            const std::vector<double>& values,
                            const std::filesystem::path& out_dir);

}  // namespace pmfl
