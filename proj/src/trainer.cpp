#include "pmfl/trainer.hpp"

#include <nlohmann/json.hpp>

#include <chrono>
#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

namespace pmfl {

namespace {

using nlohmann::json;

std::string fmt17(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

json require(const json& j, const char* key) {
  if (!j.contains(key)) throw ConfigError(std::string("config: missing field '") + key + "'");
  return j.at(key);
}

}  // namespace

Dataset load_dataset(const DatasetDesc& desc) {
  if (desc.kind == "wdbc") return load_wdbc(desc.path);
  if (desc.kind == "semeion") return load_semeion(desc.path);
  if (desc.kind == "banana") return load_tabular(desc.path, banana_schema());
  if (desc.kind == "diabetes") return load_tabular(desc.path, diabetes_schema());
  if (desc.kind == "twonorm") return load_tabular(desc.path, twonorm_schema());
  if (desc.kind == "sinusoid")
    return gen_sinusoid(desc.n_points, desc.x_lo, desc.x_hi, desc.gen_seed);
  throw ConfigError("unknown dataset kind '" + desc.kind + "'");
}

void ProxConfig::check() const {
  if (!(beta > 0.0)) throw ConfigError("config: beta must be positive");
  if (!(h > 0.0)) throw ConfigError("config: h must be positive");
  if (!(epsilon > 0.0)) throw ConfigError("config: epsilon must be positive");
  if (!(delta > 0.0)) throw ConfigError("config: delta must be positive");
  if (max_sinkhorn_iters < 1) throw ConfigError("config: max_sinkhorn_iters must be >= 1");
  if (n_particles < 1) throw ConfigError("config: n_particles must be >= 1");
  if (iterations < 1) throw ConfigError("config: iterations must be >= 1");
  if (!(noise_scale >= 0.0)) throw ConfigError("config: noise_scale must be nonnegative");
  if (log_every < 1) throw ConfigError("config: log_every must be >= 1");
  if (checkpoint_every < 0) throw ConfigError("config: checkpoint_every must be >= 0");
}

ProxConfig config_from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: invalid JSON: ") + e.what());
  }

  ProxConfig cfg;
  try {
    cfg.name = j.value("name", "run");

    const json m = require(j, "model");
    const std::string head = require(m, "head").get<std::string>();
    if (head == "binary_tanh") {
      cfg.head = Head::BinaryTanh;
    } else if (head == "multi_softmax") {
      cfg.head = Head::MultiSoftmax;
      cfg.classes = m.value("classes", Index{0});
    } else {
      throw ConfigError("config: unknown model head '" + head + "'");
    }

    const json d = require(j, "data");
    cfg.data.kind = require(d, "kind").get<std::string>();
    if (cfg.data.kind == "sinusoid") {
      cfg.data.n_points = d.value("n_points", Index{100});
      if (d.contains("x_range")) {
        cfg.data.x_lo = d.at("x_range").at(0).get<double>();
        cfg.data.x_hi = d.at("x_range").at(1).get<double>();
      }
      cfg.data.gen_seed = d.value("seed", std::uint64_t{7});
    } else {
      cfg.data.path = require(d, "path").get<std::string>();
    }

    const json s = require(j, "split");
    const std::string mode = require(s, "mode").get<std::string>();
    if (mode == "none") {
      cfg.has_split = false;
    } else if (mode == "fraction") {
      cfg.has_split = true;
      cfg.split_spec.mode = SplitSpec::Mode::Fraction;
      cfg.split_spec.train_frac = require(s, "train_frac").get<double>();
    } else if (mode == "head_count") {
      cfg.has_split = true;
      cfg.split_spec.mode = SplitSpec::Mode::HeadCount;
      cfg.split_spec.n_train = require(s, "n_train").get<Index>();
    } else {
      throw ConfigError("config: unknown split mode '" + mode + "'");
    }
    if (cfg.has_split) {
      cfg.split_spec.shuffle = s.value("shuffle", false);
      if (s.contains("seed")) cfg.split_seed = s.at("seed").get<std::uint64_t>();
    }

    const json init = require(j, "init");
    auto interval = [&](const char* key, Interval fallback) {
      if (!init.contains(key)) return fallback;
      return Interval{init.at(key).at(0).get<double>(), init.at(key).at(1).get<double>()};
    };
    cfg.init.a = interval("a", cfg.init.a);
    cfg.init.b = interval("b", cfg.init.b);
    cfg.init.w = interval("w", cfg.init.w);
    if (init.contains("rho0")) {
      const json r = init.at("rho0");
      const std::string rmode = require(r, "mode").get<std::string>();
      if (rmode == "uniform_density") {
        cfg.init.rho0.mode = WeightInit::UniformDensity;
      } else if (rmode == "uniform") {
        cfg.init.rho0.mode = WeightInit::UniformRandom;
        cfg.init.rho0.lo = r.at("range").at(0).get<double>();
        cfg.init.rho0.hi = r.at("range").at(1).get<double>();
      } else if (rmode == "constant") {
        cfg.init.rho0.mode = WeightInit::Constant;
        cfg.init.rho0.value = require(r, "value").get<double>();
      } else {
        throw ConfigError("config: unknown rho0 mode '" + rmode + "'");
      }
    }

    const json sol = require(j, "solver");
    cfg.beta = require(sol, "beta").get<double>();
    cfg.h = require(sol, "h").get<double>();
    cfg.epsilon = require(sol, "epsilon").get<double>();
    cfg.delta = sol.value("delta", 1e-3);
    cfg.max_sinkhorn_iters = sol.value("max_sinkhorn_iters", 300);
    cfg.n_particles = require(sol, "n_particles").get<Index>();
    cfg.iterations = require(sol, "iterations").get<std::int64_t>();
    cfg.seed = sol.value("seed", std::uint64_t{1});
    cfg.noise_scale = sol.value("noise_scale", 1.0);
    cfg.log_every = sol.value("log_every", 1);
    cfg.checkpoint_every = sol.value("checkpoint_every", std::int64_t{0});
    cfg.normalize_weighted = sol.value("normalize_weighted", true);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }

  cfg.check();
  return cfg;
}

ProxConfig load_config(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open config " + path.string());
  std::stringstream ss;
  ss << f.rdbuf();
  return config_from_json_text(ss.str());
}

std::string config_to_json_text(const ProxConfig& cfg) {
  json j;
  j["name"] = cfg.name;
  if (cfg.head == Head::BinaryTanh) {
    j["model"] = {{"head", "binary_tanh"}};
  } else {
    j["model"] = {{"head", "multi_softmax"}, {"classes", cfg.classes}};
  }
  if (cfg.data.kind == "sinusoid") {
    j["data"] = {{"kind", "sinusoid"},
                 {"n_points", cfg.data.n_points},
                 {"x_range", {cfg.data.x_lo, cfg.data.x_hi}},
                 {"seed", cfg.data.gen_seed}};
  } else {
    j["data"] = {{"kind", cfg.data.kind}, {"path", cfg.data.path.string()}};
  }
  if (!cfg.has_split) {
    j["split"] = {{"mode", "none"}};
  } else {
    json s;
    if (cfg.split_spec.mode == SplitSpec::Mode::Fraction) {
      s["mode"] = "fraction";
      s["train_frac"] = cfg.split_spec.train_frac;
    } else {
      s["mode"] = "head_count";
      s["n_train"] = cfg.split_spec.n_train;
    }
    s["shuffle"] = cfg.split_spec.shuffle;
    if (cfg.split_seed) s["seed"] = *cfg.split_seed;
    j["split"] = s;
  }
  json init;
  init["a"] = {cfg.init.a.lo, cfg.init.a.hi};
  init["b"] = {cfg.init.b.lo, cfg.init.b.hi};
  init["w"] = {cfg.init.w.lo, cfg.init.w.hi};
  switch (cfg.init.rho0.mode) {
    case WeightInit::UniformDensity:
      init["rho0"] = {{"mode", "uniform_density"}};
      break;
    case WeightInit::UniformRandom:
      init["rho0"] = {{"mode", "uniform"}, {"range", {cfg.init.rho0.lo, cfg.init.rho0.hi}}};
      break;
    case WeightInit::Constant:
      init["rho0"] = {{"mode", "constant"}, {"value", cfg.init.rho0.value}};
      break;
  }
  j["init"] = init;
  j["solver"] = {{"beta", cfg.beta},
                 {"h", cfg.h},
                 {"epsilon", cfg.epsilon},
                 {"delta", cfg.delta},
                 {"max_sinkhorn_iters", cfg.max_sinkhorn_iters},
                 {"n_particles", cfg.n_particles},
                 {"iterations", cfg.iterations},
                 {"seed", cfg.seed},
                 {"noise_scale", cfg.noise_scale},
                 {"log_every", cfg.log_every},
                 {"checkpoint_every", cfg.checkpoint_every},
                 {"normalize_weighted", cfg.normalize_weighted}};
  return j.dump(2);
}

std::string config_hash(const ProxConfig& cfg) {
  ProxConfig canonical = cfg;
  canonical.iterations = 1;  // resumable runs may extend the horizon
  const std::string text = config_to_json_text(canonical);
  std::uint64_t hash = 1469598103934665603ull;
  for (const char c : text) {
    hash ^= static_cast<unsigned char>(c);
    hash *= 1099511628211ull;
  }
  char out[32];
  std::snprintf(out, sizeof(out), "%016llx", static_cast<unsigned long long>(hash));
  return out;
}

ProxLearnProblem ProxLearnProblem::make(const Dataset& train, const Dataset& eval_set,
                                        const ModelSpec& model) {
  ProxLearnProblem p;
  p.model = model;
  p.X_train = train.X;
  p.y_train = train.y;
  p.X_eval = eval_set.X;
  p.y_eval = eval_set.y;
  p.targets_eval = eval_set.targets();
  if (model.head == Head::MultiSoftmax) {
    p.Y_train_onehot = train.onehot();
    p.Y_eval_onehot = eval_set.onehot();
  }
  return p;
}

namespace {

Matrix eval_phi_matrix(const ParticleCloud& cloud, const ProxLearnProblem& problem) {
  if (problem.model.head == Head::BinaryTanh) {
    const auto a = cloud.theta.col(0);
    const auto b = cloud.theta.col(1);
    const auto W = cloud.theta.rightCols(problem.model.n_x);
    Matrix P = W * problem.X_eval.transpose();
    P.colwise() += b;
    P = P.array().tanh();
    P.array().colwise() *= a.array();
    return P;
  }
  return build_potentials_multiclass(cloud, problem.X_eval, problem.Y_eval_onehot, problem.model,
                                     false)
      .P;
}

}  // namespace

std::pair<double, double> eval_risks(const ParticleCloud& cloud, const ProxLearnProblem& problem,
                                     bool normalize_weighted) {
  const Matrix P_eval = eval_phi_matrix(cloud, problem);
  return {risk_weighted(P_eval, cloud.rho, problem.targets_eval, normalize_weighted),
          risk_unweighted(P_eval, problem.targets_eval)};
}

MetricsRow prox_learn_step(ParticleCloud& cloud, const ProxLearnProblem& problem,
                           const ProxConfig& cfg, Rng& rng, bool with_risks) {
  const auto t0 = std::chrono::steady_clock::now();
  const ModelSpec& model = problem.model;

  // Potentials and drift at theta_{k-1}; the N x N interaction matrix is not
  // materialized, u comes from P (P^T rho) / n_data.
  PotentialEval pe;
  GradBlocks drift;
  if (model.head == Head::BinaryTanh) {
    const auto a = cloud.theta.col(0);
    const TanhCaches caches =
        tanh_caches(cloud.theta.col(1), cloud.theta.rightCols(model.n_x), problem.X_train);
    const double inv_n = 1.0 / static_cast<double>(problem.X_train.rows());
    pe.P = caches.T.array().colwise() * a.array();
    pe.v.noalias() = (-2.0 * inv_n) * (pe.P * problem.y_train);
    pe.u.noalias() = inv_n * (pe.P * (pe.P.transpose() * cloud.rho));
    drift = drift_binary(cloud, caches, problem.X_train, problem.y_train);
  } else {
    pe = build_potentials_multiclass(cloud, problem.X_train, problem.Y_train_onehot, model, false);
    drift = grad_multiclass(cloud.theta, problem.X_train, problem.Y_train_onehot, cloud.rho, model,
                            &pe.P);
  }

  EMConfig em{cfg.h, cfg.beta, cfg.noise_scale};
  ParticleCloud moved = em_update(cloud, drift, model, em, rng);

  const GibbsOperator gamma(moved.theta, cloud.theta, cfg.epsilon);
  const Vector xi = xi_from_field(pe.v, pe.u, cfg.beta);

  Vector z0(cloud.num_particles());
  rng.fill_uniform_pos(z0, 0.0, 1.0);
  const double exponent = 1.0 / (1.0 + cfg.beta * cfg.epsilon / cfg.h);
  ProxResult prox = sinkhorn_fixed_point(gamma, xi, cloud.rho, exponent, cfg.delta,
                                         cfg.max_sinkhorn_iters, z0);

  cloud.theta = std::move(moved.theta);
  cloud.rho = std::move(prox.rho_next);
  cloud.step_index += 1;

  MetricsRow row;
  row.iter = cloud.step_index;
  row.sinkhorn_iters = prox.diag.iterations;
  row.marginal_residual = prox.diag.marginal_residual;
  row.sinkhorn_converged = prox.diag.converged;
  if (with_risks) {
    const auto risks = eval_risks(cloud, problem, cfg.normalize_weighted);
    row.risk_weighted = risks.first;
    row.risk_unweighted = risks.second;
  }
  row.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
                    .count();
  return row;
}

namespace {

void append_metrics(std::ofstream& f, const MetricsRow& row) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%" PRId64 ",%s,%s,%d,%s,%.3f\n", row.iter,
                fmt17(row.risk_weighted).c_str(), fmt17(row.risk_unweighted).c_str(),
                row.sinkhorn_iters, fmt17(row.marginal_residual).c_str(), row.wall_ms);
  f << buf;
  f.flush();
}

void write_manifest(const std::filesystem::path& run_dir, const ProxConfig& cfg,
                    const Dataset& full, const SplitSpec* split_used, Index n_train,
                    Index n_eval) {
  json j;
  if (cfg.data.kind == "sinusoid") {
    j["source"] = {{"generator", "sinusoid"},
                   {"n_points", cfg.data.n_points},
                   {"x_range", {cfg.data.x_lo, cfg.data.x_hi}},
                   {"seed", cfg.data.gen_seed}};
  } else {
    j["source"] = {{"path", cfg.data.path.string()},
                   {"checksum", file_checksum(cfg.data.path)}};
  }
  if (full.scaling.identity()) {
    j["scaling"] = "identity";
  } else {
    j["scaling"] = {{"scale", std::vector<double>(full.scaling.scale.data(),
                                                  full.scaling.scale.data() + full.scaling.scale.size())},
                    {"offset", std::vector<double>(full.scaling.offset.data(),
                                                   full.scaling.offset.data() + full.scaling.offset.size())}};
  }
  if (split_used != nullptr) {
    json s;
    s["mode"] = split_used->mode == SplitSpec::Mode::Fraction ? "fraction" : "head_count";
    if (split_used->mode == SplitSpec::Mode::Fraction) s["train_frac"] = split_used->train_frac;
    else s["n_train"] = split_used->n_train;
    s["shuffle"] = split_used->shuffle;
    s["seed"] = split_used->seed;
    j["split"] = s;
  } else {
    j["split"] = "none";
  }
  j["n_train"] = n_train;
  j["n_eval"] = n_eval;
  std::ofstream f(run_dir / "dataset_manifest.json");
  if (!f) throw IoError("cannot write dataset manifest");
  f << j.dump(2) << '\n';
}

void save_checkpoint(const std::filesystem::path& dir, const ParticleCloud& cloud,
                     const ProxConfig& cfg, const ModelSpec& model, const Rng& rng) {
  CheckpointMeta meta;
  meta.n = cloud.num_particles();
  meta.p = cloud.dim();
  meta.step_index = cloud.step_index;
  meta.model = model.tag();
  meta.config_hash = config_hash(cfg);
  meta.seed = cfg.seed;
  save_cloud(cloud, dir, meta);
  std::ofstream f(dir / "rng_state.txt");
  if (!f) throw IoError("cannot write RNG state");
  rng.save_state(f);
}

}  // namespace

TrainResult train(const ProxConfig& cfg, const std::filesystem::path& out_dir, bool resume) {
  cfg.check();

  const Dataset full = load_dataset(cfg.data);
  ModelSpec model;
  model.head = cfg.head;
  model.n_x = full.n_x();
  if (cfg.head == Head::MultiSoftmax) {
    model.classes = cfg.classes > 0 ? cfg.classes : full.classes;
    if (full.task != Task::MultiClass || model.classes != full.classes)
      throw ConfigError("train: multi-class head needs a multi-class dataset");
  } else if (full.task == Task::MultiClass) {
    throw ConfigError("train: dataset is multi-class but the model head is binary");
  }
  model.check();

  SplitSpec split_used = cfg.split_spec;
  split_used.seed = cfg.split_seed.value_or(cfg.seed);
  Dataset train_set, eval_set;
  if (cfg.has_split) {
    std::tie(train_set, eval_set) = split(full, split_used);
  } else {
    train_set = full;
    eval_set = full;
  }
  const ProxLearnProblem problem = ProxLearnProblem::make(train_set, eval_set, model);

  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create run directory " + out_dir.string());
  const auto checkpoint_dir = out_dir / "checkpoint";
  const auto metrics_path = out_dir / "metrics.csv";

  ParticleCloud cloud;
  Rng rng(cfg.seed);
  std::ofstream metrics;

  if (resume) {
    LoadedCloud stored = load_cloud(checkpoint_dir);
    if (stored.meta.config_hash != config_hash(cfg))
      throw ConfigError("resume: checkpoint was produced by a different config");
    if (stored.meta.model != model.tag())
      throw ConfigError("resume: checkpoint model does not match");
    cloud = std::move(stored.cloud);
    std::ifstream f(checkpoint_dir / "rng_state.txt");
    if (!f) throw IoError("resume: missing RNG state");
    rng.load_state(f);
    metrics.open(metrics_path, std::ios::app);
    if (!metrics) throw IoError("cannot append to metrics.csv");
  } else {
    {
      std::ofstream f(out_dir / "config.json");
      if (!f) throw IoError("cannot write resolved config");
      f << config_to_json_text(cfg) << '\n';
    }
    write_manifest(out_dir, cfg, full, cfg.has_split ? &split_used : nullptr,
                   problem.X_train.rows(), problem.X_eval.rows());
    const Index p = model.param_dim();
    InitSpec init;
    init.box = model.head == Head::BinaryTanh
                   ? binary_box(cfg.init.a, cfg.init.b, cfg.init.w, model.n_x)
                   : uniform_box(cfg.init.w, p);
    init.weight_init = cfg.init.rho0.mode;
    init.weight_lo = cfg.init.rho0.lo;
    init.weight_hi = cfg.init.rho0.hi;
    init.weight_value = cfg.init.rho0.value;
    cloud = init_cloud(init, cfg.n_particles, p, rng);
    metrics.open(metrics_path, std::ios::trunc);
    if (!metrics) throw IoError("cannot write metrics.csv");
    metrics << "iter,risk_weighted,risk_unweighted,sinkhorn_iters,marginal_residual,wall_ms\n";
    metrics.flush();
  }

  TrainResult result;
  result.run_dir = out_dir;

  for (std::int64_t k = cloud.step_index + 1; k <= cfg.iterations; ++k) {
    const bool log_step = (k % cfg.log_every == 0);
    MetricsRow row;
    try {
      row = prox_learn_step(cloud, problem, cfg, rng, log_step || k == cfg.iterations);
    } catch (const NumericalError& e) {
      save_checkpoint(checkpoint_dir, cloud, cfg, model, rng);
      throw NumericalError("step " + std::to_string(k) + ": " + e.what() +
                           " (last checkpoint retained)");
    }
    if (!row.sinkhorn_converged) {
      ++result.non_converged_steps;
      if (result.non_converged_steps <= 5)
        std::cerr << "[" << cfg.name << "] warning: Sinkhorn hit the iteration cap ("
                  << row.sinkhorn_iters << ") at step " << k << "\n";
    }
    if (log_step) append_metrics(metrics, row);
    result.last = row;
    if (cfg.checkpoint_every > 0 && k % cfg.checkpoint_every == 0 && k != cfg.iterations)
      save_checkpoint(checkpoint_dir, cloud, cfg, model, rng);
  }

  if (result.non_converged_steps > 5)
    std::cerr << "[" << cfg.name << "] warning: Sinkhorn cap reached in "
              << result.non_converged_steps << " steps total\n";

  save_checkpoint(checkpoint_dir, cloud, cfg, model, rng);
  return result;
}

EvalReport evaluate(const ParticleCloud& cloud, const ModelSpec& model, const Dataset& data,
                    EstimateMode mode, bool normalize) {
  EvalReport report;
  report.task = data.task;
  report.step_index = cloud.step_index;

  Matrix P;
  if (model.head == Head::BinaryTanh) {
    const auto a = cloud.theta.col(0);
    const auto b = cloud.theta.col(1);
    const auto W = cloud.theta.rightCols(model.n_x);
    P = W * data.X.transpose();
    P.colwise() += b;
    P = P.array().tanh();
    P.array().colwise() *= a.array();
  } else {
    P = build_potentials_multiclass(cloud, data.X, data.onehot(), model, false).P;
  }
  report.risk_weighted = risk_weighted(P, cloud.rho, data.targets(), normalize);
  report.risk_unweighted = risk_unweighted(P, data.targets());

  if (data.task != Task::Regression) {
    const PredictionReport pred = predict(cloud, data.X, data.y, model, mode, normalize);
    report.accuracy = pred.accuracy;
    report.confusion = pred.confusion;
  }
  return report;
}

std::string EvalReport::to_table(bool zero_one_labels) const {
  std::ostringstream os;
  os << "step_index        " << step_index << '\n';
  os << "risk_weighted     " << fmt17(risk_weighted) << '\n';
  os << "risk_unweighted   " << fmt17(risk_unweighted) << '\n';
  if (task == Task::Regression) return os.str();
  char acc[32];
  std::snprintf(acc, sizeof(acc), "%.4f", accuracy);
  os << "accuracy          " << acc << '\n';
  os << "confusion (rows actual, cols predicted";
  if (task == Task::Binary) os << (zero_one_labels ? "; classes 0,1" : "; classes -1,+1");
  os << ")\n";
  for (Eigen::Index i = 0; i < confusion.rows(); ++i) {
    os << " ";
    for (Eigen::Index j = 0; j < confusion.cols(); ++j) os << ' ' << confusion(i, j);
    os << '\n';
  }
  return os.str();
}

std::string EvalReport::to_json_text() const {
  json j;
  j["step_index"] = step_index;
  j["risk_weighted"] = risk_weighted;
  j["risk_unweighted"] = risk_unweighted;
  if (task != Task::Regression) {
    j["accuracy"] = accuracy;
    std::vector<std::vector<int>> conf;
    for (Eigen::Index i = 0; i < confusion.rows(); ++i) {
      std::vector<int> row;
      for (Eigen::Index jj = 0; jj < confusion.cols(); ++jj) row.push_back(confusion(i, jj));
      conf.push_back(row);
    }
    j["confusion"] = conf;
  }
  return j.dump(2);
}

LoadedRun load_run(const std::filesystem::path& run_dir) {
  namespace fs = std::filesystem;
  fs::path checkpoint = run_dir;
  fs::path config_path = run_dir / "config.json";
  if (fs::exists(run_dir / "checkpoint" / "meta.json")) {
    checkpoint = run_dir / "checkpoint";
  } else if (fs::exists(run_dir / "meta.json")) {
    config_path = run_dir.parent_path() / "config.json";
  } else {
    throw IoError("load_run: no checkpoint under " + run_dir.string());
  }

  LoadedRun out;
  LoadedCloud stored = load_cloud(checkpoint);
  out.cloud = std::move(stored.cloud);
  out.meta = stored.meta;
  out.cfg = load_config(config_path);
  return out;
}

std::vector<SweepRow> sweep(const ProxConfig& cfg, const std::string& parameter,
                            const std::vector<double>& values,
                            const std::filesystem::path& out_dir) {
  if (parameter != "epsilon" && parameter != "beta" && parameter != "N")
    throw ConfigError("sweep: parameter must be one of epsilon, beta, N");
  if (values.empty()) throw ConfigError("sweep: no values given");

  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create sweep directory " + out_dir.string());

  std::ofstream summary(out_dir / "sweep_summary.csv");
  if (!summary) throw IoError("cannot write sweep summary");
  summary << "parameter,value,final_risk_weighted,final_risk_unweighted,accuracy,runtime_s\n";

  std::vector<SweepRow> rows;
  for (const double value : values) {
    ProxConfig run_cfg = cfg;
    if (parameter == "epsilon") run_cfg.epsilon = value;
    if (parameter == "beta") run_cfg.beta = value;
    if (parameter == "N") run_cfg.n_particles = static_cast<Index>(value);
    run_cfg.name = cfg.name + "-" + parameter + "=" + fmt17(value);

    std::ostringstream dir_name;
    dir_name << parameter << "_" << value;
    const auto run_dir = out_dir / dir_name.str();

    const auto t0 = std::chrono::steady_clock::now();
    const TrainResult res = train(run_cfg, run_dir);
    SweepRow row;
    row.value = value;
    row.runtime_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    row.final_risk_weighted = res.last.risk_weighted;
    row.final_risk_unweighted = res.last.risk_unweighted;

    const Dataset full = load_dataset(run_cfg.data);
    if (full.task != Task::Regression) {
      LoadedRun run = load_run(run_dir);
      ModelSpec model = parse_model_tag(run.meta.model);
      Dataset eval_set = full;
      if (run_cfg.has_split) {
        SplitSpec split_used = run_cfg.split_spec;
        split_used.seed = run_cfg.split_seed.value_or(run_cfg.seed);
        eval_set = split(full, split_used).second;
      }
      row.accuracy =
          evaluate(run.cloud, model, eval_set, EstimateMode::Weighted, run_cfg.normalize_weighted)
              .accuracy;
    }

    char line[256];
    std::snprintf(line, sizeof(line), "%s,%s,%s,%s,%s,%.3f\n", parameter.c_str(),
                  fmt17(value).c_str(), fmt17(row.final_risk_weighted).c_str(),
                  fmt17(row.final_risk_unweighted).c_str(), fmt17(row.accuracy).c_str(),
                  row.runtime_s);
    summary << line;
    summary.flush();
    rows.push_back(row);
  }
  return rows;
}

}  // namespace pmfl
