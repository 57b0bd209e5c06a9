#include "pmfl/trainer.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace pmfl;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& tag) {
  const fs::path dir = fs::temp_directory_path() / ("pmfl_trainer_" + tag);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string read_file(const fs::path& path) {
  std::ifstream f(path, std::ios::binary);
  REQUIRE(f);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

// metrics.csv with the wall_ms column (wall-clock, run-dependent) blanked.
std::string metrics_without_wall(const fs::path& path) {
  std::istringstream in(read_file(path));
  std::ostringstream out;
  std::string line;
  while (std::getline(in, line)) {
    const auto cut = line.rfind(',');
    out << line.substr(0, cut) << '\n';
  }
  return out.str();
}

std::string tiny_sinusoid_config(std::int64_t iterations, int log_every = 1) {
  std::ostringstream os;
  os << R"({
    "name": "tiny-sinusoid",
    "model": {"head": "binary_tanh"},
    "data": {"kind": "sinusoid", "n_points": 40, "x_range": [-3.141592653589793, 3.141592653589793], "seed": 7},
    "split": {"mode": "none"},
    "init": {"a": [-1, 1], "b": [-1, 1], "w": [-1.5, 1.5], "rho0": {"mode": "uniform_density"}},
    "solver": {"beta": 0.3, "h": 1e-4, "epsilon": 1e-3, "delta": 1e-3, "max_sinkhorn_iters": 10,
               "n_particles": 50, "iterations": )"
     << iterations << R"(, "seed": 3, "noise_scale": 1.0, "log_every": )" << log_every
     << R"(, "normalize_weighted": false}
  })";
  return os.str();
}

}  // namespace

TEST_CASE("config parsing and validation") {
  const ProxConfig cfg = config_from_json_text(tiny_sinusoid_config(30));
  CHECK(cfg.beta == 0.3);
  CHECK(cfg.n_particles == 50);
  CHECK(cfg.iterations == 30);
  CHECK_FALSE(cfg.has_split);
  CHECK_FALSE(cfg.normalize_weighted);

  SUBCASE("iterations = 0 is rejected") {
    CHECK_THROWS_AS(config_from_json_text(tiny_sinusoid_config(0)), ConfigError);
  }
  SUBCASE("missing solver block") {
    CHECK_THROWS_AS(config_from_json_text(R"({"model": {"head": "binary_tanh"},
      "data": {"kind": "sinusoid"}, "split": {"mode": "none"}, "init": {}})"),
                    ConfigError);
  }
  SUBCASE("bad JSON") {
    CHECK_THROWS_AS(config_from_json_text("{ not json"), ConfigError);
  }
  SUBCASE("round trip through serialization") {
    const ProxConfig back = config_from_json_text(config_to_json_text(cfg));
    CHECK(config_hash(back) == config_hash(cfg));
    CHECK(back.delta == cfg.delta);
    CHECK(back.data.n_points == cfg.data.n_points);
  }
}

TEST_CASE("prox_learn_step equals the composition of module-level pieces") {
  // Tiny binary instance; the manual composition uses the full-U path and the
  // same draw order (noise, then z0).
  Rng data_rng(21);
  const Index n = 3, n_data = 5, n_x = 2;
  Matrix X(n_data, n_x);
  Vector y(n_data);
  for (Index i = 0; i < n_data; ++i) {
    X(i, 0) = data_rng.uniform(-1.0, 1.0);
    X(i, 1) = data_rng.uniform(-1.0, 1.0);
    y(i) = data_rng.uniform01() < 0.5 ? -1.0 : 1.0;
  }

  ProxConfig cfg;
  cfg.beta = 0.5;
  cfg.h = 1e-3;
  cfg.epsilon = 1.0;
  cfg.delta = 1e-9;
  cfg.max_sinkhorn_iters = 2000;
  cfg.n_particles = n;
  cfg.iterations = 1;
  cfg.noise_scale = 1.0;

  const ModelSpec model{Head::BinaryTanh, n_x, 0};
  InitSpec init;
  init.box = binary_box({0.9, 1.1}, {-0.1, 0.1}, {-1.0, 1.0}, n_x);
  Rng rng_impl(77);
  ParticleCloud cloud = init_cloud(init, n, model.param_dim(), rng_impl);
  ParticleCloud manual = cloud;

  Dataset train;
  train.X = X;
  train.y = y;
  train.task = Task::Binary;
  const ProxLearnProblem problem = ProxLearnProblem::make(train, train, model);
  const MetricsRow row = prox_learn_step(cloud, problem, cfg, rng_impl, false);
  CHECK(row.iter == 1);

  // Manual composition with an identically-seeded stream.
  Rng rng_manual(77);
  {
    InitSpec unused = init;
    ParticleCloud scratch = init_cloud(unused, n, model.param_dim(), rng_manual);
    (void)scratch;
  }
  const PotentialEval pe = build_potentials(manual, X, y, model, true);
  GradBlocks drift = grad_v_binary(manual.theta.col(0), manual.theta.col(1),
                                   manual.theta.rightCols(n_x), X, y);
  const GradBlocks gu = grad_u_binary(manual.theta.col(0), manual.theta.col(1),
                                      manual.theta.rightCols(n_x), X, manual.rho);
  drift.d_a += gu.d_a;
  drift.d_b += gu.d_b;
  drift.d_w += gu.d_w;
  const ParticleCloud moved =
      em_update(manual, drift, model, {cfg.h, cfg.beta, cfg.noise_scale}, rng_manual);
  const Matrix C = cost_matrix(moved.theta, manual.theta);
  const Matrix Gamma = gibbs_kernel(C, cfg.epsilon);
  const Vector xi = xi_vector(pe.v, pe.U, manual.rho, cfg.beta);
  Vector z0(n);
  rng_manual.fill_uniform_pos(z0, 0.0, 1.0);
  const ProxResult prox = sinkhorn_fixed_point(
      make_prox_inputs(Gamma, xi, manual.rho, cfg.beta, cfg.epsilon, cfg.h), cfg.delta,
      cfg.max_sinkhorn_iters, z0);

  CHECK((cloud.theta - moved.theta).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK(oracles::rel_linf(cloud.rho, prox.rho_next) <= 1e-6);
  CHECK(cloud.step_index == 1);
}

TEST_CASE("single-atom runs keep rho fixed") {
  ProxConfig cfg;
  cfg.beta = 0.3;
  cfg.h = 1e-3;
  cfg.epsilon = 0.5;
  cfg.n_particles = 1;
  cfg.iterations = 5;

  const ModelSpec model{Head::BinaryTanh, 1, 0};
  Dataset train = gen_sinusoid(10, -1.0, 1.0, 3);
  const ProxLearnProblem problem = ProxLearnProblem::make(train, train, model);

  ParticleCloud cloud;
  cloud.theta = Matrix::Constant(1, 3, 0.4);
  cloud.rho = Vector::Constant(1, 2.5);
  Rng rng(5);
  for (int k = 0; k < 5; ++k) prox_learn_step(cloud, problem, cfg, rng, false);
  CHECK(cloud.rho(0) == doctest::Approx(2.5).epsilon(1e-12));
  CHECK(cloud.step_index == 5);
}

TEST_CASE("zero drift with noise off leaves locations fixed and mass conserved") {
  // The fully symmetric configuration: a = b = w = 0 makes P and T vanish,
  // and balanced labels kill the remaining d_b = -(2/n) a sum(y) term.
  ProxConfig cfg;
  cfg.beta = 1.0;
  cfg.h = 1e-2;
  cfg.epsilon = 1.0;
  cfg.noise_scale = 0.0;
  cfg.n_particles = 4;
  cfg.iterations = 1;

  const ModelSpec model{Head::BinaryTanh, 1, 0};
  Dataset train;
  train.task = Task::Binary;
  train.X.resize(6, 1);
  train.X << -2.0, -1.0, -0.5, 0.5, 1.0, 2.0;
  train.y.resize(6);
  train.y << -1.0, -1.0, -1.0, 1.0, 1.0, 1.0;
  const ProxLearnProblem problem = ProxLearnProblem::make(train, train, model);

  ParticleCloud cloud;
  cloud.theta = Matrix::Zero(4, 3);
  cloud.rho = Vector::Constant(4, 0.25);
  const Matrix theta_before = cloud.theta;
  const double mass_before = cloud.rho.sum();

  Rng rng(13);
  prox_learn_step(cloud, problem, cfg, rng, false);
  CHECK(cloud.theta == theta_before);
  CHECK(std::abs(cloud.rho.sum() - mass_before) <= 1e-12 * mass_before);
}

TEST_CASE("train is deterministic and resumable") {
  const std::string cfg40 = tiny_sinusoid_config(40);

  const fs::path dir_a = temp_dir("det_a");
  const fs::path dir_b = temp_dir("det_b");
  const TrainResult res_a = train(config_from_json_text(cfg40), dir_a);
  const TrainResult res_b = train(config_from_json_text(cfg40), dir_b);

  CHECK(res_a.last.iter == 40);
  CHECK(metrics_without_wall(dir_a / "metrics.csv") == metrics_without_wall(dir_b / "metrics.csv"));
  CHECK(read_file(dir_a / "checkpoint" / "theta.csv") ==
        read_file(dir_b / "checkpoint" / "theta.csv"));
  CHECK(read_file(dir_a / "checkpoint" / "rho.csv") ==
        read_file(dir_b / "checkpoint" / "rho.csv"));

  SUBCASE("interrupted run resumed to the same horizon matches") {
    const fs::path dir_c = temp_dir("resume");
    train(config_from_json_text(tiny_sinusoid_config(20)), dir_c);
    train(config_from_json_text(cfg40), dir_c, /*resume=*/true);
    CHECK(metrics_without_wall(dir_c / "metrics.csv") ==
          metrics_without_wall(dir_a / "metrics.csv"));
    CHECK(read_file(dir_c / "checkpoint" / "theta.csv") ==
          read_file(dir_a / "checkpoint" / "theta.csv"));
    CHECK(read_file(dir_c / "checkpoint" / "rho.csv") ==
          read_file(dir_a / "checkpoint" / "rho.csv"));
  }

  SUBCASE("resume rejects a different config") {
    const fs::path dir_d = temp_dir("resume_bad");
    train(config_from_json_text(tiny_sinusoid_config(20)), dir_d);
    ProxConfig other = config_from_json_text(cfg40);
    other.beta = 0.9;
    CHECK_THROWS_AS(train(other, dir_d, /*resume=*/true), ConfigError);
  }

  SUBCASE("metrics header matches the declared interface") {
    std::istringstream in(read_file(dir_a / "metrics.csv"));
    std::string header;
    std::getline(in, header);
    CHECK(header ==
          "iter,risk_weighted,risk_unweighted,sinkhorn_iters,marginal_residual,wall_ms");
  }

  SUBCASE("checkpoint meta carries the config hash and model tag") {
    const LoadedRun run = load_run(dir_a);
    CHECK(run.meta.step_index == 40);
    CHECK(run.meta.model == "binary_tanh:nx=1");
    CHECK(run.meta.config_hash == config_hash(run.cfg));
  }
}

TEST_CASE("mass is conserved along a short trajectory") {
  ProxConfig cfg = config_from_json_text(tiny_sinusoid_config(1));
  const Dataset full = load_dataset(cfg.data);
  const ModelSpec model{Head::BinaryTanh, 1, 0};
  const ProxLearnProblem problem = ProxLearnProblem::make(full, full, model);

  InitSpec init;
  init.box = binary_box(cfg.init.a, cfg.init.b, cfg.init.w, 1);
  Rng rng(cfg.seed);
  ParticleCloud cloud = init_cloud(init, cfg.n_particles, 3, rng);
  const double mass0 = cloud.rho.sum();
  for (int k = 0; k < 60; ++k) {
    prox_learn_step(cloud, problem, cfg, rng, false);
    CHECK(std::abs(cloud.rho.sum() - mass0) <= 1e-10 * mass0);
    CHECK(cloud.rho.minCoeff() > 0.0);
  }
}

TEST_CASE("evaluate reports accuracy, confusion and risks") {
  // Single particle implementing sign(x): a=1, b=0, w=5.
  ParticleCloud cloud;
  cloud.theta.resize(1, 3);
  cloud.theta << 1.0, 0.0, 5.0;
  cloud.rho = Vector::Ones(1);

  Dataset data;
  data.task = Task::Binary;
  data.X.resize(4, 1);
  data.X << -2.0, -1.0, 1.0, 2.0;
  data.y.resize(4);
  data.y << -1.0, -1.0, 1.0, 1.0;

  const ModelSpec model{Head::BinaryTanh, 1, 0};
  const EvalReport rep = evaluate(cloud, model, data, EstimateMode::Weighted, true);
  CHECK(rep.accuracy == 1.0);
  CHECK(rep.confusion(0, 0) == 2);
  CHECK(rep.confusion(1, 1) == 2);
  CHECK(rep.risk_weighted < 0.01);
  CHECK(rep.to_json_text().find("\"accuracy\"") != std::string::npos);
  CHECK(rep.to_table(false).find("confusion") != std::string::npos);
}

TEST_CASE("single-value sweep reduces to train") {
  const fs::path dir = temp_dir("sweep");
  ProxConfig cfg = config_from_json_text(tiny_sinusoid_config(15));
  const auto rows = sweep(cfg, "N", {50.0}, dir);
  REQUIRE(rows.size() == 1);

  const fs::path direct_dir = temp_dir("sweep_direct");
  const TrainResult direct = train(cfg, direct_dir);
  CHECK(rows[0].final_risk_weighted == direct.last.risk_weighted);
  CHECK(std::isnan(rows[0].accuracy));  // regression task has no accuracy

  std::ifstream summary(dir / "sweep_summary.csv");
  REQUIRE(summary);
  std::string header;
  std::getline(summary, header);
  CHECK(header == "parameter,value,final_risk_weighted,final_risk_unweighted,accuracy,runtime_s");

  CHECK_THROWS_AS(sweep(cfg, "h", {0.1}, dir), ConfigError);
}

TEST_CASE("training rejects a mismatched model/dataset pairing") {
  ProxConfig cfg = config_from_json_text(tiny_sinusoid_config(5));
  cfg.head = Head::MultiSoftmax;
  cfg.classes = 10;
  CHECK_THROWS_AS(train(cfg, temp_dir("mismatch")), ConfigError);
}

TEST_CASE("multi-class smoke run trains and evaluates") {
  // Tiny synthetic 3-class problem through the full loop.
  const Index m = 3, n_x = 4, n_data = 30;
  Rng gen(55);
  Dataset data;
  data.task = Task::MultiClass;
  data.classes = m;
  data.name = "synthetic3";
  data.X.resize(n_data, n_x);
  data.y.resize(n_data);
  for (Index i = 0; i < n_data; ++i) {
    const Index c = i % m;
    for (Index j = 0; j < n_x; ++j) data.X(i, j) = 0.1 * gen.normal();
    data.X(i, c) += 2.0;  // class-c points lean on coordinate c
    data.y(i) = static_cast<double>(c);
  }

  const ModelSpec model{Head::MultiSoftmax, n_x, m};
  const ProxLearnProblem problem = ProxLearnProblem::make(data, data, model);

  ProxConfig cfg;
  cfg.head = Head::MultiSoftmax;
  cfg.classes = m;
  cfg.beta = 0.5;
  cfg.h = 1e-2;
  cfg.epsilon = 10.0;
  cfg.noise_scale = 0.01;
  cfg.n_particles = 20;
  cfg.iterations = 60;

  InitSpec init;
  init.box = uniform_box({-1.0, 1.0}, model.param_dim());
  Rng rng(8);
  ParticleCloud cloud = init_cloud(init, cfg.n_particles, model.param_dim(), rng);
  const double mass0 = cloud.rho.sum();

  double first_risk = 0.0, last_risk = 0.0;
  for (int k = 0; k < 60; ++k) {
    const MetricsRow row = prox_learn_step(cloud, problem, cfg, rng, true);
    if (k == 0) first_risk = row.risk_unweighted;
    last_risk = row.risk_unweighted;
  }
  CHECK(std::abs(cloud.rho.sum() - mass0) <= 1e-10 * mass0);
  CHECK(last_risk < first_risk);

  const EvalReport rep = evaluate(cloud, model, data, EstimateMode::Unweighted, true);
  CHECK(rep.accuracy > 0.9);  // trivially separable by construction
}
