#include "pmfl/cloud.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>

using namespace pmfl;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& tag) {
  const fs::path dir = fs::temp_directory_path() / ("pmfl_cloud_" + tag);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("init_cloud draws inside the per-coordinate box") {
  InitSpec spec;
  spec.box = binary_box({0.9, 1.1}, {-0.1, 0.1}, {-1.0, 1.0}, 30);
  Rng rng(7);
  const ParticleCloud cloud = init_cloud(spec, 1000, 32, rng);

  CHECK(cloud.num_particles() == 1000);
  CHECK(cloud.dim() == 32);
  CHECK(cloud.theta.col(0).minCoeff() >= 0.9);
  CHECK(cloud.theta.col(0).maxCoeff() <= 1.1);
  CHECK(cloud.theta.col(1).minCoeff() >= -0.1);
  CHECK(cloud.theta.col(1).maxCoeff() <= 0.1);
  CHECK(cloud.theta.rightCols(30).minCoeff() >= -1.0);
  CHECK(cloud.theta.rightCols(30).maxCoeff() <= 1.0);
  CHECK(cloud.step_index == 0);
}

TEST_CASE("init_cloud rejects width-zero intervals") {
  InitSpec spec;
  spec.box = uniform_box({0.0, 0.0}, 3);
  Rng rng(1);
  CHECK_THROWS_AS(init_cloud(spec, 10, 3, rng), ConfigError);
}

TEST_CASE("uniform-density weights equal one over the box volume") {
  InitSpec spec;
  spec.box = uniform_box({0.0, 2.0}, 3);  // volume 8
  Rng rng(3);
  const ParticleCloud cloud = init_cloud(spec, 25, 3, rng);
  for (Index i = 0; i < 25; ++i) CHECK(cloud.rho(i) == doctest::Approx(0.125).epsilon(1e-15));
}

TEST_CASE("uniform-random weights stay in (lo, hi]") {
  InitSpec spec;
  spec.box = uniform_box({-1.0, 1.0}, 2);
  spec.weight_init = WeightInit::UniformRandom;
  spec.weight_lo = 0.0;
  spec.weight_hi = 1000.0;
  Rng rng(11);
  const ParticleCloud cloud = init_cloud(spec, 200, 2, rng);
  CHECK(cloud.rho.minCoeff() > 0.0);
  CHECK(cloud.rho.maxCoeff() <= 1000.0);
}

TEST_CASE("init_cloud is deterministic in the seed") {
  InitSpec spec;
  spec.box = uniform_box({-2.0, 2.0}, 4);
  spec.weight_init = WeightInit::UniformRandom;
  Rng rng_a(42), rng_b(42);
  const ParticleCloud a = init_cloud(spec, 64, 4, rng_a);
  const ParticleCloud b = init_cloud(spec, 64, 4, rng_b);
  CHECK(a.theta == b.theta);
  CHECK(a.rho == b.rho);
}

TEST_CASE("save/load round trip is bit-exact") {
  InitSpec spec;
  spec.box = uniform_box({-1.0, 1.0}, 2);
  spec.weight_init = WeightInit::UniformRandom;
  spec.weight_lo = 0.0;
  spec.weight_hi = 3.0;
  Rng rng(5);
  ParticleCloud cloud = init_cloud(spec, 3, 2, rng);
  cloud.step_index = 17;

  const fs::path dir = temp_dir("roundtrip");
  CheckpointMeta meta;
  meta.model = "binary_tanh:nx=0";
  meta.config_hash = "feed";
  meta.seed = 5;
  save_cloud(cloud, dir, meta);

  const LoadedCloud back = load_cloud(dir);
  CHECK(back.cloud.theta == cloud.theta);
  CHECK(back.cloud.rho == cloud.rho);
  CHECK(back.cloud.step_index == 17);
  CHECK(back.meta.model == "binary_tanh:nx=0");
  CHECK(back.meta.seed == 5);
}

TEST_CASE("load rejects truncated and non-positive rho files") {
  InitSpec spec;
  spec.box = uniform_box({-1.0, 1.0}, 2);
  Rng rng(9);
  const ParticleCloud cloud = init_cloud(spec, 4, 2, rng);
  CheckpointMeta meta;
  meta.model = "binary_tanh:nx=0";

  SUBCASE("truncated rho") {
    const fs::path dir = temp_dir("truncated");
    save_cloud(cloud, dir, meta);
    std::ofstream f(dir / "rho.csv", std::ios::trunc);
    f << "0.5\n0.5\n";  // two rows, meta says four
    f.close();
    CHECK_THROWS_AS(load_cloud(dir), IoError);
  }

  SUBCASE("zero weight") {
    const fs::path dir = temp_dir("zero_rho");
    save_cloud(cloud, dir, meta);
    std::ofstream f(dir / "rho.csv", std::ios::trunc);
    f << "0.5\n0.0\n0.5\n0.5\n";
    f.close();
    CHECK_THROWS_AS(load_cloud(dir), IoError);
  }

  SUBCASE("negative weight") {
    const fs::path dir = temp_dir("neg_rho");
    save_cloud(cloud, dir, meta);
    std::ofstream f(dir / "rho.csv", std::ios::trunc);
    f << "0.5\n-1.0\n0.5\n0.5\n";
    f.close();
    CHECK_THROWS_AS(load_cloud(dir), IoError);
  }

  SUBCASE("malformed number") {
    const fs::path dir = temp_dir("bad_number");
    save_cloud(cloud, dir, meta);
    std::ofstream f(dir / "theta.csv", std::ios::app);
    f << "oops,1.0\n";
    f.close();
    CHECK_THROWS_AS(load_cloud(dir), IoError);
  }
}

TEST_CASE("validate enforces positivity and finiteness") {
  ParticleCloud cloud;
  cloud.theta = Matrix::Zero(2, 2);
  cloud.rho = Vector::Ones(2);
  CHECK_NOTHROW(validate(cloud));
  cloud.rho(1) = 0.0;
  CHECK_THROWS_AS(validate(cloud), ConfigError);
  cloud.rho(1) = 1.0;
  cloud.theta(0, 0) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(validate(cloud), NumericalError);
}
