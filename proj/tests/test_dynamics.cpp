#include "pmfl/dynamics.hpp"

#include <doctest.h>

using namespace pmfl;

namespace {

ParticleCloud make_cloud(const Matrix& theta) {
  ParticleCloud c;
  c.theta = theta;
  c.rho = Vector::Ones(theta.rows());
  return c;
}

GradBlocks binary_drift(const Vector& d_a, const Vector& d_b, const Matrix& d_w) {
  GradBlocks g;
  g.d_a = d_a;
  g.d_b = d_b;
  g.d_w = d_w;
  return g;
}

const ModelSpec kBinary1{Head::BinaryTanh, 1, 0};  // layout (a, b, w), p = 3

}  // namespace

TEST_CASE("zero drift with noise off leaves the cloud unchanged") {
  Matrix theta(3, 3);
  theta.setRandom();
  const ParticleCloud cloud = make_cloud(theta);
  const GradBlocks g = binary_drift(Vector::Zero(3), Vector::Zero(3), Matrix::Zero(3, 1));
  Rng rng(1);
  const ParticleCloud next = em_update(cloud, g, kBinary1, {0.1, 1.0, 0.0}, rng);
  CHECK(next.theta == cloud.theta);
  CHECK(next.rho == cloud.rho);
  CHECK(next.step_index == cloud.step_index);
}

TEST_CASE("single descent step: 0.5 - 0.1 * 2 = 0.3 in every coordinate") {
  Matrix theta = Matrix::Constant(1, 3, 0.5);
  const ParticleCloud cloud = make_cloud(theta);
  const GradBlocks g = binary_drift(Vector::Constant(1, 2.0), Vector::Constant(1, 2.0),
                                    Matrix::Constant(1, 1, 2.0));
  Rng rng(2);
  const ParticleCloud next = em_update(cloud, g, kBinary1, {0.1, 1.0, 0.0}, rng);
  for (Index j = 0; j < 3; ++j) CHECK(next.theta(0, j) == doctest::Approx(0.3).epsilon(1e-15));
}

TEST_CASE("noise term replays bit-exactly from the seed") {
  const ParticleCloud cloud = make_cloud(Matrix::Zero(2, 3));
  const GradBlocks g = binary_drift(Vector::Zero(2), Vector::Zero(2), Matrix::Zero(2, 1));

  const double h = 0.5, beta = 2.0;
  Rng rng(99);
  const ParticleCloud next = em_update(cloud, g, kBinary1, {h, beta, 1.0}, rng);

  Rng replay(99);
  Matrix expected(2, 3);
  replay.fill_normal(expected);
  expected *= std::sqrt(2.0 * h / beta);
  CHECK(next.theta == expected);
}

TEST_CASE("em_update is deterministic given the seed") {
  Matrix theta(4, 3);
  theta.setRandom();
  const ParticleCloud cloud = make_cloud(theta);
  const GradBlocks g =
      binary_drift(Vector::Ones(4), Vector::Constant(4, -0.5), Matrix::Constant(4, 1, 0.25));
  Rng rng_a(7), rng_b(7);
  const ParticleCloud a = em_update(cloud, g, kBinary1, {0.01, 0.3, 1.0}, rng_a);
  const ParticleCloud b = em_update(cloud, g, kBinary1, {0.01, 0.3, 1.0}, rng_b);
  CHECK(a.theta == b.theta);
}

TEST_CASE("noise statistics match the scheme's variance") {
  const Index n = 40000;  // 120k draws across the three coordinates
  const double h = 0.05, beta = 0.8, scale = 0.5;
  const ParticleCloud cloud = make_cloud(Matrix::Zero(n, 3));
  const GradBlocks g = binary_drift(Vector::Zero(n), Vector::Zero(n), Matrix::Zero(n, 1));
  Rng rng(123);
  const ParticleCloud next = em_update(cloud, g, kBinary1, {h, beta, scale}, rng);

  const double target_var = scale * scale * 2.0 * h / beta;
  for (Index j = 0; j < 3; ++j) {
    const double mean = next.theta.col(j).mean();
    const double var =
        (next.theta.col(j).array() - mean).square().sum() / static_cast<double>(n - 1);
    const double se = std::sqrt(target_var / static_cast<double>(n));
    CHECK(std::abs(mean) <= 4.0 * se);
    CHECK(var == doctest::Approx(target_var).epsilon(0.02));
  }
}

TEST_CASE("constant drifts compose additively when noise is off") {
  Matrix theta(3, 3);
  theta.setRandom();
  const ParticleCloud cloud = make_cloud(theta);
  const GradBlocks d1 = binary_drift(Vector::Constant(3, 0.3), Vector::Constant(3, -0.1),
                                     Matrix::Constant(3, 1, 0.9));
  const GradBlocks d2 = binary_drift(Vector::Constant(3, -0.7), Vector::Constant(3, 0.4),
                                     Matrix::Constant(3, 1, -0.2));
  GradBlocks sum = d1;
  sum.d_a += d2.d_a;
  sum.d_b += d2.d_b;
  sum.d_w += d2.d_w;

  Rng rng(5);
  const EMConfig cfg{0.2, 1.0, 0.0};
  const ParticleCloud combined = em_update(cloud, sum, kBinary1, cfg, rng);
  const ParticleCloud sequential =
      em_update(em_update(cloud, d1, kBinary1, cfg, rng), d2, kBinary1, cfg, rng);
  CHECK((combined.theta - sequential.theta).cwiseAbs().maxCoeff() <= 1e-14);
}

TEST_CASE("em_update validates its inputs") {
  const ParticleCloud cloud = make_cloud(Matrix::Zero(2, 3));
  GradBlocks g = binary_drift(Vector::Zero(2), Vector::Zero(2), Matrix::Zero(2, 1));
  Rng rng(1);
  CHECK_THROWS_AS(em_update(cloud, g, kBinary1, {0.0, 1.0, 1.0}, rng), ConfigError);
  CHECK_THROWS_AS(em_update(cloud, g, kBinary1, {0.1, 0.0, 1.0}, rng), ConfigError);
  CHECK_THROWS_AS(em_update(cloud, g, kBinary1, {0.1, 1.0, -1.0}, rng), ConfigError);
  g.d_a(0) = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(em_update(cloud, g, kBinary1, {0.1, 1.0, 1.0}, rng), NumericalError);
}
