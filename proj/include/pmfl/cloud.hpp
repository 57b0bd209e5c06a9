#pragma once

#include "pmfl/rng.hpp"
#include "pmfl/types.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace pmfl {

/// Weighted point cloud: N parameter samples (rows of theta) carrying the
/// strictly positive density values rho evaluated at those samples. The prox
/// step conserves sum(rho); only this pair plus the step counter is state.
struct ParticleCloud {
  Matrix theta;              // N x p
  Vector rho;                // N, > 0 elementwise
  std::int64_t step_index = 0;

  Index num_particles() const { return theta.rows(); }
  Index dim() const { return theta.cols(); }
};

// Throws NumericalError on non-finite theta, ConfigError on rho <= 0 or
// mismatched sizes.
void validate(const ParticleCloud& cloud);

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

enum class WeightInit {
  UniformDensity,  // rho[i] = 1 / box volume
  UniformRandom,   // rho[i] ~ Unif(weight_lo, weight_hi]
  Constant,        // rho[i] = weight_value
};

struct InitSpec {
  std::vector<Interval> box;  // per-coordinate support for the theta draws
  WeightInit weight_init = WeightInit::UniformDensity;
  double weight_lo = 0.0;
  double weight_hi = 1000.0;
  double weight_value = 1.0;
};

// Repeats one interval over all p coordinates.
std::vector<Interval> uniform_box(Interval iv, Index p);

// Binary-head layout (a, b, w_1..w_nx).
std::vector<Interval> binary_box(Interval a, Interval b, Interval w, Index n_x);

/// Draws theta[i][j] i.i.d. uniform from the per-coordinate box (row-major
/// order), then the weights. Deterministic given the stream state.
ParticleCloud init_cloud(const InitSpec& spec, Index n, Index p, Rng& rng);

/// Checkpoint metadata stored next to the matrices.
struct CheckpointMeta {
  Index n = 0;
  Index p = 0;
  std::int64_t step_index = 0;
  std::string model;        // model variant tag, e.g. "binary_tanh:nx=30"
  std::string config_hash;
  std::uint64_t seed = 0;
};

// Directory layout: theta.csv (N rows, p columns, no header), rho.csv
// (N rows, 1 column), meta.json. Decimals carry 17 significant digits so the
// round trip is bit-exact.
void save_cloud(const ParticleCloud& cloud, const std::filesystem::path& dir,
                const CheckpointMeta& meta);

struct LoadedCloud {
  ParticleCloud cloud;
  CheckpointMeta meta;
};

LoadedCloud load_cloud(const std::filesystem::path& dir);

}  // namespace pmfl
