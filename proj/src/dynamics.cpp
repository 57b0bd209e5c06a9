#include "pmfl/dynamics.hpp"

#include <cmath>

namespace pmfl {

void EMConfig::check() const {
  if (!(h > 0.0)) throw ConfigError("em_update: h must be positive");
  if (!(beta > 0.0)) throw ConfigError("em_update: beta must be positive");
  if (!(noise_scale >= 0.0)) throw ConfigError("em_update: noise_scale must be nonnegative");
}

ParticleCloud em_update(const ParticleCloud& cloud, const GradBlocks& drift, const ModelSpec& spec,
                        const EMConfig& cfg, Rng& rng) {
  cfg.check();
  const Matrix d = drift.full(spec);
  if (d.rows() != cloud.num_particles() || d.cols() != cloud.dim())
    throw std::invalid_argument("em_update: drift shape does not match cloud");
  if (!d.allFinite()) throw NumericalError("em_update: non-finite drift");

  ParticleCloud next = cloud;
  next.theta.noalias() -= cfg.h * d;
  if (cfg.noise_scale > 0.0) {
    Matrix g(cloud.num_particles(), cloud.dim());
    rng.fill_normal(g);
    next.theta.noalias() += (cfg.noise_scale * std::sqrt(2.0 * cfg.h / cfg.beta)) * g;
  }
  return next;
}

}  // namespace pmfl
