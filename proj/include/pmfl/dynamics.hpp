#pragma once

#include "pmfl/cloud.hpp"
#include "pmfl/grad.hpp"
#include "pmfl/rng.hpp"
#include "pmfl/types.hpp"

namespace pmfl {

struct EMConfig {
  double h = 1e-3;           // time step
  double beta = 1.0;         // inverse temperature
  double noise_scale = 1.0;  // multiplier on the diffusion term (1/100 for multi-class)

  void check() const;
};

/// Euler-Maruyama location update with the nonlocal drift:
///   theta_i <- theta_i - h * drift_i + noise_scale * sqrt(2h/beta) * g_i
/// with g_i drawn i.i.d. standard normal in row-major particle order from the
/// shared stream. Weights and step_index are untouched; the trainer advances
/// the counter after the prox step.
ParticleCloud em_update(const ParticleCloud& cloud, const GradBlocks& drift, const ModelSpec& spec,
                        const EMConfig& cfg, Rng& rng);

}  // namespace pmfl
