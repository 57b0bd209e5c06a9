#pragma once

#include "pmfl/model.hpp"
#include "pmfl/types.hpp"

#include <functional>

namespace pmfl {

/// Shared tanh evaluations for the binary head: T = tanh(W X^T + b 1^T) and
/// S = sech^2 of the same argument (computed as 1 - T.^2). Both N x n_data.
struct TanhCaches {
  Matrix T;
  Matrix S;
};

TanhCaches tanh_caches(const Eigen::Ref<const Vector>& b, const Eigen::Ref<const Matrix>& W,
                       const Matrix& X);

/// Per-particle partials of the summed potentials, in the cloud's parameter
/// layout. Binary head fills d_a, d_b, d_w (N x n_x); the multi-class head
/// fills d_w only, holding the flattened m x n_x blocks (N x m*n_x).
struct GradBlocks {
  Vector d_a;
  Vector d_b;
  Matrix d_w;

  // Assembles the N x p drift matrix matching the cloud layout.
  Matrix full(const ModelSpec& spec) const;
};

// Gradient blocks of sum_k v_k for the binary head:
//   d_a = -(2/n) T y
//   d_b = -(2/n) a .* (S y)
//   d_W = -(2/n) (a 1^T) .* (S (X .* y 1^T))
GradBlocks grad_v_binary(const Eigen::Ref<const Vector>& a, const Eigen::Ref<const Vector>& b,
                         const Eigen::Ref<const Matrix>& W, const Matrix& X, const Vector& y);
GradBlocks grad_v_binary(const Eigen::Ref<const Vector>& a, const TanhCaches& caches,
                         const Matrix& X, const Vector& y);

// Gradient blocks of sum_k u_k with rho frozen (semi-implicit). Writing
// g = T^T a and r = T^T (a .* rho):
//   d_a = (1/n) [ rho .* (T g) + T r ]
//   d_b = (1/n) a .* [ rho .* (S g) + S r ]
//   d_W(i,j) = (1/n) sum_k sum_m a_i a_k (rho_i + rho_k) T_km S_im X_mj
GradBlocks grad_u_binary(const Eigen::Ref<const Vector>& a, const Eigen::Ref<const Vector>& b,
                         const Eigen::Ref<const Matrix>& W, const Matrix& X, const Vector& rho);
GradBlocks grad_u_binary(const Eigen::Ref<const Vector>& a, const TanhCaches& caches,
                         const Matrix& X, const Vector& rho);

// Combined drift sum_k (v_k + u_k) for the binary head; one tanh pass.
GradBlocks drift_binary(const ParticleCloud& cloud, const Matrix& X, const Vector& y,
                        const ModelSpec& spec);
GradBlocks drift_binary(const ParticleCloud& cloud, const TanhCaches& caches, const Matrix& X,
                        const Vector& y);

/// Multi-class drift: d_Theta = grad_Theta sum_k (v_k + u_k) with rho frozen,
/// via the softmax Jacobian dphi/dz = s_c (e_c - s) per data point. Pass the
/// already-built P to skip one softmax pass; otherwise it is recomputed.
GradBlocks grad_multiclass(const Matrix& Theta, const Matrix& X, const Matrix& Y_onehot,
                           const Vector& rho, const ModelSpec& spec, const Matrix* P_hint = nullptr);

/// Central finite differences, coordinate by coordinate. Kept independent of
/// the closed forms above; the gradcheck command and the test suites compare
/// against it.
Vector fd_gradient(const std::function<double(const Vector&)>& f, const Vector& point, double step);

struct GradCheckReport {
  double max_rel_err_binary = 0.0;
  double max_rel_err_multiclass = 0.0;
  int trials = 0;
};

// Random-instance comparison of the closed forms against fd_gradient
// (step 1e-6, relative l_inf with the denominator floored at 1e-10).
GradCheckReport gradcheck(int trials, std::uint64_t seed);

}  // namespace pmfl
