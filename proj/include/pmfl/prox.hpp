#pragma once

#include "pmfl/types.hpp"

#include <cstdint>
#include <vector>

namespace pmfl {

// C(i,j) = || theta_k.row(i) - theta_prev.row(j) ||_2^2. For the multi-class
// layout this equals the per-class squared distances summed over the class
// blocks, so the flattened rows already do the right thing.
Matrix cost_matrix(const Eigen::Ref<const Matrix>& theta_k,
                   const Eigen::Ref<const Matrix>& theta_prev);

// Gamma = exp(-C / (2 epsilon)), entries in (0, 1].
Matrix gibbs_kernel(const Eigen::Ref<const Matrix>& C, double epsilon);

// xi = exp(-beta v - beta U rho_prev - 1). Throws NumericalError when the
// exponent would overflow instead of silently saturating.
Vector xi_vector(const Vector& v, const Matrix& U, const Vector& rho_prev, double beta);

// Same with the interaction field u = U rho_prev already contracted.
Vector xi_from_field(const Vector& v, const Vector& u, double beta);

struct ProxInputs {
  Matrix Gamma;      // N x N, entries in (0, 1]
  Vector xi;         // N, > 0
  Vector rho_prev;   // N, > 0
  double exponent;   // 1 / (1 + beta epsilon / h), in (0, 1)
};

ProxInputs make_prox_inputs(Matrix Gamma, Vector xi, Vector rho_prev, double beta, double epsilon,
                            double h);

/// The Gibbs kernel as a matvec operator. Equivalent to gibbs_kernel over
/// cost_matrix, but skips materializing the dense matrix when most entries
/// underflow (small epsilon), storing both compressed orientations instead.
/// Entries below the smallest normal double are exact zeros in either form.
class GibbsOperator {
 public:
  // Fused construction from the two particle location sets.
  GibbsOperator(const Eigen::Ref<const Matrix>& theta_k,
                const Eigen::Ref<const Matrix>& theta_prev, double epsilon);
  // Adopts an already-built dense kernel.
  explicit GibbsOperator(const Matrix& Gamma);

  Vector apply(const Vector& z) const;    // Gamma z
  Vector apply_t(const Vector& q) const;  // Gamma^T q
  Index rows() const { return n_rows_; }
  Index cols() const { return n_cols_; }
  bool compressed() const { return sparse_; }

 private:
  struct Csr {
    std::vector<Index> ptr;
    std::vector<std::int32_t> idx;
    std::vector<double> val;
  };
  void init_from_dense(const Matrix& C_or_gamma, bool is_cost, double epsilon);
  static Vector apply_csr(const Csr& m, Index out_dim, const Vector& x);

  Index n_rows_ = 0, n_cols_ = 0;
  bool sparse_ = false;
  Matrix gamma_, gamma_t_;  // dense mode
  Csr rows_csr_, cols_csr_;  // compressed mode: rows of Gamma / rows of Gamma^T
};

struct ProxDiagnostics {
  int iterations = 0;
  double dz_inf = 0.0;             // last l_inf change in z
  double dq_inf = 0.0;             // last l_inf change in q
  double marginal_residual = 0.0;  // || q .* (Gamma z) - rho_prev ||_inf
  bool converged = false;
  // || log z_{l+1} - log z_l ||_inf per iteration; the z-map is strictly
  // contractive in this metric, which the tests assert.
  std::vector<double> thompson_steps;
};

struct ProxResult {
  Vector rho_next;
  ProxDiagnostics diag;
};

/// Block-coordinate fixed point of the entropic proximal step:
///   z <- (xi ./ (Gamma^T q))^(1/(1 + beta epsilon/h)),  q <- rho_prev ./ (Gamma z)
/// until the l_inf changes of both fall below delta or max_iters is reached;
/// returns rho_next = z .* (Gamma^T q). The q-step restores the marginal
/// exactly, so sum(rho_next) = sum(rho_prev) up to round-off. Non-convergence
/// is reported through diag.converged, not an error; non-finite iterates are.
ProxResult sinkhorn_fixed_point(const ProxInputs& in, double delta, int max_iters,
                                const Vector& z0);

ProxResult sinkhorn_fixed_point(const GibbsOperator& gamma, const Vector& xi,
                                const Vector& rho_prev, double exponent, double delta,
                                int max_iters, const Vector& z0);

}  // namespace pmfl
