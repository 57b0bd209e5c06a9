#include "pmfl/prox.hpp"

#include <cmath>
#include <limits>
#include <vector>

namespace pmfl {

namespace {

// exp arguments beyond -708 underflow the normal range; the kernel treats
// such entries as exact zeros in both the dense and compressed forms.
constexpr double kExpCut = 708.0;

// Output-parallel dense matvec via column dots of the pre-transposed
// operator: every entry is one contiguous sequential dot, so the result is
// identical for any thread count.
Vector matvec_cols(const Matrix& At, const Vector& x) {
  Vector out(At.cols());
#pragma omp parallel for schedule(static)
  for (Index j = 0; j < At.cols(); ++j) out(j) = At.col(j).dot(x);
  return out;
}

}  // namespace

Matrix cost_matrix(const Eigen::Ref<const Matrix>& theta_k,
                   const Eigen::Ref<const Matrix>& theta_prev) {
  if (theta_k.cols() != theta_prev.cols())
    throw std::invalid_argument("cost_matrix: parameter dimensions differ");
  const Vector nk = theta_k.rowwise().squaredNorm();
  const Vector np = theta_prev.rowwise().squaredNorm();
  Matrix C;
  C.noalias() = -2.0 * (theta_k * theta_prev.transpose());
  C = ((C.colwise() + nk).rowwise() + np.transpose()).cwiseMax(0.0);
  return C;
}

Matrix gibbs_kernel(const Eigen::Ref<const Matrix>& C, double epsilon) {
  if (!(epsilon > 0.0)) throw ConfigError("gibbs_kernel: epsilon must be positive");
  // Flushing the underflow tail to exact zeros keeps the fixed-point matvecs
  // out of the FPU's denormal assist path.
  const double cutoff = 2.0 * epsilon * kExpCut;
  return (C.array() > cutoff).select(0.0, (-C / (2.0 * epsilon)).array().exp());
}

GibbsOperator::GibbsOperator(const Eigen::Ref<const Matrix>& theta_k,
                             const Eigen::Ref<const Matrix>& theta_prev, double epsilon) {
  if (!(epsilon > 0.0)) throw ConfigError("GibbsOperator: epsilon must be positive");
  init_from_dense(cost_matrix(theta_k, theta_prev), /*is_cost=*/true, epsilon);
}

GibbsOperator::GibbsOperator(const Matrix& Gamma) {
  init_from_dense(Gamma, /*is_cost=*/false, 1.0);
}

void GibbsOperator::init_from_dense(const Matrix& M, bool is_cost, double epsilon) {
  n_rows_ = M.rows();
  n_cols_ = M.cols();
  const double cost_cut = 2.0 * epsilon * kExpCut;
  const double inv_two_eps = 1.0 / (2.0 * epsilon);

  // Column-compressed side in one sequential pass; the storage decision falls
  // out of the running count. For a cost-matrix input the kept entries are
  // exponentiated on the fly.
  cols_csr_.ptr.assign(static_cast<std::size_t>(n_cols_) + 1, 0);
  cols_csr_.idx.reserve(static_cast<std::size_t>(M.size() / 4));
  cols_csr_.val.reserve(static_cast<std::size_t>(M.size() / 4));
  for (Index j = 0; j < n_cols_; ++j) {
    for (Index i = 0; i < n_rows_; ++i) {
      const double raw = M(i, j);
      double v;
      if (is_cost) {
        if (raw > cost_cut) continue;
        v = std::exp(-raw * inv_two_eps);
      } else {
        if (raw == 0.0) continue;
        v = raw;
      }
      cols_csr_.idx.push_back(static_cast<std::int32_t>(i));
      cols_csr_.val.push_back(v);
    }
    cols_csr_.ptr[static_cast<std::size_t>(j) + 1] = static_cast<Index>(cols_csr_.idx.size());
  }

  const Index nnz = static_cast<Index>(cols_csr_.idx.size());
  sparse_ = 2 * nnz < M.size();
  if (!sparse_) {
    cols_csr_ = Csr{};
    if (is_cost) {
      gamma_ = gibbs_kernel(M, epsilon);
    } else {
      gamma_ = M;
    }
    gamma_t_ = gamma_.transpose();
    return;
  }

  // Row-compressed side by transposing the compressed data, O(nnz).
  rows_csr_.ptr.assign(static_cast<std::size_t>(n_rows_) + 1, 0);
  for (Index k = 0; k < nnz; ++k)
    ++rows_csr_.ptr[static_cast<std::size_t>(cols_csr_.idx[static_cast<std::size_t>(k)]) + 1];
  for (Index i = 0; i < n_rows_; ++i)
    rows_csr_.ptr[static_cast<std::size_t>(i) + 1] += rows_csr_.ptr[static_cast<std::size_t>(i)];
  rows_csr_.idx.resize(static_cast<std::size_t>(nnz));
  rows_csr_.val.resize(static_cast<std::size_t>(nnz));
  std::vector<Index> cursor(rows_csr_.ptr.begin(), rows_csr_.ptr.end() - 1);
  for (Index j = 0; j < n_cols_; ++j)
    for (Index k = cols_csr_.ptr[static_cast<std::size_t>(j)];
         k < cols_csr_.ptr[static_cast<std::size_t>(j) + 1]; ++k) {
      const Index i = cols_csr_.idx[static_cast<std::size_t>(k)];
      const Index rk = cursor[static_cast<std::size_t>(i)]++;
      rows_csr_.idx[static_cast<std::size_t>(rk)] = static_cast<std::int32_t>(j);
      rows_csr_.val[static_cast<std::size_t>(rk)] = cols_csr_.val[static_cast<std::size_t>(k)];
    }
}

Vector GibbsOperator::apply_csr(const Csr& m, Index out_dim, const Vector& x) {
  Vector out(out_dim);
#pragma omp parallel for schedule(static)
  for (Index i = 0; i < out_dim; ++i) {
    double acc = 0.0;
    for (Index k = m.ptr[static_cast<std::size_t>(i)]; k < m.ptr[static_cast<std::size_t>(i) + 1];
         ++k)
      acc += m.val[static_cast<std::size_t>(k)] * x(m.idx[static_cast<std::size_t>(k)]);
    out(i) = acc;
  }
  return out;
}

Vector GibbsOperator::apply(const Vector& z) const {
  return sparse_ ? apply_csr(rows_csr_, n_rows_, z) : matvec_cols(gamma_t_, z);
}

Vector GibbsOperator::apply_t(const Vector& q) const {
  return sparse_ ? apply_csr(cols_csr_, n_cols_, q) : matvec_cols(gamma_, q);
}

Vector xi_from_field(const Vector& v, const Vector& u, double beta) {
  if (!(beta > 0.0)) throw ConfigError("xi_vector: beta must be positive");
  if (v.size() != u.size()) throw std::invalid_argument("xi_vector: shape mismatch");
  const Vector expo = -beta * v.array() - beta * u.array() - 1.0;
  if (!expo.allFinite() || expo.maxCoeff() > 700.0)
    throw NumericalError(
        "xi_vector: exponent overflow; lower beta or rescale the data/potentials");
  return expo.array().exp();
}

Vector xi_vector(const Vector& v, const Matrix& U, const Vector& rho_prev, double beta) {
  if (U.rows() != v.size() || U.cols() != rho_prev.size())
    throw std::invalid_argument("xi_vector: shape mismatch");
  return xi_from_field(v, U * rho_prev, beta);
}

ProxInputs make_prox_inputs(Matrix Gamma, Vector xi, Vector rho_prev, double beta, double epsilon,
                            double h) {
  if (!(beta > 0.0) || !(epsilon > 0.0) || !(h > 0.0))
    throw ConfigError("make_prox_inputs: beta, epsilon, h must be positive");
  ProxInputs in;
  in.Gamma = std::move(Gamma);
  in.xi = std::move(xi);
  in.rho_prev = std::move(rho_prev);
  in.exponent = 1.0 / (1.0 + beta * epsilon / h);
  return in;
}

ProxResult sinkhorn_fixed_point(const GibbsOperator& gamma, const Vector& xi,
                                const Vector& rho_prev, double exponent, double delta,
                                int max_iters, const Vector& z0) {
  const Index n = rho_prev.size();
  if (gamma.rows() != n || gamma.cols() != n || xi.size() != n || z0.size() != n)
    throw std::invalid_argument("sinkhorn_fixed_point: shape mismatch");
  if (!(delta >= 0.0)) throw ConfigError("sinkhorn_fixed_point: bad tolerance");
  if (max_iters < 1) throw ConfigError("sinkhorn_fixed_point: max_iters must be >= 1");
  if (!(exponent > 0.0 && exponent < 1.0))
    throw ConfigError("sinkhorn_fixed_point: exponent outside (0, 1)");
  if (!(z0.array() > 0.0).all() || !(rho_prev.array() > 0.0).all() || !(xi.array() > 0.0).all())
    throw std::invalid_argument("sinkhorn_fixed_point: inputs must be strictly positive");

  ProxResult res;
  ProxDiagnostics& diag = res.diag;
  diag.thompson_steps.reserve(static_cast<std::size_t>(max_iters));

  Vector z = z0;
  Vector gamma_z = gamma.apply(z);
  Vector q = rho_prev.cwiseQuotient(gamma_z);

  for (int l = 1; l <= max_iters; ++l) {
    const Vector gtq = gamma.apply_t(q);
    Vector z_new = (xi.cwiseQuotient(gtq)).array().pow(exponent);
    Vector gamma_z_new = gamma.apply(z_new);
    Vector q_new = rho_prev.cwiseQuotient(gamma_z_new);
    if (!z_new.allFinite() || !q_new.allFinite())
      throw NumericalError("sinkhorn_fixed_point: non-finite iterate at iteration " +
                           std::to_string(l));

    diag.iterations = l;
    diag.dz_inf = (z_new - z).cwiseAbs().maxCoeff();
    diag.dq_inf = (q_new - q).cwiseAbs().maxCoeff();
    diag.thompson_steps.push_back((z_new.array().log() - z.array().log()).abs().maxCoeff());

    z.swap(z_new);
    q.swap(q_new);
    gamma_z.swap(gamma_z_new);
    if (diag.dz_inf < delta && diag.dq_inf < delta) {
      diag.converged = true;
      break;
    }
  }

  res.rho_next = z.cwiseProduct(gamma.apply_t(q));
  if (!res.rho_next.allFinite())
    throw NumericalError("sinkhorn_fixed_point: non-finite proximal update");
  diag.marginal_residual = (q.cwiseProduct(gamma_z) - rho_prev).cwiseAbs().maxCoeff();
  return res;
}

ProxResult sinkhorn_fixed_point(const ProxInputs& in, double delta, int max_iters,
                                const Vector& z0) {
  const GibbsOperator gamma(in.Gamma);
  return sinkhorn_fixed_point(gamma, in.xi, in.rho_prev, in.exponent, delta, max_iters, z0);
}

}  // namespace pmfl
