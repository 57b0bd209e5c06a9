#include "pmfl/grad.hpp"

#include "pmfl/rng.hpp"

#include <cmath>

namespace pmfl {

TanhCaches tanh_caches(const Eigen::Ref<const Vector>& b, const Eigen::Ref<const Matrix>& W,
                       const Matrix& X) {
  if (X.rows() < 1) throw std::invalid_argument("tanh_caches: empty dataset");
  if (W.cols() != X.cols() || W.rows() != b.size())
    throw std::invalid_argument("tanh_caches: shape mismatch");
  TanhCaches c;
  c.T.noalias() = W * X.transpose();
  c.T.colwise() += b;
  c.T = c.T.array().tanh();
  c.S = 1.0 - c.T.array().square();
  return c;
}

Matrix GradBlocks::full(const ModelSpec& spec) const {
  if (spec.head == Head::BinaryTanh) {
    Matrix out(d_w.rows(), spec.param_dim());
    out.col(0) = d_a;
    out.col(1) = d_b;
    out.rightCols(spec.n_x) = d_w;
    return out;
  }
  return d_w;
}

GradBlocks grad_v_binary(const Eigen::Ref<const Vector>& a, const TanhCaches& caches,
                         const Matrix& X, const Vector& y) {
  const Index n_data = X.rows();
  if (n_data < 1) throw std::invalid_argument("grad_v_binary: empty dataset");
  if (caches.T.cols() != n_data || y.size() != n_data || caches.T.rows() != a.size())
    throw std::invalid_argument("grad_v_binary: shape mismatch");
  const double c = -2.0 / static_cast<double>(n_data);

  GradBlocks g;
  g.d_a.noalias() = c * (caches.T * y);
  g.d_b = c * (a.array() * (caches.S * y).array());
  const Matrix Xy = X.array().colwise() * y.array();
  g.d_w.noalias() = caches.S * Xy;
  g.d_w.array().colwise() *= c * a.array();
  return g;
}

GradBlocks grad_v_binary(const Eigen::Ref<const Vector>& a, const Eigen::Ref<const Vector>& b,
                         const Eigen::Ref<const Matrix>& W, const Matrix& X, const Vector& y) {
  return grad_v_binary(a, tanh_caches(b, W, X), X, y);
}

GradBlocks grad_u_binary(const Eigen::Ref<const Vector>& a, const TanhCaches& caches,
                         const Matrix& X, const Vector& rho) {
  const Index n_data = X.rows();
  if (n_data < 1) throw std::invalid_argument("grad_u_binary: empty dataset");
  if (caches.T.cols() != n_data || caches.T.rows() != a.size() || rho.size() != a.size())
    throw std::invalid_argument("grad_u_binary: shape mismatch");
  const double inv_n = 1.0 / static_cast<double>(n_data);
  const Vector ar = a.array() * rho.array();

  // Data-space contractions keep everything O(N n_data): g = T^T a,
  // r = T^T (a .* rho).
  const Vector g_vec = caches.T.transpose() * a;
  const Vector r_vec = caches.T.transpose() * ar;

  GradBlocks g;
  g.d_a = inv_n * (rho.array() * (caches.T * g_vec).array() + (caches.T * r_vec).array());
  g.d_b = inv_n * a.array() *
          (rho.array() * (caches.S * g_vec).array() + (caches.S * r_vec).array());

  // d_W = (1/n) (S .* ((a .* rho) g^T + a r^T)) X
  Matrix coeff = ar * g_vec.transpose();
  coeff.noalias() += a * r_vec.transpose();
  g.d_w.noalias() = inv_n * ((caches.S.array() * coeff.array()).matrix() * X);
  return g;
}

GradBlocks grad_u_binary(const Eigen::Ref<const Vector>& a, const Eigen::Ref<const Vector>& b,
                         const Eigen::Ref<const Matrix>& W, const Matrix& X, const Vector& rho) {
  return grad_u_binary(a, tanh_caches(b, W, X), X, rho);
}

GradBlocks drift_binary(const ParticleCloud& cloud, const TanhCaches& caches, const Matrix& X,
                        const Vector& y) {
  const auto a = cloud.theta.col(0);
  GradBlocks gv = grad_v_binary(a, caches, X, y);
  const GradBlocks gu = grad_u_binary(a, caches, X, cloud.rho);
  gv.d_a += gu.d_a;
  gv.d_b += gu.d_b;
  gv.d_w += gu.d_w;
  return gv;
}

GradBlocks drift_binary(const ParticleCloud& cloud, const Matrix& X, const Vector& y,
                        const ModelSpec& spec) {
  const auto b = cloud.theta.col(1);
  const auto W = cloud.theta.rightCols(spec.n_x);
  return drift_binary(cloud, tanh_caches(b, W, X), X, y);
}

GradBlocks grad_multiclass(const Matrix& Theta, const Matrix& X, const Matrix& Y_onehot,
                           const Vector& rho, const ModelSpec& spec, const Matrix* P_hint) {
  spec.check();
  const Index n_data = X.rows();
  const Index n_particles = Theta.rows();
  const Index m = spec.classes;
  if (n_data < 1) throw std::invalid_argument("grad_multiclass: empty dataset");
  if (Theta.cols() != spec.param_dim() || X.cols() != spec.n_x || Y_onehot.rows() != n_data ||
      Y_onehot.cols() != m || rho.size() != n_particles)
    throw std::invalid_argument("grad_multiclass: shape mismatch");

  std::vector<Index> label(static_cast<std::size_t>(n_data));
  for (Index i = 0; i < n_data; ++i) {
    Index ones = 0, where = 0;
    for (Index c = 0; c < m; ++c) {
      if (Y_onehot(i, c) == 1.0) {
        ++ones;
        where = c;
      } else if (Y_onehot(i, c) != 0.0) {
        throw std::invalid_argument("grad_multiclass: labels are not one-hot");
      }
    }
    if (ones != 1) throw std::invalid_argument("grad_multiclass: labels are not one-hot");
    label[static_cast<std::size_t>(i)] = where;
  }

  // P is needed for the interaction coefficients; reuse the caller's copy
  // when provided.
  Matrix P_local;
  const Matrix* P = P_hint;
  if (P == nullptr || P->rows() != n_particles || P->cols() != n_data) {
    ParticleCloud tmp;
    tmp.theta = Theta;
    tmp.rho = rho;
    P_local = build_potentials_multiclass(tmp, X, Y_onehot, spec, false).P;
    P = &P_local;
  }

  const double inv_n = 1.0 / static_cast<double>(n_data);
  const Vector p_rho = P->transpose() * rho;          // (P^T rho)_i
  const Vector p_one = P->transpose() * Vector::Ones(n_particles);  // (P^T 1)_i

  GradBlocks g;
  g.d_w.resize(n_particles, m * spec.n_x);

#pragma omp parallel for schedule(static)
  for (Index j = 0; j < n_particles; ++j) {
    Matrix logits(n_data, m);
    for (Index c = 0; c < m; ++c)
      logits.col(c).noalias() = X * Theta.row(j).segment(c * spec.n_x, spec.n_x).transpose();

    // B_i = coeff_ji * s_{c_i} (e_{c_i} - s), row per data point.
    Matrix B(n_data, m);
    for (Index i = 0; i < n_data; ++i) {
      const double zmax = logits.row(i).maxCoeff();
      Eigen::ArrayXd s = (logits.row(i).array() - zmax).exp();
      s /= s.sum();
      const Index c_i = label[static_cast<std::size_t>(i)];
      const double s_c = s(c_i);
      const double coeff = inv_n * (-2.0 + p_rho(i) + rho(j) * p_one(i));
      B.row(i) = (-coeff * s_c) * s.matrix().transpose();
      B(i, c_i) += coeff * s_c;
    }
    Matrix block = B.transpose() * X;  // m x n_x
    for (Index c = 0; c < m; ++c) g.d_w.row(j).segment(c * spec.n_x, spec.n_x) = block.row(c);
  }
  return g;
}

Vector fd_gradient(const std::function<double(const Vector&)>& f, const Vector& point,
                   double step) {
  if (!(step > 0.0)) throw std::invalid_argument("fd_gradient: step must be positive");
  Vector grad(point.size());
  Vector x = point;
  for (Index i = 0; i < point.size(); ++i) {
    const double orig = x(i);
    x(i) = orig + step;
    const double fp = f(x);
    x(i) = orig - step;
    const double fm = f(x);
    x(i) = orig;
    grad(i) = (fp - fm) / (2.0 * step);
  }
  return grad;
}

namespace {

double rel_linf(const Vector& analytic, const Vector& fd) {
  const double denom = std::max(fd.cwiseAbs().maxCoeff(), 1e-10);
  return (analytic - fd).cwiseAbs().maxCoeff() / denom;
}

// Objective value sum_k (v_k + u_k) for a flattened binary-head cloud.
double binary_objective(const Vector& flat, Index n, Index p, const Matrix& X, const Vector& y,
                        const Vector& rho) {
  const Matrix theta = Eigen::Map<const Matrix>(flat.data(), n, p);
  const Vector a = theta.col(0);
  const Vector b = theta.col(1);
  const Matrix W = theta.rightCols(p - 2);
  Matrix T = W * X.transpose();
  T.colwise() += b;
  T = T.array().tanh();
  const Matrix P = T.array().colwise() * a.array();
  const double inv_n = 1.0 / static_cast<double>(X.rows());
  const Vector v = (-2.0 * inv_n) * (P * y);
  const Vector u = inv_n * (P * (P.transpose() * rho));
  return v.sum() + u.sum();
}

double multiclass_objective(const Vector& flat, Index n, const ModelSpec& spec, const Matrix& X,
                            const Matrix& Y, const Vector& rho) {
  ParticleCloud tmp;
  tmp.theta = Eigen::Map<const Matrix>(flat.data(), n, spec.param_dim());
  tmp.rho = rho;
  const PotentialEval pe = build_potentials_multiclass(tmp, X, Y, spec, false);
  return pe.v.sum() + pe.u.sum();
}

}  // namespace

GradCheckReport gradcheck(int trials, std::uint64_t seed) {
  Rng rng(seed);
  GradCheckReport report;
  report.trials = trials;
  constexpr double kStep = 1e-6;

  for (int t = 0; t < trials; ++t) {
    const bool multiclass = (t % 4 == 3);
    if (!multiclass) {
      const Index n = 2 + static_cast<Index>(rng.uniform_below(31));       // <= 32
      const Index n_data = 1 + static_cast<Index>(rng.uniform_below(64));  // <= 64
      const Index n_x = 1 + static_cast<Index>(rng.uniform_below(16));     // <= 16
      const Index p = n_x + 2;
      Matrix theta(n, p);
      for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < p; ++j) theta(i, j) = rng.uniform(-1.5, 1.5);
      Matrix X(n_data, n_x);
      for (Index i = 0; i < n_data; ++i)
        for (Index j = 0; j < n_x; ++j) X(i, j) = rng.uniform(-1.0, 1.0);
      Vector y(n_data), rho(n);
      for (Index i = 0; i < n_data; ++i) y(i) = rng.uniform01() < 0.5 ? -1.0 : 1.0;
      rng.fill_uniform_pos(rho, 0.0, 2.0);

      const Vector a = theta.col(0), b = theta.col(1);
      const Matrix W = theta.rightCols(n_x);
      GradBlocks gv = grad_v_binary(a, b, W, X, y);
      const GradBlocks gu = grad_u_binary(a, b, W, X, rho);
      gv.d_a += gu.d_a;
      gv.d_b += gu.d_b;
      gv.d_w += gu.d_w;
      ModelSpec spec{Head::BinaryTanh, n_x, 0};
      const Matrix analytic = gv.full(spec);

      const Vector flat = Eigen::Map<const Vector>(theta.data(), theta.size());
      const Vector fd = fd_gradient(
          [&](const Vector& z) { return binary_objective(z, n, p, X, y, rho); }, flat, kStep);
      const Vector analytic_flat = Eigen::Map<const Vector>(analytic.data(), analytic.size());
      report.max_rel_err_binary = std::max(report.max_rel_err_binary, rel_linf(analytic_flat, fd));
    } else {
      const Index n = 1 + static_cast<Index>(rng.uniform_below(6));
      const Index n_data = 1 + static_cast<Index>(rng.uniform_below(10));
      const Index n_x = 1 + static_cast<Index>(rng.uniform_below(8));
      const Index m = 2 + static_cast<Index>(rng.uniform_below(9));  // <= 10
      ModelSpec spec{Head::MultiSoftmax, n_x, m};
      Matrix theta(n, spec.param_dim());
      for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < spec.param_dim(); ++j) theta(i, j) = rng.uniform(-1.0, 1.0);
      Matrix X(n_data, n_x);
      for (Index i = 0; i < n_data; ++i)
        for (Index j = 0; j < n_x; ++j) X(i, j) = rng.uniform(-1.0, 1.0);
      Matrix Y = Matrix::Zero(n_data, m);
      for (Index i = 0; i < n_data; ++i) Y(i, static_cast<Index>(rng.uniform_below(static_cast<std::uint64_t>(m)))) = 1.0;
      Vector rho(n);
      rng.fill_uniform_pos(rho, 0.0, 2.0);

      const GradBlocks g = grad_multiclass(theta, X, Y, rho, spec);
      const Vector flat = Eigen::Map<const Vector>(theta.data(), theta.size());
      const Vector fd = fd_gradient(
          [&](const Vector& z) { return multiclass_objective(z, n, spec, X, Y, rho); }, flat, kStep);
      const Vector analytic_flat = Eigen::Map<const Vector>(g.d_w.data(), g.d_w.size());
      report.max_rel_err_multiclass =
          std::max(report.max_rel_err_multiclass, rel_linf(analytic_flat, fd));
    }
  }
  return report;
}

}  // namespace pmfl
