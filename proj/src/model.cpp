#include "pmfl/model.hpp"

#include <algorithm>
#include <cmath>

namespace pmfl {

void ModelSpec::check() const {
  if (n_x < 1) throw ConfigError("model: n_x must be >= 1");
  if (head == Head::MultiSoftmax && classes < 2)
    throw ConfigError("model: multi-class head needs at least 2 classes");
}

std::string ModelSpec::tag() const {
  if (head == Head::BinaryTanh) return "binary_tanh:nx=" + std::to_string(n_x);
  return "multi_softmax:m=" + std::to_string(classes) + ":nx=" + std::to_string(n_x);
}

ModelSpec parse_model_tag(const std::string& tag) {
  ModelSpec spec;
  auto field = [&](const std::string& key) -> Index {
    auto pos = tag.find(key + "=");
    if (pos == std::string::npos) throw ConfigError("model tag '" + tag + "' lacks " + key);
    return static_cast<Index>(std::stoll(tag.substr(pos + key.size() + 1)));
  };
  if (tag.rfind("binary_tanh", 0) == 0) {
    spec.head = Head::BinaryTanh;
    spec.n_x = field("nx");
  } else if (tag.rfind("multi_softmax", 0) == 0) {
    spec.head = Head::MultiSoftmax;
    spec.classes = field("m");
    spec.n_x = field("nx");
  } else {
    throw ConfigError("unknown model tag '" + tag + "'");
  }
  spec.check();
  return spec;
}

double phi_binary(const Eigen::Ref<const Vector>& theta_i, const Eigen::Ref<const Vector>& x) {
  const Index n_x = x.size();
  if (theta_i.size() != n_x + 2) throw std::invalid_argument("phi_binary: layout mismatch");
  const double a = theta_i(0);
  const double b = theta_i(1);
  return a * std::tanh(theta_i.tail(n_x).dot(x) + b);
}

namespace {

// Row-stable softmax of z, in place.
void softmax_inplace(Vector& z) {
  const double zmax = z.maxCoeff();
  z = (z.array() - zmax).exp();
  z /= z.sum();
}

void check_onehot(const Eigen::Ref<const Vector>& y) {
  Index ones = 0;
  for (Index c = 0; c < y.size(); ++c) {
    if (y(c) == 1.0)
      ++ones;
    else if (y(c) != 0.0)
      throw std::invalid_argument("phi_multiclass: label vector is not one-hot");
  }
  if (ones != 1) throw std::invalid_argument("phi_multiclass: label vector is not one-hot");
}

}  // namespace

double phi_multiclass(const Eigen::Ref<const Matrix>& theta_i, const Eigen::Ref<const Vector>& x,
                      const Eigen::Ref<const Vector>& y_onehot) {
  if (theta_i.cols() != x.size() || theta_i.rows() != y_onehot.size())
    throw std::invalid_argument("phi_multiclass: shape mismatch");
  check_onehot(y_onehot);
  Vector s = theta_i * x;
  softmax_inplace(s);
  return s.dot(y_onehot);
}

namespace {

void finish_potentials(PotentialEval& pe, const Vector& rho, Index n_data,
                       bool materialize_interaction) {
  const double inv_n = 1.0 / static_cast<double>(n_data);
  if (materialize_interaction) {
    pe.U.noalias() = inv_n * (pe.P * pe.P.transpose());
    pe.u.noalias() = pe.U * rho;
  } else {
    const Vector pr = pe.P.transpose() * rho;
    pe.u.noalias() = inv_n * (pe.P * pr);
  }
}

}  // namespace

PotentialEval build_potentials(const ParticleCloud& cloud, const Matrix& X, const Vector& y,
                               const ModelSpec& spec, bool materialize_interaction) {
  spec.check();
  if (spec.head != Head::BinaryTanh) throw std::invalid_argument("build_potentials: binary head expected");
  const Index n_data = X.rows();
  if (n_data < 1) throw std::invalid_argument("build_potentials: empty dataset");
  if (X.cols() != spec.n_x || y.size() != n_data || cloud.dim() != spec.param_dim())
    throw std::invalid_argument("build_potentials: shape mismatch");

  const auto a = cloud.theta.col(0);
  const auto b = cloud.theta.col(1);
  const auto W = cloud.theta.rightCols(spec.n_x);

  PotentialEval pe;
  pe.P.noalias() = W * X.transpose();
  pe.P.colwise() += b;
  pe.P = pe.P.array().tanh();
  pe.P.array().colwise() *= a.array();

  const double inv_n = 1.0 / static_cast<double>(n_data);
  pe.v.noalias() = (-2.0 * inv_n) * (pe.P * y);
  finish_potentials(pe, cloud.rho, n_data, materialize_interaction);
  return pe;
}

PotentialEval build_potentials_multiclass(const ParticleCloud& cloud, const Matrix& X,
                                          const Matrix& Y_onehot, const ModelSpec& spec,
                                          bool materialize_interaction) {
  spec.check();
  if (spec.head != Head::MultiSoftmax)
    throw std::invalid_argument("build_potentials_multiclass: multi-class head expected");
  const Index n_data = X.rows();
  const Index m = spec.classes;
  if (n_data < 1) throw std::invalid_argument("build_potentials_multiclass: empty dataset");
  if (X.cols() != spec.n_x || Y_onehot.rows() != n_data || Y_onehot.cols() != m ||
      cloud.dim() != spec.param_dim())
    throw std::invalid_argument("build_potentials_multiclass: shape mismatch");

  // Class index per data point, validated once.
  std::vector<Index> label(static_cast<std::size_t>(n_data));
  for (Index i = 0; i < n_data; ++i) {
    Index ones = 0, where = 0;
    for (Index c = 0; c < m; ++c) {
      if (Y_onehot(i, c) == 1.0) {
        ++ones;
        where = c;
      } else if (Y_onehot(i, c) != 0.0) {
        throw std::invalid_argument("build_potentials_multiclass: row " + std::to_string(i) +
                                    " is not one-hot");
      }
    }
    if (ones != 1)
      throw std::invalid_argument("build_potentials_multiclass: row " + std::to_string(i) +
                                  " is not one-hot");
    label[static_cast<std::size_t>(i)] = where;
  }

  const Index n_particles = cloud.num_particles();
  PotentialEval pe;
  pe.P.resize(n_particles, n_data);

#pragma omp parallel for schedule(static)
  for (Index j = 0; j < n_particles; ++j) {
    // Row-major per-particle block: logits for all data points at once.
    Matrix logits(n_data, m);
    for (Index c = 0; c < m; ++c) {
      logits.col(c).noalias() = X * cloud.theta.row(j).segment(c * spec.n_x, spec.n_x).transpose();
    }
    for (Index i = 0; i < n_data; ++i) {
      const double zmax = logits.row(i).maxCoeff();
      const Eigen::ArrayXd e = (logits.row(i).array() - zmax).exp();
      pe.P(j, i) = e(label[static_cast<std::size_t>(i)]) / e.sum();
    }
  }

  const double inv_n = 1.0 / static_cast<double>(n_data);
  pe.v.noalias() = (-2.0 * inv_n) * pe.P.rowwise().sum();
  finish_potentials(pe, cloud.rho, n_data, materialize_interaction);
  return pe;
}

double risk_weighted(const Matrix& P_eval, const Vector& rho, const Vector& targets,
                     bool normalize) {
  if (P_eval.rows() != rho.size() || P_eval.cols() != targets.size())
    throw std::invalid_argument("risk_weighted: shape mismatch");
  Vector est = P_eval.transpose() * rho;
  if (normalize) est /= rho.sum();
  return (targets - est).squaredNorm() / static_cast<double>(targets.size());
}

double risk_unweighted(const Matrix& P_eval, const Vector& targets) {
  if (P_eval.cols() != targets.size()) throw std::invalid_argument("risk_unweighted: shape mismatch");
  const Vector est = P_eval.transpose() * Vector::Ones(P_eval.rows()) /
                     static_cast<double>(P_eval.rows());
  return (targets - est).squaredNorm() / static_cast<double>(targets.size());
}

PredictionReport predict(const ParticleCloud& cloud, const Matrix& X_test, const Vector& y_test,
                         const ModelSpec& spec, EstimateMode mode, bool normalize) {
  spec.check();
  const Index n_test = X_test.rows();
  if (n_test < 1) throw std::invalid_argument("predict: empty test set");
  if (y_test.size() != n_test || X_test.cols() != spec.n_x)
    throw std::invalid_argument("predict: shape mismatch");

  const Index n_particles = cloud.num_particles();
  Vector weights;
  if (mode == EstimateMode::Weighted) {
    weights = normalize ? Vector(cloud.rho / cloud.rho.sum()) : cloud.rho;
  } else {
    weights = Vector::Constant(n_particles, 1.0 / static_cast<double>(n_particles));
  }

  PredictionReport report;
  report.predicted.resize(static_cast<std::size_t>(n_test));

  if (spec.head == Head::BinaryTanh) {
    const auto a = cloud.theta.col(0);
    const auto b = cloud.theta.col(1);
    const auto W = cloud.theta.rightCols(spec.n_x);
    Matrix T = W * X_test.transpose();
    T.colwise() += b;
    T = T.array().tanh();
    T.array().colwise() *= a.array();
    const Vector est = T.transpose() * weights;

    report.confusion = Eigen::MatrixXi::Zero(2, 2);
    Index hits = 0;
    for (Index i = 0; i < n_test; ++i) {
      const int pred = est(i) > 0.0 ? 1 : -1;
      report.predicted[static_cast<std::size_t>(i)] = pred;
      const int actual = y_test(i) > 0.0 ? 1 : -1;
      report.confusion(actual > 0 ? 1 : 0, pred > 0 ? 1 : 0) += 1;
      if (pred == actual) ++hits;
    }
    report.accuracy = static_cast<double>(hits) / static_cast<double>(n_test);
    return report;
  }

  const Index m = spec.classes;
  // Aggregated logits: sum_j weights_j * (X_test Wj^T).
  Matrix mean_logits = Matrix::Zero(n_test, m);
  for (Index j = 0; j < n_particles; ++j) {
    for (Index c = 0; c < m; ++c) {
      mean_logits.col(c).noalias() +=
          weights(j) * (X_test * cloud.theta.row(j).segment(c * spec.n_x, spec.n_x).transpose());
    }
  }

  report.confusion = Eigen::MatrixXi::Zero(static_cast<int>(m), static_cast<int>(m));
  Index hits = 0;
  for (Index i = 0; i < n_test; ++i) {
    Index best = 0;
    for (Index c = 1; c < m; ++c)
      if (mean_logits(i, c) > mean_logits(i, best)) best = c;  // ties keep the lowest index
    report.predicted[static_cast<std::size_t>(i)] = static_cast<int>(best);
    const Index actual = static_cast<Index>(y_test(i));
    if (actual < 0 || actual >= m) throw std::invalid_argument("predict: label out of range");
    report.confusion(static_cast<int>(actual), static_cast<int>(best)) += 1;
    if (best == actual) ++hits;
  }
  report.accuracy = static_cast<double>(hits) / static_cast<double>(n_test);
  return report;
}

}  // namespace pmfl
