#pragma once

#include "pmfl/cloud.hpp"
#include "pmfl/types.hpp"

#include <string>

namespace pmfl {

enum class Head { BinaryTanh, MultiSoftmax };

/// Which parameterized feature map the particles carry.
///
/// BinaryTanh:   phi(x, theta) = a * tanh(<w, x> + b), per-particle layout
///               (a, b, w_1..w_nx), p = n_x + 2.
/// MultiSoftmax: phi(x, y, theta) = <softmax(theta x), y_onehot>, theta is a
///               row-major m x n_x block per particle, p = m * n_x.
struct ModelSpec {
  Head head = Head::BinaryTanh;
  Index n_x = 1;
  Index classes = 0;  // m, only for MultiSoftmax

  Index param_dim() const { return head == Head::BinaryTanh ? n_x + 2 : classes * n_x; }
  std::string tag() const;

  void check() const;
};

ModelSpec parse_model_tag(const std::string& tag);

double phi_binary(const Eigen::Ref<const Vector>& theta_i, const Eigen::Ref<const Vector>& x);

// y_onehot must have exactly one entry equal to 1 and the rest 0.
double phi_multiclass(const Eigen::Ref<const Matrix>& theta_i, const Eigen::Ref<const Vector>& x,
                      const Eigen::Ref<const Vector>& y_onehot);

/// Potential evaluations at the current cloud: P(i,j) = phi at particle i and
/// data point j, drift vector v, interaction kernel U = P P^T / n_data and the
/// interaction field u = U rho. When materialize_interaction is off, U stays
/// empty and u is formed as P (P^T rho) / n_data, which avoids the N x N
/// product in the training loop.
struct PotentialEval {
  Matrix P;  // N x n_data
  Vector v;  // N
  Matrix U;  // N x N, empty in the lean mode
  Vector u;  // N
};

// Binary head; y holds the signed labels.
PotentialEval build_potentials(const ParticleCloud& cloud, const Matrix& X, const Vector& y,
                               const ModelSpec& spec, bool materialize_interaction = true);

// Multi-class head; Y_onehot is n_data x m.
PotentialEval build_potentials_multiclass(const ParticleCloud& cloud, const Matrix& X,
                                          const Matrix& Y_onehot, const ModelSpec& spec,
                                          bool materialize_interaction = true);

// (1/n) * || targets - P^T rho ||^2. With normalize set, rho is replaced by
// rho / sum(rho) first (self-normalized mode); otherwise raw rho is used.
double risk_weighted(const Matrix& P_eval, const Vector& rho, const Vector& targets,
                     bool normalize);

// (1/n) * || targets - (1/N) P^T 1 ||^2.
double risk_unweighted(const Matrix& P_eval, const Vector& targets);

enum class EstimateMode { Weighted, Unweighted };

struct PredictionReport {
  std::vector<int> predicted;      // binary: -1/+1; multi-class: class index
  Eigen::MatrixXi confusion;       // rows = actual, cols = predicted
  double accuracy = 0.0;
};

/// Binary: label = sign of the mean-field estimate (zero goes to the lower
/// class, -1). Multi-class: argmax of the aggregated logits X_test Theta^T,
/// ties broken by lowest class index. y_test holds signed labels (binary) or
/// class indices (multi-class).
PredictionReport predict(const ParticleCloud& cloud, const Matrix& X_test, const Vector& y_test,
                         const ModelSpec& spec, EstimateMode mode, bool normalize = true);

}  // namespace pmfl
