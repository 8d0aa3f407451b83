#pragma once

#include "driftfit/core.hpp"

namespace driftfit {

/// Orthonormal contrast basis removing the mean direction: N rows of length
/// N+1, each summing to zero, with H * H^T = Id_N.
class HelmertBasis {
 public:
  explicit HelmertBasis(Eigen::Index n_plus_1);

  const MatrixXd& matrix() const { return h_; }
  Eigen::Index rows() const { return h_.rows(); }
  Eigen::Index cols() const { return h_.cols(); }

  /// Contrast coordinates of a complex vector (length drops by one).
  VectorXcd apply(const VectorXcd& v) const;

  /// Row-wise contrast coordinates of a batch-by-frequency matrix.
  MatrixXcd apply(const MatrixXcd& y) const;

  /// Right inverse on the mean-zero subspace: pads back to length N+1.
  VectorXcd invert(const VectorXcd& v) const;
  MatrixXcd invert(const MatrixXcd& y) const;

 private:
  MatrixXd h_;
};

inline HelmertBasis helmert_matrix(Eigen::Index n_plus_1) { return HelmertBasis(n_plus_1); }

inline VectorXcd helmertize(const VectorXcd& v) {
  return HelmertBasis(v.size()).apply(v);
}
inline MatrixXcd helmertize(const MatrixXcd& y) {
  return HelmertBasis(y.cols()).apply(y);
}

}  // namespace driftfit
