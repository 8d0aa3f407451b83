#pragma once

#include <Eigen/Core>
#include <Eigen/Eigenvalues>
#include <complex>

#include "driftfit/errors.hpp"

namespace driftfit {

using cdouble = std::complex<double>;
using Eigen::Matrix2d;
using Eigen::MatrixXcd;
using Eigen::MatrixXd;
using Eigen::Vector2d;
using Eigen::VectorXcd;
using Eigen::VectorXd;

// ---------------------------------------------------------------------------
// Real views of complex scalars and vectors.
// std::complex<double> is laid out as (re, im), so the vector maps below are
// reinterpretations of the same storage, not copies.
// ---------------------------------------------------------------------------

inline Vector2d vec_of(cdouble z) { return {z.real(), z.imag()}; }

/// 2x2 rotation-scaling matrix of a complex scalar: multiplication by z on C
/// acts on (re, im) pairs as this matrix.
inline Matrix2d mat_of(cdouble z) {
  Matrix2d m;
  m << z.real(), -z.imag(), z.imag(), z.real();
  return m;
}

inline cdouble comp_of(const Vector2d& v) { return {v[0], v[1]}; }

/// Interleaved (re, im) view of a complex vector, as a const Eigen map.
inline Eigen::Map<const VectorXd> real_view(const VectorXcd& z) {
  return {reinterpret_cast<const double*>(z.data()), 2 * z.size()};
}

inline VectorXd vec_of(const VectorXcd& z) { return real_view(z); }

inline VectorXcd comp_of_vec(const VectorXd& v) {
  if (v.size() % 2 != 0) throw DimensionMismatch("interleaved vector must have even length");
  VectorXcd z(v.size() / 2);
  for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = cdouble(v[2 * i], v[2 * i + 1]);
  return z;
}

// ---------------------------------------------------------------------------
// Symmetric positive definite 2x2 matrices (covariances and precisions).
// ---------------------------------------------------------------------------

class Spd2 {
 public:
  /// Validates symmetry (1e-12 relative) and positive definiteness
  /// (eigenvalues above 1e-14 * trace).
  explicit Spd2(const Matrix2d& m) : m_(0.5 * (m + m.transpose())) {
    const double scale = m.cwiseAbs().maxCoeff();
    if (!(m.array().isFinite().all()))
      throw SingularSigma("non-finite entries in 2x2 covariance");
    if (std::abs(m(0, 1) - m(1, 0)) > 1e-12 * (scale > 0 ? scale : 1.0))
      throw SingularSigma("2x2 matrix is not symmetric");
    Eigen::SelfAdjointEigenSolver<Matrix2d> es(m_);
    lam_hi_ = es.eigenvalues()[1];
    lam_lo_ = es.eigenvalues()[0];
    rot_ = es.eigenvectors();
    if (!(lam_lo_ > 1e-14 * m_.trace()))
      throw SingularSigma("2x2 matrix is numerically singular or indefinite");
  }

  static Spd2 identity() { return Spd2(Matrix2d::Identity()); }

  const Matrix2d& matrix() const { return m_; }
  double lambda_max() const { return lam_hi_; }
  double lambda_min() const { return lam_lo_; }
  /// Orthogonal eigenvector matrix, columns ordered (min, max).
  const Matrix2d& eigvecs() const { return rot_; }

  Spd2 inverse() const {
    return Spd2(rot_ * Vector2d(1.0 / lam_lo_, 1.0 / lam_hi_).asDiagonal() * rot_.transpose());
  }

  /// Same eigenvectors with the two eigenvalues exchanged.
  Spd2 eigen_swapped() const {
    return Spd2(rot_ * Vector2d(lam_hi_, lam_lo_).asDiagonal() * rot_.transpose());
  }

  Spd2 sqrt() const {
    return Spd2(rot_ * Vector2d(std::sqrt(lam_lo_), std::sqrt(lam_hi_)).asDiagonal() *
                rot_.transpose());
  }

  Spd2 inv_sqrt() const {
    return Spd2(rot_ * Vector2d(1.0 / std::sqrt(lam_lo_), 1.0 / std::sqrt(lam_hi_)).asDiagonal() *
                rot_.transpose());
  }

  double det() const { return lam_lo_ * lam_hi_; }
  double log_det() const { return std::log(lam_lo_) + std::log(lam_hi_); }

 private:
  Matrix2d m_;
  Matrix2d rot_;
  double lam_hi_ = 0.0, lam_lo_ = 0.0;
};

/// Projects a symmetric matrix to the SPD cone by clamping eigenvalues from
/// below at floor_rel * trace (with an absolute fallback for zero trace).
Matrix2d clamp_spd(const Matrix2d& m, double floor_rel = 1e-12);

// ---------------------------------------------------------------------------
// Weighted pairings of complex vectors through their 2x2 representations.
// ---------------------------------------------------------------------------

/// sum_i mat_of(z_i)^T * A * mat_of(w_i)
Matrix2d pair_matrix(const VectorXcd& z, const Matrix2d& A, const VectorXcd& w);

/// sum_i mat_of(z_i)^T * A * vec_of(w_i)
Vector2d pair_vector(const VectorXcd& z, const Matrix2d& A, const VectorXcd& w);

/// sum_i vec_of(z_i)^T * A * vec_of(w_i)
double mahal_inner(const VectorXcd& z, const Matrix2d& A, const VectorXcd& w);

inline double mahal_norm2(const VectorXcd& z, const Matrix2d& A) {
  return mahal_inner(z, A, z);
}

double mahal_dist(const VectorXcd& z, const Matrix2d& A, const VectorXcd& w);

// Overloads taking the validated SPD type.
inline Matrix2d pair_matrix(const VectorXcd& z, const Spd2& A, const VectorXcd& w) {
  return pair_matrix(z, A.matrix(), w);
}
inline Vector2d pair_vector(const VectorXcd& z, const Spd2& A, const VectorXcd& w) {
  return pair_vector(z, A.matrix(), w);
}
inline double mahal_inner(const VectorXcd& z, const Spd2& A, const VectorXcd& w) {
  return mahal_inner(z, A.matrix(), w);
}
inline double mahal_dist(const VectorXcd& z, const Spd2& A, const VectorXcd& w) {
  return mahal_dist(z, A.matrix(), w);
}

// ---------------------------------------------------------------------------
// Complex projective space: unit vectors modulo a global phase.
// ---------------------------------------------------------------------------

class ProjectivePoint {
 public:
  /// Stores a unit-norm representative; the class is invariant under
  /// rep -> exp(i*phase) * rep.
  explicit ProjectivePoint(const VectorXcd& rep) : rep_(rep) {
    if (rep.size() < 1) throw InvalidDimension("projective point needs dimension >= 1");
    const double n = rep_.norm();
    if (!(std::abs(n - 1.0) <= 1e-12)) {
      if (n <= 0.0 || !std::isfinite(n)) throw ZeroDirection("cannot normalize zero direction");
      rep_ /= n;
    }
  }

  const VectorXcd& rep() const { return rep_; }
  Eigen::Index dim() const { return rep_.size(); }

 private:
  VectorXcd rep_;
};

/// Chordal quotient distance min_phase || a - exp(i*phase) * b ||.
double proj_distance(const ProjectivePoint& a, const ProjectivePoint& b);

/// Rotates b so that || a - b_rot || equals proj_distance(a, b); the inner
/// product b_rot^* a is then real and nonnegative.  If a and b are
/// orthogonal, b is already optimally positioned and is returned unchanged.
ProjectivePoint optimal_position(const ProjectivePoint& a, const ProjectivePoint& b);

}  // namespace driftfit
