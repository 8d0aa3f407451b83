#include "driftfit/core.hpp"

namespace driftfit {

Matrix2d clamp_spd(const Matrix2d& m, double floor_rel) {
  const Matrix2d sym = 0.5 * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix2d> es(sym);
  const double tr = std::abs(sym.trace());
  const double floor = floor_rel * (tr > 0 ? tr : 1.0);
  Vector2d lam = es.eigenvalues().cwiseMax(floor);
  return es.eigenvectors() * lam.asDiagonal() * es.eigenvectors().transpose();
}

namespace {
inline void check_equal_length(const VectorXcd& z, const VectorXcd& w) {
  if (z.size() != w.size())
    throw DimensionMismatch("vectors have lengths " + std::to_string(z.size()) + " and " +
                            std::to_string(w.size()));
}
}  // namespace

Matrix2d pair_matrix(const VectorXcd& z, const Matrix2d& A, const VectorXcd& w) {
  check_equal_length(z, w);
  // mat_of(z)^T A mat_of(w) expanded entrywise; one pass over the entries.
  const double a = A(0, 0), b = A(0, 1), c = A(1, 0), d = A(1, 1);
  double m00 = 0, m01 = 0, m10 = 0, m11 = 0;
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    const double x = z[i].real(), y = z[i].imag();
    const double u = w[i].real(), v = w[i].imag();
    // rows of mat_of(z)^T are (x, y) and (-y, x); columns of mat_of(w) are
    // (u, v) and (-v, u).
    const double Au0 = a * u + b * v, Av0 = c * u + d * v;    // A * col0(w)
    const double Au1 = -a * v + b * u, Av1 = -c * v + d * u;  // A * col1(w)
    m00 += x * Au0 + y * Av0;
    m01 += x * Au1 + y * Av1;
    m10 += -y * Au0 + x * Av0;
    m11 += -y * Au1 + x * Av1;
  }
  Matrix2d out;
  out << m00, m01, m10, m11;
  return out;
}

Vector2d pair_vector(const VectorXcd& z, const Matrix2d& A, const VectorXcd& w) {
  check_equal_length(z, w);
  const double a = A(0, 0), b = A(0, 1), c = A(1, 0), d = A(1, 1);
  double r0 = 0, r1 = 0;
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    const double x = z[i].real(), y = z[i].imag();
    const double u = w[i].real(), v = w[i].imag();
    const double Au = a * u + b * v, Av = c * u + d * v;
    r0 += x * Au + y * Av;
    r1 += -y * Au + x * Av;
  }
  return {r0, r1};
}

double mahal_inner(const VectorXcd& z, const Matrix2d& A, const VectorXcd& w) {
  check_equal_length(z, w);
  const double a = A(0, 0), b = A(0, 1), c = A(1, 0), d = A(1, 1);
  double s = 0;
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    const double x = z[i].real(), y = z[i].imag();
    const double u = w[i].real(), v = w[i].imag();
    s += x * (a * u + b * v) + y * (c * u + d * v);
  }
  return s;
}

double mahal_dist(const VectorXcd& z, const Matrix2d& A, const VectorXcd& w) {
  check_equal_length(z, w);
  const VectorXcd diff = z - w;
  return std::sqrt(std::max(0.0, mahal_inner(diff, A, diff)));
}

double proj_distance(const ProjectivePoint& a, const ProjectivePoint& b) {
  if (a.dim() != b.dim()) throw DimensionMismatch("projective points of unequal dimension");
  const cdouble ip = b.rep().dot(a.rep());  // b^* a
  const double m = std::abs(ip);
  if (m == 0.0) return (a.rep() - b.rep()).norm();
  const VectorXcd rotated = (ip / m) * b.rep();
  return (a.rep() - rotated).norm();
}

ProjectivePoint optimal_position(const ProjectivePoint& a, const ProjectivePoint& b) {
  if (a.dim() != b.dim()) throw DimensionMismatch("projective points of unequal dimension");
  const cdouble ip = b.rep().dot(a.rep());  // b^* a
  const double m = std::abs(ip);
  if (m == 0.0) return b;
  return ProjectivePoint((ip / m) * b.rep());
}

}  // namespace driftfit
