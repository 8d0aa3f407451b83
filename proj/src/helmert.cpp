#include "driftfit/helmert.hpp"

namespace driftfit {

HelmertBasis::HelmertBasis(Eigen::Index n_plus_1) {
  if (n_plus_1 < 2) throw InvalidDimension("Helmert basis needs at least 2 coordinates");
  const Eigen::Index n = n_plus_1 - 1;
  h_ = MatrixXd::Zero(n, n_plus_1);
  for (Eigen::Index j = 1; j <= n; ++j) {
    const double s = 1.0 / std::sqrt(static_cast<double>(j) * (j + 1));
    for (Eigen::Index k = 0; k < j; ++k) h_(j - 1, k) = s;
    h_(j - 1, j) = -s * static_cast<double>(j);
  }
}

VectorXcd HelmertBasis::apply(const VectorXcd& v) const {
  if (v.size() != cols()) throw InvalidDimension("vector length does not match basis");
  return h_.cast<cdouble>() * v;
}

MatrixXcd HelmertBasis::apply(const MatrixXcd& y) const {
  if (y.cols() != cols()) throw InvalidDimension("matrix width does not match basis");
  return y * h_.transpose().cast<cdouble>();
}

VectorXcd HelmertBasis::invert(const VectorXcd& v) const {
  if (v.size() != rows()) throw InvalidDimension("vector length does not match basis");
  return h_.transpose().cast<cdouble>() * v;
}

MatrixXcd HelmertBasis::invert(const MatrixXcd& y) const {
  if (y.cols() != rows()) throw InvalidDimension("matrix width does not match basis");
  return y * h_.cast<cdouble>();
}

}  // namespace driftfit
