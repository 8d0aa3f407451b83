#include "driftfit/phase_extraction.hpp"

namespace driftfit {

namespace {

constexpr double kTwoPi = 2.0 * M_PI;
constexpr double kDegenTol = 1e-12;
constexpr double kWarnTol = 1e-8;

double wrap_2pi(double x) {
  double y = std::fmod(x, kTwoPi);
  if (y < 0) y += kTwoPi;
  return y;
}

/// Complex argument in [0, 2*pi).
double arg_2pi(cdouble z) { return wrap_2pi(std::arg(z)); }

}  // namespace

MaxMethodPhases max_method_lambda(const VectorXcd& kappa) {
  const cdouble s = (kappa.transpose() * kappa)(0);  // plain transpose, no conjugation
  MaxMethodPhases out;
  if (std::abs(s) < kDegenTol * kappa.squaredNorm()) {
    out.all_phases = true;
    return out;
  }
  const double alpha = arg_2pi(s);
  out.lambda_a = wrap_2pi(M_PI - alpha / 2.0);
  out.lambda_b = wrap_2pi(kTwoPi - alpha / 2.0);
  return out;
}

SpectrumResult extract_spectrum(const VectorXcd& kappa) {
  const Eigen::Index n = kappa.size();
  if (n < 1) throw InvalidDimension("empty direction");
  const double nrm2 = kappa.squaredNorm();
  const cdouble s = (kappa.transpose() * kappa)(0);

  SpectrumResult res;
  res.near_m1 = std::abs(s) < kWarnTol * nrm2;
  if (std::abs(s) < kDegenTol * nrm2)
    throw PhaseDegenerate("kappa^T kappa vanishes; no distinguished phase exists");

  const double alpha = arg_2pi(s);
  double lambda = wrap_2pi(-alpha / 2.0);
  VectorXcd rotated = std::exp(cdouble(0, lambda)) * kappa;
  VectorXd I = rotated.real();
  VectorXd omega = rotated.imag();

  const double hi = std::abs(I.maxCoeff());
  const double lo = std::abs(I.minCoeff());
  res.near_m2 = std::abs(hi - lo) < kWarnTol;
  if (std::abs(hi - lo) < kDegenTol)
    throw SignDegenerate("spectrum max and min magnitudes coincide; sign flip undefined");

  if (hi < lo) {
    I = -I;
    omega = -omega;
    lambda = wrap_2pi(lambda + M_PI);
    res.flipped = true;
  }
  res.I = std::move(I);
  res.omega = std::move(omega);
  res.lambda_opt = lambda;
  return res;
}

MatrixXcd unitary_to_last_axis(const VectorXcd& u) {
  const Eigen::Index n = u.size();
  if (n < 1) throw InvalidDimension("empty vector");
  const cdouble last = u[n - 1];
  const cdouble alpha = (std::abs(last) > 0) ? -last / std::abs(last) : cdouble(1, 0);
  VectorXcd v = u;
  v[n - 1] -= alpha;
  const double vv = v.squaredNorm();
  MatrixXcd h = MatrixXcd::Identity(n, n);
  if (vv > 1e-30) h -= (2.0 / vv) * (v * v.adjoint());
  // h * u = alpha * e_last; absorb the leftover phase in the last row.
  h.row(n - 1) *= std::conj(alpha);
  return h;
}

MatrixXcd chart_pattern_matrix(Eigen::Index n) {
  if (n < 2) throw InvalidDimension("pattern matrix needs dimension >= 2");
  MatrixXcd a = MatrixXcd::Zero(n, 2 * (n - 1));
  for (Eigen::Index j = 0; j + 1 < n; ++j) {
    a(j, 2 * j) = cdouble(1, 0);
    a(j, 2 * j + 1) = cdouble(0, 1);
  }
  return a;
}

MatrixXd spectrum_jacobian(const VectorXcd& kappa0) {
  const Eigen::Index n = kappa0.size();
  if (n < 2) throw InvalidDimension("spectrum jacobian needs dimension >= 2");
  VectorXcd k = kappa0;
  const double nrm = k.norm();
  if (!(nrm > 0)) throw ZeroDirection("zero direction");
  k /= nrm;

  const cdouble s = (k.transpose() * k)(0);
  const double r = std::abs(s);
  if (r < kDegenTol) throw SingularityError("anchor lies on the phase-degenerate set");
  const double alpha = arg_2pi(s);

  // Sign of the flip the extraction applies at the anchor.
  const VectorXd I0 = (std::exp(cdouble(0, -alpha / 2.0)) * k).real();
  const double hi = std::abs(I0.maxCoeff());
  const double lo = std::abs(I0.minCoeff());
  if (std::abs(hi - lo) < kDegenTol)
    throw SingularityError("anchor lies on the sign-degenerate set");
  const double sign = (hi > lo) ? 1.0 : -1.0;

  const MatrixXcd R = unitary_to_last_axis(k);
  const MatrixXcd RA = R.adjoint() * chart_pattern_matrix(n);  // N x 2(N-1)

  // Derivative of the phase correction (a real row) plus the derivative of
  // the chart representative.
  const Eigen::RowVectorXcd row = (cdouble(0, 1) * std::conj(s) / (r * r)) *
                                  (k.transpose() * RA);
  const Eigen::RowVectorXd w = row.real();
  const MatrixXcd inner = cdouble(0, 1) * (k * w.cast<cdouble>()) + RA;
  return sign * (std::exp(cdouble(0, -alpha / 2.0)) * inner).real();
}

}  // namespace driftfit
