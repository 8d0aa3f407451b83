#pragma once

#include <optional>
#include <string>
#include <vector>

#include "driftfit/core.hpp"

namespace driftfit {

/// Parameters of the homoscedastic drift model
///   Y[b,v] = psi[b] + phi[b] * kappa[v] + noise,  noise pairs ~ N(0, sigma).
/// kappa is mean-zero and unit-norm.
struct HomParams {
  VectorXcd psi;
  VectorXcd phi;
  VectorXcd kappa;
  Matrix2d sigma = Matrix2d::Identity();
};

struct FitOptions {
  int maxiter = 200;
  double min_delta_loglik = 1e-4;
  std::optional<Matrix2d> sigma_known;  // skip the covariance update when set
  // Warm start (bootstrap refits): replaces the SVD initialization.
  std::optional<VectorXcd> init_phi;
  std::optional<VectorXcd> init_kappa;
  std::optional<Matrix2d> init_sigma;
};

struct FitReport {
  HomParams params;
  std::vector<double> loglik_trace;
  int n_iter = 0;
  bool converged = false;
  std::vector<std::string> warnings;

  double loglik() const { return loglik_trace.empty() ? 0.0 : loglik_trace.back(); }
};

/// Log likelihood of centered data under (phi, kappa, sigma); psi in params
/// is ignored (the data are assumed centered already).
double hom_loglik(const MatrixXcd& yc, const HomParams& params);

/// Conditional maximizers, each in its own block with the others held fixed.
VectorXcd kappa_mle(const VectorXcd& phi, const Spd2& precision, const MatrixXcd& yc);
VectorXcd phi_mle(const VectorXcd& kappa, const Spd2& precision, const MatrixXcd& yc);
Matrix2d sigma_mle(const VectorXcd& phi, const VectorXcd& kappa, const MatrixXcd& yc);

/// Iterative maximum likelihood fit: center rows, initialize from the rank-1
/// SVD of the centered matrix, then alternate the conditional updates
/// (sigma, phi, kappa, renormalize) until the likelihood gain drops below
/// min_delta_loglik.
FitReport fit_hom(const MatrixXcd& y, const FitOptions& opts = {});

/// Alternating fit on already-centered data with a fixed, known precision:
/// the sample objective of the quotient-space estimation problem.  Returns a
/// unit-norm kappa (no mean-zero constraint; the caller controls the basis).
VectorXcd fit_centered_known_precision(const MatrixXcd& yc, const Spd2& precision,
                                       int maxiter = 200, double tol = 1e-10);

/// Rotate kappa so its largest-modulus entry is real positive, compensating
/// in phi (and c when present).  Serialization gauge only.
void fix_phase_gauge(VectorXcd& kappa, VectorXcd& phi);

}  // namespace driftfit
