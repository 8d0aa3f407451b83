#pragma once

#include <optional>
#include <string>
#include <vector>

#include "driftfit/core.hpp"
#include "driftfit/hom_model.hpp"

namespace driftfit {

/// Parameters of the heteroscedastic drift model
///   Y[b,v] = psi[b] + phi[b] * (kappa[v] + c) + noise_b,
///   noise pairs ~ N(0, sigma0 + sigma_tilde^2 * vec(i psi_b) vec(i psi_b)^T).
/// kappa is mean-zero and unit-norm; c is the spectrum mean.
struct HetParams {
  VectorXcd psi;
  VectorXcd phi;
  VectorXcd kappa;
  cdouble c{0.0, 0.0};
  double sigma_tilde = 0.0;
  Matrix2d sigma0 = Matrix2d::Identity();
};

/// Per-batch noise covariance; the rank-1 phase-noise part is oriented
/// orthogonal to vec(psi_b).
Spd2 batch_covariance(const HetParams& params, Eigen::Index b);

double het_loglik(const MatrixXcd& y, const HetParams& params);

/// Gradient of the log likelihood in the noise parameters
/// theta = (sigma_tilde, l11, l21, l22) where sigma0 = L L^T with lower
/// triangular L; drift parameters held fixed.
Eigen::Vector4d het_noise_gradient(const MatrixXcd& y, const HetParams& params);

struct HetFitOptions {
  int maxiter = 200;
  double min_delta_loglik = 1e-4;
  int start_c_opt = 25;    // first iteration of the spectrum-mean update
  double delta = 1e-20;    // eigenvalue floor for sigma0
  int lbfgs_max_iter = 50;
  int simplex_max_evals = 200;
  // Warm start (bootstrap refits): replaces the homoscedastic-fit seed and
  // the regression initialization of the noise parameters.
  std::optional<HetParams> warm_start;
};

struct HetFitReport {
  HetParams params;
  std::vector<double> loglik_trace;
  int n_iter = 0;
  bool converged = false;
  bool boundary_warning = false;
  std::vector<std::string> warnings;

  double loglik() const { return loglik_trace.empty() ? 0.0 : loglik_trace.back(); }
};

/// Iterative local MLE: seeded by the homoscedastic fit, noise parameters by
/// regressing per-batch residual covariances on the phase-noise outer
/// products, then an alternating loop of bounded quasi-Newton (noise),
/// closed-form generalized least squares (phi, kappa+c), per-batch simplex
/// (psi) and, after start_c_opt iterations, a re-centering step that shifts
/// mean between kappa+c and psi without changing residuals.
HetFitReport fit_het(const MatrixXcd& y, const HetFitOptions& opts = {});

/// Log likelihood of the explicit divergent parameter sequence that zeroes
/// the first batch's residuals while its covariance degenerates at rate 1/k.
/// Parametrized by log(k) so astronomically large indices stay representable.
double boundary_sequence_loglik_logk(const MatrixXcd& y, double log_k);

inline double boundary_sequence_loglik(const MatrixXcd& y, double k) {
  if (!(k >= 1.0)) throw InvalidDimension("sequence index must be >= 1");
  return boundary_sequence_loglik_logk(y, std::log(k));
}

/// log(k*) such that the divergent sequence first reaches the given fitted
/// log likelihood.  A fitted interior optimum sits far below the boundary,
/// so log(k*) is typically huge.
double boundary_kstar_log(double loglik_fit, const MatrixXcd& y);

/// Size comparison justifying the linearized phase-noise covariance:
/// smallest marginal variance of sigma0 along the psi_b directions versus
/// the largest neglected quadratic term.
struct TruncationCheck {
  double min_marginal = 0.0;
  double max_quadratic = 0.0;
  double ratio = 0.0;  // min_marginal / max_quadratic (inf when the latter is 0)
};

TruncationCheck truncation_check(const HetParams& params);

}  // namespace driftfit
