#pragma once

#include <utility>
#include <vector>

#include "driftfit/core.hpp"
#include "driftfit/rng.hpp"

namespace driftfit {

// All operations here work on centered data in the contrast basis: vectors of
// length N whose noise pairs are i.i.d. bivariate normal.

/// Loss of a single observation against a candidate direction: squared
/// weighted distance between y and its best scalar-multiple-of-kappa fit.
/// Invariant under the representative phase of kappa.
double profile_loss(const VectorXcd& y, const ProjectivePoint& kappa, const Spd2& precision);

/// Same value through the definition (explicit residual), used as an
/// independent algebraic route in tests.
double profile_loss_direct(const VectorXcd& y, const ProjectivePoint& kappa,
                           const Spd2& precision);

/// Same value through the quadratic-kernel expansion
/// <y,y> - sum_{u,v} vec(y_u)^T K_{u,v} vec(y_v); third algebraic route.
double profile_loss_kernel(const VectorXcd& y, const ProjectivePoint& kappa,
                           const Spd2& precision);

/// Best scalar multiplier of kappa for y under the weighted inner product.
cdouble profile_scale(const VectorXcd& y, const VectorXcd& kappa, const Spd2& precision);

/// Uniform-in-direction Lipschitz constant of the loss in the quotient
/// distance.  Requires the precision to have distinct eigenvalues.
double lipschitz_prefactor(const VectorXcd& y, const Spd2& precision);

/// Checks |loss(y,a) - loss(y,b)| <= prefactor * distance(a,b) on every pair.
bool check_lipschitz(const VectorXcd& y, const Spd2& precision,
                     const std::vector<std::pair<ProjectivePoint, ProjectivePoint>>& pairs);

/// Monte-Carlo split of the population loss at a candidate direction into
/// the noise part (constant 2N-2 in expectation) and the signal part driven
/// by the quotient distance to the true direction.
struct LossDecomposition {
  double noise_part = 0.0;
  double noise_se = 0.0;  // Monte-Carlo standard error of noise_part
  double signal_part = 0.0;
};

LossDecomposition population_loss_decomposition(const ProjectivePoint& kappa,
                                                const ProjectivePoint& kappa0,
                                                const Spd2& precision,
                                                const std::vector<cdouble>& phi_samples,
                                                int eps_mc, std::uint64_t seed);

/// Closed form of the expected noise loss E d_P(eps, fit)^2 when the noise
/// pairs are i.i.d. N(0, sigma_true):
///   N tr(sigma_true P) - tr((k <>_P k)^{-1} (k <>_{P sigma_true P} k)).
double expected_noise_loss(const ProjectivePoint& kappa, const Spd2& precision,
                           const Matrix2d& sigma_true);

// ---------------------------------------------------------------------------
// Chart around an anchor direction.
// ---------------------------------------------------------------------------

/// Affine-like chart of the quotient space around an anchor: rotate the
/// anchor onto the last axis, divide by the last coordinate and split into
/// real pairs.  forward(inverse(x)) = x and inverse(0) = anchor.
class Chart {
 public:
  explicit Chart(const ProjectivePoint& anchor);

  const ProjectivePoint& anchor() const { return anchor_; }
  const MatrixXcd& rotation() const { return rot_; }
  Eigen::Index dim() const { return 2 * (anchor_.dim() - 1); }

  VectorXd forward(const ProjectivePoint& p) const;
  ProjectivePoint inverse(const VectorXd& x) const;

 private:
  ProjectivePoint anchor_;
  MatrixXcd rot_;
};

// ---------------------------------------------------------------------------
// Plug-in CLT covariance.
// ---------------------------------------------------------------------------

struct SandwichCov {
  MatrixXd h_hat;     // mean chart Hessian of the loss
  MatrixXd g_hat;     // covariance of chart gradients
  MatrixXd cov_beta;  // H^{-1} G H^{-1}
  MatrixXd cov_I;     // delta-method covariance of the spectrum (per fit, /B)
};

struct SandwichOptions {
  double fd_step = 1e-5;
  int threads = 0;
};

/// Empirical sandwich covariance at a fitted direction: chart gradients and
/// Hessians of the per-batch loss at the anchor by Richardson-extrapolated
/// central differences, combined into H^{-1} G H^{-1} and pushed to the
/// spectrum through the phase-correction Jacobian.
SandwichCov sandwich_covariance(const MatrixXcd& y_batches, const ProjectivePoint& kappa_hat,
                                const Spd2& precision, const SandwichOptions& opts = {});

/// Derivative of the population profile objective with respect to the
/// precision matrix, evaluated at the true direction and true precision.
/// Generically nonzero: the profile objective is not stationary in the
/// noise parameters at the truth.
Matrix2d profile_precision_gradient(const ProjectivePoint& kappa0, const Spd2& precision0);

}  // namespace driftfit
