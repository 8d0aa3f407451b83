#pragma once

#include <optional>
#include <utility>

#include "driftfit/core.hpp"

namespace driftfit {

/// Real spectrum and orthogonal wave of a unit direction, with the rotation
/// that produced them:  I = Re(exp(i*lambda_opt) * kappa),
/// omega = Im(exp(i*lambda_opt) * kappa).
struct SpectrumResult {
  VectorXd I;
  VectorXd omega;
  double lambda_opt = 0.0;  // in [0, 2*pi)
  bool flipped = false;
  bool near_m1 = false;  // |kappa^T kappa| within warn threshold of 0
  bool near_m2 = false;  // spectrum max/min magnitudes within warn threshold
};

/// Result of the maximum method: either the two-element set of phases
/// maximizing || Re(exp(i*lambda) * kappa) ||, or all phases when the
/// objective is constant (kappa^T kappa = 0).
struct MaxMethodPhases {
  bool all_phases = false;
  double lambda_a = 0.0;
  double lambda_b = 0.0;  // lambda_a + pi (mod 2*pi)
};

MaxMethodPhases max_method_lambda(const VectorXcd& kappa);

/// Phase-corrects a unit direction with the maximum method and flips the
/// sign so the dominant peak is positive.  Invariant under global phase
/// changes of kappa.  Throws PhaseDegenerate / SignDegenerate when the input
/// lies on one of the two singular sets (tolerance 1e-12).
SpectrumResult extract_spectrum(const VectorXcd& kappa);

/// Unitary matrix R with R * u = e_last for a unit vector u; deterministic
/// Householder construction.
MatrixXcd unitary_to_last_axis(const VectorXcd& u);

/// Sparse pattern matrix mapping chart coordinates to complex directions:
/// row j < N-1 has (1, i) in columns (2j, 2j+1), last row zero.
MatrixXcd chart_pattern_matrix(Eigen::Index n);

/// Jacobian at the anchor of the map taking chart coordinates around kappa0
/// to the extracted spectrum (N x 2(N-1)).  kappa0 must be away from both
/// singular sets.
MatrixXd spectrum_jacobian(const VectorXcd& kappa0);

}  // namespace driftfit
