#pragma once

#include <cstdint>
#include <optional>
#include <variant>

#include "driftfit/core.hpp"
#include "driftfit/het_model.hpp"
#include "driftfit/hom_model.hpp"

namespace driftfit {

/// Per-batch series generator for the drift parameters.
struct GeneratorSpec {
  enum class Kind { Constant, RandomWalk, Vector };
  Kind kind = Kind::Constant;
  cdouble value{1.0, 0.0};   // Constant / RandomWalk start
  double phase_step = 0.0;   // RandomWalk: per-batch phase increment scale
  double amp_step = 0.0;     // RandomWalk: per-batch log-amplitude increment scale
  VectorXcd values;          // Vector

  static GeneratorSpec constant(cdouble v) { return {Kind::Constant, v, 0, 0, {}}; }
  static GeneratorSpec random_walk(cdouble start, double phase_step, double amp_step = 0.0) {
    return {Kind::RandomWalk, start, phase_step, amp_step, {}};
  }
  static GeneratorSpec vector(VectorXcd v) { return {Kind::Vector, {0, 0}, 0, 0, std::move(v)}; }
};

struct NoiseSpec {
  enum class Model { Hom, Het };
  Model model = Model::Hom;
  Matrix2d sigma = Matrix2d::Identity();   // Hom (may be PSD; zero noise allowed)
  Matrix2d sigma0 = Matrix2d::Identity();  // Het
  double sigma_tilde = 0.0;                // Het
  cdouble c{0.0, 0.0};                     // Het spectrum mean

  static NoiseSpec hom(const Matrix2d& s) {
    NoiseSpec n;
    n.model = Model::Hom;
    n.sigma = s;
    return n;
  }
  static NoiseSpec het(const Matrix2d& s0, double st, cdouble c = {0, 0}) {
    NoiseSpec n;
    n.model = Model::Het;
    n.sigma0 = s0;
    n.sigma_tilde = st;
    n.c = c;
    return n;
  }
};

struct SimSpec {
  Eigen::Index b_count = 0;
  Eigen::Index n_plus_1 = 0;
  GeneratorSpec psi_gen;
  GeneratorSpec phi_gen;
  VectorXcd kappa0;  // mean-zero, unit-norm
  NoiseSpec noise;
  std::uint64_t seed = 0;
};

/// Smooth synthetic mean-zero unit-norm direction with one dominant peak and
/// a small orthogonal wave; useful as a simulation target.
VectorXcd synthetic_kappa(Eigen::Index n_plus_1);

/// Draws a data matrix from the generative model.  Deterministic per seed.
MatrixXcd simulate(const SimSpec& spec);

// ---------------------------------------------------------------------------
// Parametric bootstrap.
// ---------------------------------------------------------------------------

struct BootstrapOptions {
  int replicates = 500;
  double level = 0.95;
  bool bias_correct = false;
  int pilot_replicates = 50;
  std::uint64_t seed = 0;
  int threads = 0;
  double max_failure_rate = 0.05;
};

struct BootstrapBias {
  Matrix2d sigma_additive = Matrix2d::Zero();
  double phi_multiplicative = 1.0;
};

struct BootstrapResult {
  int replicates = 0;
  int failures = 0;
  double level = 0.95;
  VectorXd i_point, omega_point;
  VectorXd i_lower, i_upper;
  VectorXd omega_lower, omega_upper;
  BootstrapBias bias;
  bool bias_corrected = false;
  // Means across successful replicates, mainly for bias diagnostics.
  Matrix2d replicate_sigma_mean = Matrix2d::Zero();
  double replicate_phi_norm_mean = 0.0;
};

/// Pointwise confidence bands for the spectrum and wave by refitting
/// simulated datasets drawn from the fitted model.  With bias correction, a
/// pilot round estimates the additive covariance bias and multiplicative
/// amplitude bias, and the main round simulates from corrected parameters.
/// Replicate spectra are canonicalized by the sign-flip convention before
/// the per-frequency quantiles are taken.
BootstrapResult parametric_bootstrap(const MatrixXcd& y, const FitReport& fit,
                                     const BootstrapOptions& opts);

BootstrapResult parametric_bootstrap(const MatrixXcd& y, const HetFitReport& fit,
                                     const BootstrapOptions& opts);

}  // namespace driftfit
