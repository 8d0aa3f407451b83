#pragma once

#include <functional>
#include <limits>
#include <vector>

#include <Eigen/Core>

namespace driftfit {

using ObjectiveFn = std::function<double(const Eigen::VectorXd&)>;
using GradientFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

struct OptimResult {
  Eigen::VectorXd x;
  double f = std::numeric_limits<double>::infinity();
  int evaluations = 0;
  bool converged = false;
};

struct LbfgsbOptions {
  int max_iter = 50;
  int memory = 10;
  double pg_tol = 1e-9;      // projected-gradient sup-norm
  double f_tol = 1e-12;      // relative objective decrease
};

/// Box-constrained limited-memory BFGS minimizer (projected line search).
/// Bounds may contain +-infinity.  Never returns a point worse than x0.
OptimResult lbfgsb_minimize(const ObjectiveFn& f, const GradientFn& g,
                            const Eigen::VectorXd& x0, const Eigen::VectorXd& lower,
                            const Eigen::VectorXd& upper, const LbfgsbOptions& opts = {});

struct NelderMeadOptions {
  int max_evals = 200;
  double diameter_tol = 1e-8;  // scaled by (1 + |x0|)
  double alpha = 1.0;          // reflection
  double gamma = 2.0;          // expansion
  double rho = 0.5;            // contraction
  double sigma = 0.5;          // shrink
};

/// Derivative-free simplex minimizer.  Never returns a point worse than x0.
OptimResult nelder_mead_minimize(const ObjectiveFn& f, const Eigen::VectorXd& x0,
                                 const NelderMeadOptions& opts = {});

}  // namespace driftfit
