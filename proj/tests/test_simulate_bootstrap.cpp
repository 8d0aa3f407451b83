#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/SVD>

#include "driftfit/simulate.hpp"
#include "test_support.hpp"

using namespace driftfit;
using namespace driftfit::testing;

namespace {

SimSpec base_spec(Eigen::Index b, Eigen::Index n) {
  SimSpec spec;
  spec.b_count = b;
  spec.n_plus_1 = n;
  spec.kappa0 = synthetic_kappa(n);
  spec.psi_gen = GeneratorSpec::constant({3.0, 1.0});
  spec.phi_gen = GeneratorSpec::random_walk({1.0, 0.0}, 0.1);
  spec.noise = NoiseSpec::hom(0.01 * Matrix2d::Identity());
  spec.seed = 12345;
  return spec;
}

}  // namespace

TEST_CASE("simulation") {
  SUBCASE("deterministic per seed") {
    const SimSpec spec = base_spec(20, 8);
    const MatrixXcd a = simulate(spec);
    const MatrixXcd b = simulate(spec);
    CHECK(a == b);
    SimSpec other = spec;
    other.seed = 54321;
    CHECK(simulate(other) != a);
  }

  SUBCASE("vanishing noise leaves a rank-1 centered matrix") {
    SimSpec spec = base_spec(15, 9);
    spec.noise = NoiseSpec::hom(1e-30 * Matrix2d::Identity());
    const MatrixXcd y = simulate(spec);
    MatrixXcd yc = y;
    for (Eigen::Index b = 0; b < y.rows(); ++b) yc.row(b).array() -= cdouble(3.0, 1.0);
    Eigen::JacobiSVD<MatrixXcd> svd(yc);
    CHECK(svd.singularValues()[1] < 1e-10 * svd.singularValues()[0]);
  }

  SUBCASE("phase-noise variance lands on the imaginary axis for a real mean") {
    SimSpec spec = base_spec(5000, 21);
    spec.psi_gen = GeneratorSpec::constant({1.0, 0.0});
    spec.phi_gen = GeneratorSpec::constant({0.0, 0.0});  // isolate the noise
    Matrix2d sigma0;
    sigma0 << 0.5, 0.0, 0.0, 0.3;
    const double st = 0.6;
    spec.noise = NoiseSpec::het(sigma0, st);
    const MatrixXcd y = simulate(spec);

    double var_im = 0.0, var_re = 0.0;
    const double m = static_cast<double>(y.size());
    for (Eigen::Index b = 0; b < y.rows(); ++b)
      for (Eigen::Index v = 0; v < y.cols(); ++v) {
        const cdouble r = y(b, v) - cdouble(1.0, 0.0);
        var_re += r.real() * r.real();
        var_im += r.imag() * r.imag();
      }
    var_re /= m;
    var_im /= m;
    // imaginary part carries sigma0[1,1] + sigma_tilde^2, real part only sigma0[0,0]
    CHECK(var_im == doctest::Approx(0.3 + st * st).epsilon(0.05));
    CHECK(var_re == doctest::Approx(0.5).epsilon(0.05));
  }

  SUBCASE("invalid specs are rejected") {
    SimSpec spec = base_spec(10, 8);
    spec.kappa0 = VectorXcd::Ones(8);  // not mean-zero
    CHECK_THROWS_AS(simulate(spec), InvalidSpec);

    spec = base_spec(10, 8);
    spec.kappa0 = synthetic_kappa(9);  // wrong length
    CHECK_THROWS_AS(simulate(spec), InvalidSpec);

    spec = base_spec(0, 8);
    CHECK_THROWS_AS(simulate(spec), InvalidSpec);

    spec = base_spec(10, 8);
    spec.noise.sigma_tilde = -0.1;
    CHECK_THROWS_AS(simulate(spec), InvalidSpec);

    spec = base_spec(10, 8);
    spec.phi_gen = GeneratorSpec::vector(VectorXcd::Ones(3));  // wrong length
    CHECK_THROWS_AS(simulate(spec), InvalidSpec);
  }
}

TEST_CASE("parametric bootstrap") {
  SUBCASE("noiseless data collapses the bands") {
    SimSpec spec = base_spec(20, 8);
    spec.noise = NoiseSpec::hom(1e-28 * Matrix2d::Identity());
    const MatrixXcd y = simulate(spec);
    const FitReport fit = fit_hom(y);
    BootstrapOptions opts;
    opts.replicates = 20;
    opts.seed = 7;
    const BootstrapResult bands = parametric_bootstrap(y, fit, opts);
    CHECK((bands.i_upper - bands.i_lower).cwiseAbs().maxCoeff() < 1e-8);
    CHECK((bands.omega_upper - bands.omega_lower).cwiseAbs().maxCoeff() < 1e-8);
  }

  SUBCASE("identical seeds give identical bands") {
    const MatrixXcd y = simulate(base_spec(25, 8));
    const FitReport fit = fit_hom(y);
    BootstrapOptions opts;
    opts.replicates = 30;
    opts.seed = 99;
    const BootstrapResult a = parametric_bootstrap(y, fit, opts);
    opts.threads = 2;  // thread count must not change the result
    const BootstrapResult b = parametric_bootstrap(y, fit, opts);
    CHECK(a.i_lower == b.i_lower);
    CHECK(a.i_upper == b.i_upper);
    CHECK(a.omega_lower == b.omega_lower);
    CHECK(a.omega_upper == b.omega_upper);
  }

  SUBCASE("bands bracket the point estimate") {
    const MatrixXcd y = simulate(base_spec(40, 10));
    const FitReport fit = fit_hom(y);
    BootstrapOptions opts;
    opts.replicates = 60;
    opts.seed = 3;
    const BootstrapResult bands = parametric_bootstrap(y, fit, opts);
    int inside = 0;
    for (Eigen::Index v = 0; v < bands.i_point.size(); ++v)
      if (bands.i_lower[v] <= bands.i_point[v] && bands.i_point[v] <= bands.i_upper[v]) ++inside;
    CHECK(inside >= static_cast<int>(0.95 * bands.i_point.size()));
  }

  SUBCASE("bias correction recenters the replicate covariance") {
    // Data with a stochastic drift amplitude: the plug-in covariance is
    // biased, and the corrected simulator should put the replicate mean
    // closer to the truth.
    SimSpec spec = base_spec(50, 10);
    Matrix2d sigma;
    sigma << 0.02, 0.003, 0.003, 0.012;
    spec.noise = NoiseSpec::hom(sigma);
    spec.phi_gen = GeneratorSpec::random_walk({1.0, 0.0}, 0.2, 0.1);
    const MatrixXcd y = simulate(spec);
    const FitReport fit = fit_hom(y);

    BootstrapOptions opts;
    opts.replicates = 120;
    opts.pilot_replicates = 60;
    opts.seed = 11;
    opts.bias_correct = false;
    const BootstrapResult plain = parametric_bootstrap(y, fit, opts);
    opts.bias_correct = true;
    const BootstrapResult corrected = parametric_bootstrap(y, fit, opts);

    const double err_plain = (plain.replicate_sigma_mean - fit.params.sigma).norm();
    const double err_corr = (corrected.replicate_sigma_mean - fit.params.sigma).norm();
    CHECK(err_corr < err_plain);
  }

  SUBCASE("heteroscedastic route") {
    SimSpec spec = base_spec(40, 8);
    spec.psi_gen = GeneratorSpec::random_walk({20.0, 5.0}, 0.1, 0.02);
    Matrix2d sigma0;
    sigma0 << 0.05, 0.01, 0.01, 0.03;
    spec.noise = NoiseSpec::het(sigma0, 0.01);
    const MatrixXcd y = simulate(spec);
    HetFitOptions hopts;
    hopts.maxiter = 40;
    const HetFitReport fit = fit_het(y, hopts);
    BootstrapOptions opts;
    opts.replicates = 8;
    opts.seed = 21;
    const BootstrapResult bands = parametric_bootstrap(y, fit, opts);
    CHECK(bands.replicates >= 7);
    CHECK((bands.i_upper - bands.i_lower).minCoeff() >= 0.0);
  }

  SUBCASE("unconverged fits are rejected") {
    const MatrixXcd y = simulate(base_spec(20, 8));
    FitReport fit = fit_hom(y);
    fit.converged = false;
    BootstrapOptions opts;
    opts.replicates = 5;
    CHECK_THROWS_AS(parametric_bootstrap(y, fit, opts), RefitFailure);
  }
}
