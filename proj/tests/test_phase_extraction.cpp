#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/SVD>

#include "driftfit/frechet.hpp"
#include "driftfit/helmert.hpp"
#include "driftfit/phase_extraction.hpp"
#include "driftfit/simulate.hpp"
#include "test_support.hpp"

using namespace driftfit;
using namespace driftfit::testing;

namespace {

double real_part_norm2(const VectorXcd& kappa, double lambda) {
  return (std::exp(cdouble(0, lambda)) * kappa).real().squaredNorm();
}

bool phase_in_set(double lambda, const MaxMethodPhases& set, double tol = 1e-12) {
  auto close = [&](double a, double b) {
    double d = std::fmod(std::abs(a - b), 2.0 * M_PI);
    return std::min(d, 2.0 * M_PI - d) < tol;
  };
  return close(lambda, set.lambda_a) || close(lambda, set.lambda_b);
}

}  // namespace

TEST_CASE("maximum-method phases") {
  Rng rng(51);

  SUBCASE("real directions keep the full real-part norm") {
    VectorXcd k(3);
    k << cdouble(0.6, 0), cdouble(-0.64, 0), cdouble(0.48, 0);
    k /= k.norm();
    const MaxMethodPhases set = max_method_lambda(k);
    CHECK(!set.all_phases);
    CHECK(phase_in_set(M_PI, set));
    CHECK(phase_in_set(0.0, set));  // 2*pi wraps to 0
    CHECK(real_part_norm2(k, set.lambda_a) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(real_part_norm2(k, set.lambda_b) == doctest::Approx(1.0).epsilon(1e-12));
  }

  SUBCASE("isotropic direction leaves every phase optimal") {
    VectorXcd k(2);
    k << cdouble(1, 0), cdouble(0, 1);
    k /= k.norm();
    CHECK(max_method_lambda(k).all_phases);
  }

  SUBCASE("closed form beats a dense grid") {
    for (int trial = 0; trial < 20; ++trial) {
      const VectorXcd k = random_unit(rng, 8);
      const MaxMethodPhases set = max_method_lambda(k);
      const double best_closed = real_part_norm2(k, set.lambda_a);
      double best_grid = 0.0;
      const int grid = 10000;
      for (int g = 0; g < grid; ++g)
        best_grid = std::max(best_grid, real_part_norm2(k, 2.0 * M_PI * g / grid));
      CHECK(best_closed >= best_grid - 1e-10);
    }
  }
}

TEST_CASE("spectrum extraction") {
  Rng rng(52);

  SUBCASE("real direction with a dominant positive entry is returned as is") {
    VectorXcd k(4);
    k << cdouble(0.9, 0), cdouble(-0.1, 0), cdouble(-0.3, 0), cdouble(-0.2, 0);
    k /= k.norm();
    const SpectrumResult s = extract_spectrum(k);
    CHECK(!s.flipped);
    CHECK((s.I - k.real()).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(s.omega.cwiseAbs().maxCoeff() < 1e-12);
  }

  SUBCASE("exactly phase-invariant") {
    for (int trial = 0; trial < 10; ++trial) {
      const VectorXcd k = random_unit(rng, 9);
      const SpectrumResult base = extract_spectrum(k);
      for (int p = 0; p < 100; ++p) {
        const double mu = 2.0 * M_PI * rng.uniform();
        const SpectrumResult rot = extract_spectrum(VectorXcd(std::exp(cdouble(0, mu)) * k));
        CHECK((rot.I - base.I).cwiseAbs().maxCoeff() < 1e-12);
        CHECK((rot.omega - base.omega).cwiseAbs().maxCoeff() < 1e-12);
      }
    }
  }

  SUBCASE("stored rotation reproduces spectrum and wave, sign flip holds") {
    for (int trial = 0; trial < 200; ++trial) {
      const VectorXcd k = random_unit(rng, 7);
      const SpectrumResult s = extract_spectrum(k);
      const VectorXcd rotated = std::exp(cdouble(0, s.lambda_opt)) * k;
      CHECK((s.I - rotated.real()).cwiseAbs().maxCoeff() < 1e-12);
      CHECK((s.omega - rotated.imag()).cwiseAbs().maxCoeff() < 1e-12);
      CHECK(std::abs(s.I.maxCoeff()) > std::abs(s.I.minCoeff()));
      CHECK(s.I.squaredNorm() >= s.omega.squaredNorm());
      CHECK(s.I.squaredNorm() + s.omega.squaredNorm() == doctest::Approx(1.0).epsilon(1e-12));
      CHECK(s.lambda_opt >= 0.0);
      CHECK(s.lambda_opt < 2.0 * M_PI);
    }
  }

  SUBCASE("degenerate inputs are rejected") {
    VectorXcd iso(2);
    iso << cdouble(1, 0), cdouble(0, 1);
    iso /= iso.norm();
    CHECK_THROWS_AS(extract_spectrum(iso), PhaseDegenerate);

    VectorXcd sym(4);
    sym << cdouble(1, 0), cdouble(-1, 0), cdouble(0.5, 0), cdouble(-0.5, 0);
    sym /= sym.norm();
    CHECK_THROWS_AS(extract_spectrum(sym), SignDegenerate);
  }
}

TEST_CASE("spectrum jacobian") {
  Rng rng(53);

  SUBCASE("axis anchor: trivial rotation, rank drops by one") {
    const Eigen::Index n = 6;
    VectorXcd e_last = VectorXcd::Zero(n);
    e_last[n - 1] = 1.0;
    const MatrixXd jac = spectrum_jacobian(e_last);
    const MatrixXd expected = chart_pattern_matrix(n).real();
    CHECK((jac - expected).cwiseAbs().maxCoeff() < 1e-12);
    Eigen::JacobiSVD<MatrixXd> svd(jac);
    CHECK((svd.singularValues().array() > 1e-9).count() == n - 1);
  }

  SUBCASE("matches central finite differences through the chart") {
    const Eigen::Index n = 7;
    for (int trial = 0; trial < 5; ++trial) {
      VectorXcd k;
      do {
        k = random_unit(rng, n);
      } while (std::abs((k.transpose() * k)(0)) < 0.2);
      const MatrixXd closed = spectrum_jacobian(k);
      const Chart chart((ProjectivePoint(k)));
      const double h = 1e-6;
      MatrixXd fd(n, 2 * (n - 1));
      for (Eigen::Index j = 0; j < fd.cols(); ++j) {
        VectorXd x = VectorXd::Zero(fd.cols());
        x[j] = h;
        const VectorXd ip = extract_spectrum(chart.inverse(x).rep()).I;
        x[j] = -h;
        const VectorXd im = extract_spectrum(chart.inverse(x).rep()).I;
        fd.col(j) = (ip - im) / (2 * h);
      }
      CHECK((closed - fd).norm() / closed.norm() < 1e-4);
    }
  }

  SUBCASE("singular values cluster at one with a single value on each side") {
    // realistic anchor: a smooth spectrum direction in the contrast basis
    const VectorXcd k = helmertize(synthetic_kappa(16));
    Eigen::JacobiSVD<MatrixXd> svd(spectrum_jacobian(k));
    const VectorXd sv = svd.singularValues();
    CHECK(sv[0] > 1.0 + 1e-3);                 // one above
    CHECK(sv[sv.size() - 1] < 1.0 - 1e-3);     // one below
    Eigen::Index near_one = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i)
      if (std::abs(sv[i] - 1.0) < 0.05) ++near_one;
    CHECK(near_one >= sv.size() - 2);
  }

  SUBCASE("degenerate anchors are rejected") {
    VectorXcd iso(2);
    iso << cdouble(1, 0), cdouble(0, 1);
    iso /= iso.norm();
    CHECK_THROWS_AS(spectrum_jacobian(iso), SingularityError);
  }
}
