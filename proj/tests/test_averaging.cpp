#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "driftfit/averaging.hpp"
#include "test_support.hpp"

using namespace driftfit;
using namespace driftfit::testing;

TEST_CASE("batch average") {
  Rng rng(31);

  SUBCASE("single batch is returned unchanged") {
    MatrixXcd y(1, 4);
    y.row(0) = random_cvec(rng, 4).transpose();
    CHECK((average(y) - y.row(0).transpose()).norm() == 0.0);
  }

  SUBCASE("opposite rows cancel") {
    const VectorXcd r = random_cvec(rng, 5);
    MatrixXcd y(2, 5);
    y.row(0) = r.transpose();
    y.row(1) = -r.transpose();
    CHECK(average(y).norm() < 1e-15);
  }

  SUBCASE("matches a naive double loop") {
    MatrixXcd y(3, 4);
    for (Eigen::Index b = 0; b < 3; ++b) y.row(b) = random_cvec(rng, 4).transpose();
    VectorXcd naive = VectorXcd::Zero(4);
    for (Eigen::Index v = 0; v < 4; ++v)
      for (Eigen::Index b = 0; b < 3; ++b) naive[v] += y(b, v) / 3.0;
    CHECK((average(y) - naive).norm() < 1e-14);
  }

  SUBCASE("empty input throws") {
    CHECK_THROWS_AS(average(MatrixXcd(0, 0)), EmptyData);
  }
}

TEST_CASE("averaging spectrum") {
  SUBCASE("min-max normalization of a real signal") {
    VectorXcd z(3);
    z << cdouble(0, 0), cdouble(1, 0), cdouble(2, 0);
    const AveragingSpectrum s = averaging_spectrum(z, 0.0);
    CHECK(s.I[0] == 0.0);
    CHECK(s.I[1] == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(s.I[2] == 1.0);
  }

  SUBCASE("constant signal has no spectrum") {
    const VectorXcd z = VectorXcd::Constant(4, cdouble(1, 1));
    CHECK_THROWS_AS(averaging_spectrum(z, 0.0), DegenerateSpectrum);
    CHECK_THROWS_AS(averaging_spectrum(z), DegenerateSpectrum);
  }

  SUBCASE("a half-turn phase mirrors the normalized spectrum of a real signal") {
    Rng rng(32);
    VectorXcd z(6);
    for (Eigen::Index v = 0; v < 6; ++v) z[v] = cdouble(rng.normal(), 0);
    const AveragingSpectrum s0 = averaging_spectrum(z, 0.0);
    const AveragingSpectrum spi = averaging_spectrum(z, M_PI);
    CHECK((spi.I - (1.0 - s0.I.array()).matrix()).cwiseAbs().maxCoeff() < 1e-12);
  }

  SUBCASE("invariant under positive scaling and constant shifts of the data") {
    Rng rng(33);
    MatrixXcd y(4, 6);
    for (Eigen::Index b = 0; b < 4; ++b) y.row(b) = random_cvec(rng, 6).transpose();
    const AveragingSpectrum base = averaging_spectrum(average(y));
    const AveragingSpectrum scaled = averaging_spectrum(average(MatrixXcd(3.7 * y)));
    const MatrixXcd shifted = y.array() + cdouble(5.0, -2.0);
    const AveragingSpectrum offset = averaging_spectrum(average(shifted));
    CHECK((base.I - scaled.I).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((base.I - offset.I).cwiseAbs().maxCoeff() < 1e-10);
  }
}
