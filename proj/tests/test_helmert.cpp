#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "driftfit/helmert.hpp"
#include "test_support.hpp"

using namespace driftfit;
using namespace driftfit::testing;

TEST_CASE("basis construction") {
  const HelmertBasis h2(2);
  CHECK(h2.matrix().rows() == 1);
  CHECK(h2.matrix()(0, 0) == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-15));
  CHECK(h2.matrix()(0, 1) == doctest::Approx(-1.0 / std::sqrt(2.0)).epsilon(1e-15));

  const HelmertBasis h4(4);
  const MatrixXd prod = h4.matrix() * h4.matrix().transpose();
  CHECK((prod - MatrixXd::Identity(3, 3)).cwiseAbs().maxCoeff() < 1e-14);

  for (Eigen::Index n : {2, 5, 17}) {
    const HelmertBasis h(n);
    CHECK((h.matrix() * VectorXd::Ones(n)).cwiseAbs().maxCoeff() < 1e-14);
  }

  CHECK_THROWS_AS(HelmertBasis(1), InvalidDimension);
}

TEST_CASE("contrast coordinates") {
  Rng rng(21);

  SUBCASE("constant vectors vanish") {
    VectorXcd c = VectorXcd::Constant(6, cdouble(2.5, -0.5));
    CHECK(helmertize(c).norm() < 1e-13);
  }

  SUBCASE("isometry on the mean-zero subspace") {
    for (int trial = 0; trial < 100; ++trial) {
      const VectorXcd k = random_mean_zero_unit(rng, 9);
      CHECK(std::abs(helmertize(k).norm() - 1.0) < 1e-12);
    }
  }

  SUBCASE("transpose restores mean-zero vectors") {
    const HelmertBasis h(8);
    for (int trial = 0; trial < 100; ++trial) {
      VectorXcd k = random_cvec(rng, 8);
      k.array() -= k.mean();
      CHECK((h.invert(h.apply(k)) - k).norm() < 1e-12);
    }
  }

  SUBCASE("matrix form acts row-wise") {
    const HelmertBasis h(5);
    MatrixXcd y(3, 5);
    for (Eigen::Index b = 0; b < 3; ++b) y.row(b) = random_cvec(rng, 5).transpose();
    const MatrixXcd yh = h.apply(y);
    CHECK(yh.cols() == 4);
    for (Eigen::Index b = 0; b < 3; ++b)
      CHECK((yh.row(b).transpose() - h.apply(VectorXcd(y.row(b).transpose()))).norm() < 1e-13);
  }

  SUBCASE("wrong lengths are rejected") {
    const HelmertBasis h(5);
    const VectorXcd four = VectorXcd::Ones(4);
    const VectorXcd five = VectorXcd::Ones(5);
    CHECK_THROWS_AS(h.apply(four), InvalidDimension);
    CHECK_THROWS_AS(h.invert(five), InvalidDimension);
  }
}

TEST_CASE("row-centered noise becomes i.i.d. in the contrast basis") {
  // Smoke-sized version of the distributional check (the full one runs in
  // the validation suite): sample covariance close to sigma, lag-1 cross
  // covariance close to zero.
  Rng rng(22);
  const Eigen::Index b_count = 4000;
  const Eigen::Index n_plus_1 = 6;
  Matrix2d sigma;
  sigma << 1.0, 0.3, 0.3, 0.5;
  const Matrix2d half = Spd2(sigma).sqrt().matrix();

  MatrixXcd eps(b_count, n_plus_1);
  for (Eigen::Index b = 0; b < b_count; ++b)
    for (Eigen::Index v = 0; v < n_plus_1; ++v) {
      const Vector2d g(rng.normal(), rng.normal());
      eps(b, v) = comp_of(half * g);
    }
  MatrixXcd centered = eps;
  centered.colwise() -= VectorXcd(eps.rowwise().mean());
  const MatrixXcd contrast = helmertize(centered);

  const double m = static_cast<double>(b_count * (n_plus_1 - 1));
  Matrix2d cov = Matrix2d::Zero();
  Matrix2d cross = Matrix2d::Zero();
  for (Eigen::Index b = 0; b < b_count; ++b)
    for (Eigen::Index v = 0; v + 1 < n_plus_1; ++v) {
      const Vector2d r = vec_of(contrast(b, v));
      cov += r * r.transpose();
      if (v + 2 < n_plus_1) cross += r * vec_of(contrast(b, v + 1)).transpose();
    }
  cov /= m;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      const double se = std::sqrt((sigma(i, i) * sigma(j, j) + sigma(i, j) * sigma(i, j)) / m);
      CHECK(std::abs(cov(i, j) - sigma(i, j)) < 4.0 * se);
    }
  CHECK(cross.cwiseAbs().maxCoeff() / m < 4.0 / std::sqrt(m));
}
