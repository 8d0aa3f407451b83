#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "driftfit/core.hpp"
#include "test_support.hpp"

using namespace driftfit;
using namespace driftfit::testing;

TEST_CASE("scalar real views") {
  CHECK(vec_of(cdouble(1, 2)) == Vector2d(1, 2));

  Matrix2d mi;
  mi << 0, -1, 1, 0;
  CHECK(mat_of(cdouble(0, 1)) == mi);

  // multiplication of complex scalars through the matrix representation
  const Vector2d prod = mat_of(cdouble(1, 1)) * vec_of(cdouble(2, -1));
  CHECK(prod.isApprox(vec_of(cdouble(1, 1) * cdouble(2, -1)), 1e-15));
  CHECK(prod == Vector2d(3, 1));

  CHECK(comp_of(vec_of(cdouble(-0.25, 3.5))) == cdouble(-0.25, 3.5));
}

TEST_CASE("matrix representation identities on random pairs") {
  Rng rng(11);
  for (int i = 0; i < 10000; ++i) {
    const cdouble z = rng.normal_complex();
    const cdouble w = rng.normal_complex();
    CHECK(mat_of(z).transpose().isApprox(mat_of(std::conj(z)), 1e-15));
    CHECK((mat_of(z) * vec_of(w)).isApprox(vec_of(z * w), 1e-12));
    CHECK((mat_of(w) * vec_of(z)).isApprox(vec_of(z * w), 1e-12));
  }
}

TEST_CASE("pair_matrix basics") {
  VectorXcd one(1);
  one << cdouble(1, 0);
  CHECK(pair_matrix(one, Matrix2d::Identity(), one).isApprox(Matrix2d::Identity(), 1e-15));

  SUBCASE("matches the elementwise sum of 2x2 products") {
    Rng rng(12);
    for (int trial = 0; trial < 50; ++trial) {
      const VectorXcd z = random_cvec(rng, 7);
      const VectorXcd w = random_cvec(rng, 7);
      const Matrix2d a = random_spd(rng);
      Matrix2d naive = Matrix2d::Zero();
      for (Eigen::Index i = 0; i < z.size(); ++i)
        naive += mat_of(z[i]).transpose() * a * mat_of(w[i]);
      CHECK((pair_matrix(z, a, w) - naive).norm() < 1e-12 * (1 + naive.norm()));
    }
  }

  SUBCASE("bilinear") {
    Rng rng(13);
    const VectorXcd z = random_cvec(rng, 5), w = random_cvec(rng, 5), u = random_cvec(rng, 5);
    const Matrix2d a = random_spd(rng);
    const Matrix2d lhs = pair_matrix(z, a, VectorXcd(2.0 * w + u));
    const Matrix2d rhs = 2.0 * pair_matrix(z, a, w) + pair_matrix(z, a, u);
    CHECK(lhs.isApprox(rhs, 1e-12));
  }

  SUBCASE("determinant lower bound for unit vectors") {
    Rng rng(14);
    const Matrix2d p = spd_with_eigs(3.0, 2.0);
    for (int trial = 0; trial < 1000; ++trial) {
      const VectorXcd k = random_unit(rng, 6);
      const Matrix2d g = pair_matrix(k, p, k);
      CHECK(g.determinant() >= 6.0 * (1 - 1e-12));
      // Gram of a vector with itself is symmetric positive semidefinite.
      CHECK(std::abs(g(0, 1) - g(1, 0)) < 1e-12 * g.norm());
      CHECK(g.trace() >= 0);
    }
  }

  SUBCASE("dimension mismatch") {
    const VectorXcd z = VectorXcd::Ones(3), w = VectorXcd::Ones(4);
    CHECK_THROWS_AS(pair_matrix(z, Matrix2d::Identity(), w), DimensionMismatch);
  }
}

TEST_CASE("eigen-swapped inverse identity") {
  Rng rng(15);
  for (int trial = 0; trial < 200; ++trial) {
    const Spd2 p(random_spd(rng, 0.4, 4.0));
    const VectorXcd k = random_unit(rng, 8);
    const Matrix2d g = pair_matrix(k, p, k);
    const Matrix2d via_swap = pair_matrix(k, p.eigen_swapped(), k) / g.determinant();
    CHECK(Matrix2d(g.inverse()).isApprox(via_swap, 1e-10));
    // Frobenius norm bound for unit directions.
    CHECK(g.norm() <= std::sqrt(p.lambda_max() * p.lambda_max() +
                                p.lambda_min() * p.lambda_min()) *
                          (1 + 1e-12));
  }
}

TEST_CASE("mahalanobis inner product and distance") {
  Rng rng(16);
  const VectorXcd z = random_cvec(rng, 4);
  CHECK(mahal_dist(z, Matrix2d::Identity(), z) == 0.0);

  SUBCASE("hand-expanded 1-d case") {
    VectorXcd a(1), b(1);
    a << cdouble(1, 0);
    b << cdouble(0, 1);
    const Matrix2d w = Vector2d(2, 3).asDiagonal();
    // difference (1, -1): quadratic form 2*1 + 3*1 = 5
    CHECK(mahal_dist(a, w, b) == doctest::Approx(std::sqrt(5.0)).epsilon(1e-14));
  }

  SUBCASE("identity weight reduces to Euclidean distance") {
    const VectorXcd w = random_cvec(rng, 4);
    CHECK(mahal_dist(z, Matrix2d::Identity(), w) ==
          doctest::Approx((z - w).norm()).epsilon(1e-12));
  }

  SUBCASE("triangle inequality") {
    for (int trial = 0; trial < 200; ++trial) {
      const Matrix2d a = random_spd(rng);
      const VectorXcd x = random_cvec(rng, 5), y = random_cvec(rng, 5), u = random_cvec(rng, 5);
      CHECK(mahal_dist(x, a, u) <= mahal_dist(x, a, y) + mahal_dist(y, a, u) + 1e-12);
    }
  }

  SUBCASE("nonnegative quadratic form") {
    for (int trial = 0; trial < 100; ++trial) {
      const Matrix2d a = random_spd(rng);
      const VectorXcd x = random_cvec(rng, 5);
      CHECK(mahal_inner(x, a, x) >= 0.0);
    }
  }
}

TEST_CASE("pair_vector consistency with pair_matrix") {
  Rng rng(17);
  // for a real vector, pairing with itself picks the first Gram column
  VectorXcd k(3);
  k << cdouble(0.2, 0), cdouble(-0.7, 0), cdouble(1.1, 0);
  const Matrix2d p = random_spd(rng);
  const Vector2d lhs = pair_vector(k, p, k);
  const Vector2d rhs = pair_matrix(k, p, k) * Vector2d(1, 0);
  CHECK(lhs.isApprox(rhs, 1e-12));
}

TEST_CASE("projective distance") {
  Rng rng(18);

  SUBCASE("same class is at distance zero") {
    const VectorXcd k = random_unit(rng, 6);
    const ProjectivePoint a(k);
    const ProjectivePoint b(std::exp(cdouble(0, 0.7)) * k);
    CHECK(proj_distance(a, b) < 1e-12);
  }

  SUBCASE("orthogonal unit vectors are maximally distant") {
    VectorXcd e1 = VectorXcd::Zero(4), e2 = VectorXcd::Zero(4);
    e1[0] = 1;
    e2[1] = 1;
    CHECK(proj_distance(ProjectivePoint(e1), ProjectivePoint(e2)) ==
          doctest::Approx(std::sqrt(2.0)).epsilon(1e-14));
  }

  SUBCASE("agrees with a dense grid search over the phase") {
    for (int trial = 0; trial < 10; ++trial) {
      const VectorXcd a = random_unit(rng, 5);
      const VectorXcd b = random_unit(rng, 5);
      double best = std::numeric_limits<double>::infinity();
      const int grid = 1000000;
      for (int g = 0; g < grid; ++g) {
        const double lam = 2.0 * M_PI * g / grid;
        best = std::min(best, (a - std::exp(cdouble(0, lam)) * b).norm());
      }
      CHECK(proj_distance(ProjectivePoint(a), ProjectivePoint(b)) ==
            doctest::Approx(best).epsilon(1e-5));
    }
  }

  SUBCASE("symmetric and phase-invariant in both arguments") {
    for (int trial = 0; trial < 100; ++trial) {
      const ProjectivePoint a(random_unit(rng, 6));
      const ProjectivePoint b(random_unit(rng, 6));
      const double d = proj_distance(a, b);
      CHECK(proj_distance(b, a) == doctest::Approx(d).epsilon(1e-12));
      const ProjectivePoint a2(std::exp(cdouble(0, 2.1)) * a.rep());
      const ProjectivePoint b2(std::exp(cdouble(0, -0.4)) * b.rep());
      CHECK(proj_distance(a2, b2) == doctest::Approx(d).epsilon(1e-12));
      CHECK(d >= 0);
      CHECK(d <= std::sqrt(2.0) + 1e-12);
    }
  }
}

TEST_CASE("optimal position") {
  Rng rng(19);

  SUBCASE("same class returns the other representative") {
    const VectorXcd k = random_unit(rng, 5);
    const ProjectivePoint a(k);
    const ProjectivePoint b(std::exp(cdouble(0, 1.3)) * k);
    CHECK((optimal_position(a, b).rep() - k).norm() < 1e-12);
  }

  SUBCASE("orthogonal input is returned unchanged") {
    VectorXcd e1 = VectorXcd::Zero(3), e2 = VectorXcd::Zero(3);
    e1[0] = 1;
    e2[1] = 1;
    CHECK((optimal_position(ProjectivePoint(e1), ProjectivePoint(e2)).rep() - e2).norm() == 0.0);
  }

  SUBCASE("rotated inner product is real nonnegative") {
    for (int trial = 0; trial < 200; ++trial) {
      const ProjectivePoint a(random_unit(rng, 7));
      const ProjectivePoint b(random_unit(rng, 7));
      const ProjectivePoint b_rot = optimal_position(a, b);
      const cdouble ip = b_rot.rep().dot(a.rep());
      CHECK(std::abs(ip.imag()) < 1e-12);
      CHECK(ip.real() >= -1e-12);
      CHECK((a.rep() - b_rot.rep()).norm() ==
            doctest::Approx(proj_distance(a, b)).epsilon(1e-12));
    }
  }
}

TEST_CASE("spd validation") {
  Matrix2d asym;
  asym << 1.0, 0.5, -0.5, 1.0;
  CHECK_THROWS_AS(Spd2{asym}, SingularSigma);

  Matrix2d indef;
  indef << 1.0, 2.0, 2.0, 1.0;
  CHECK_THROWS_AS(Spd2{indef}, SingularSigma);

  Matrix2d tiny = 1e-20 * Matrix2d::Identity();
  CHECK_NOTHROW(Spd2{tiny});  // scale-free: well conditioned relative to its trace
}
