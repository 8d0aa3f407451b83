#include "driftfit/frechet.hpp"

#include <Eigen/Cholesky>

#include "driftfit/parallel.hpp"
#include "driftfit/phase_extraction.hpp"

namespace driftfit {

cdouble profile_scale(const VectorXcd& y, const VectorXcd& kappa, const Spd2& precision) {
  const Matrix2d gram = pair_matrix(kappa, precision, kappa);
  return comp_of(Matrix2d(gram.inverse()) * pair_vector(kappa, precision, y));
}

double profile_loss(const VectorXcd& y, const ProjectivePoint& kappa, const Spd2& precision) {
  if (y.size() != kappa.dim()) throw DimensionMismatch("observation and direction lengths differ");
  const Matrix2d gram = pair_matrix(kappa.rep(), precision, kappa.rep());
  const Vector2d r = pair_vector(kappa.rep(), precision, y);
  return mahal_norm2(y, precision.matrix()) - r.dot(gram.inverse() * r);
}

double profile_loss_direct(const VectorXcd& y, const ProjectivePoint& kappa,
                           const Spd2& precision) {
  if (y.size() != kappa.dim()) throw DimensionMismatch("observation and direction lengths differ");
  const cdouble scale = profile_scale(y, kappa.rep(), precision);
  return std::pow(mahal_dist(y, precision.matrix(), scale * kappa.rep()), 2);
}

double profile_loss_kernel(const VectorXcd& y, const ProjectivePoint& kappa,
                           const Spd2& precision) {
  if (y.size() != kappa.dim()) throw DimensionMismatch("observation and direction lengths differ");
  const Matrix2d p = precision.matrix();
  const Matrix2d gram_inv = pair_matrix(kappa.rep(), precision, kappa.rep()).inverse();
  double acc = 0.0;
  for (Eigen::Index u = 0; u < y.size(); ++u) {
    for (Eigen::Index v = 0; v < y.size(); ++v) {
      const Matrix2d kern =
          p * mat_of(kappa.rep()[u]) * gram_inv * mat_of(kappa.rep()[v]).transpose() * p;
      acc += vec_of(y[u]).dot(kern * vec_of(y[v]));
    }
  }
  return mahal_norm2(y, p) - acc;
}

double lipschitz_prefactor(const VectorXcd& y, const Spd2& precision) {
  const double l1 = precision.lambda_max();
  const double l2 = precision.lambda_min();
  if (!(l1 > l2))
    throw InvalidSpec("precision matrix must have distinct eigenvalues");
  const double n = static_cast<double>(y.size());
  const double ratio = (l1 * l1 + l2 * l2) / (l1 * l2);
  const double inner =
      (l1 + 2.0) * std::sqrt(2.0 * n) + 8.0 * std::sqrt(2.0) * n +
      32.0 * std::sqrt(2.0) * n * ratio;
  return std::sqrt(l1) * ratio * inner * y.squaredNorm();
}

bool check_lipschitz(const VectorXcd& y, const Spd2& precision,
                     const std::vector<std::pair<ProjectivePoint, ProjectivePoint>>& pairs) {
  const double bound = lipschitz_prefactor(y, precision);
  for (const auto& [a, b] : pairs) {
    const double lhs = std::abs(profile_loss(y, a, precision) - profile_loss(y, b, precision));
    const double rhs = bound * proj_distance(a, b);
    if (lhs > rhs * (1.0 + 1e-12) + 1e-12) return false;
  }
  return true;
}

LossDecomposition population_loss_decomposition(const ProjectivePoint& kappa,
                                                const ProjectivePoint& kappa0,
                                                const Spd2& precision,
                                                const std::vector<cdouble>& phi_samples,
                                                int eps_mc, std::uint64_t seed) {
  if (eps_mc < 2) throw InvalidSpec("need at least 2 noise draws");
  const Eigen::Index n = kappa.dim();
  const Matrix2d sig_half = precision.inverse().sqrt().matrix();

  Rng rng(seed);
  double sum = 0.0, sum2 = 0.0;
  VectorXcd eps(n);
  for (int j = 0; j < eps_mc; ++j) {
    for (Eigen::Index v = 0; v < n; ++v) {
      const Vector2d g(rng.normal(), rng.normal());
      eps[v] = comp_of(sig_half * g);
    }
    const double val = profile_loss(eps, kappa, precision);
    sum += val;
    sum2 += val * val;
  }
  LossDecomposition out;
  const double m = static_cast<double>(eps_mc);
  out.noise_part = sum / m;
  out.noise_se = std::sqrt(std::max(0.0, sum2 / m - out.noise_part * out.noise_part) / m);

  double sig_acc = 0.0;
  for (const cdouble phi : phi_samples)
    sig_acc += profile_loss(phi * kappa0.rep(), kappa, precision);
  out.signal_part = phi_samples.empty() ? 0.0 : sig_acc / static_cast<double>(phi_samples.size());
  return out;
}

double expected_noise_loss(const ProjectivePoint& kappa, const Spd2& precision,
                           const Matrix2d& sigma_true) {
  const Matrix2d p = precision.matrix();
  const double n = static_cast<double>(kappa.dim());
  const Matrix2d gram_inv = pair_matrix(kappa.rep(), p, kappa.rep()).inverse();
  const Matrix2d mixed = pair_matrix(kappa.rep(), Matrix2d(p * sigma_true * p), kappa.rep());
  return n * (sigma_true * p).trace() - (gram_inv * mixed).trace();
}

// ---------------------------------------------------------------------------

Chart::Chart(const ProjectivePoint& anchor)
    : anchor_(anchor), rot_(unitary_to_last_axis(anchor.rep())) {
  if (anchor.dim() < 2) throw InvalidDimension("chart needs dimension >= 2");
}

VectorXd Chart::forward(const ProjectivePoint& p) const {
  if (p.dim() != anchor_.dim()) throw DimensionMismatch("point dimension does not match chart");
  const VectorXcd rotated = rot_ * p.rep();
  const Eigen::Index n = rotated.size();
  const cdouble last = rotated[n - 1];
  if (std::abs(last) < 1e-12) throw ChartDomainError("point lies outside the chart domain");
  VectorXd x(2 * (n - 1));
  for (Eigen::Index j = 0; j + 1 < n; ++j) {
    const cdouble ratio = rotated[j] / last;
    x[2 * j] = ratio.real();
    x[2 * j + 1] = ratio.imag();
  }
  return x;
}

ProjectivePoint Chart::inverse(const VectorXd& x) const {
  const Eigen::Index n = anchor_.dim();
  if (x.size() != 2 * (n - 1)) throw DimensionMismatch("chart coordinate length mismatch");
  VectorXcd lifted(n);
  for (Eigen::Index j = 0; j + 1 < n; ++j) lifted[j] = cdouble(x[2 * j], x[2 * j + 1]);
  lifted[n - 1] = cdouble(1, 0);
  lifted /= lifted.norm();
  return ProjectivePoint(rot_.adjoint() * lifted);
}

// ---------------------------------------------------------------------------

namespace {

/// Stencil of chart points for Richardson-extrapolated central differences.
struct Stencil {
  std::vector<VectorXd> points;
  Eigen::Index d = 0;
  double h = 0.0;

  // Index helpers into `points`.
  //   0: center
  //   axis(level, i, sign): +-h_level along e_i, level 0 -> h, 1 -> h/2
  //   cross(level, i, j, s): the four (i, j) corner points, i < j
  std::size_t axis(int level, Eigen::Index i, int sign) const {
    return 1 + static_cast<std::size_t>(level) * (2 * d) + 2 * static_cast<std::size_t>(i) +
           (sign > 0 ? 0 : 1);
  }
  std::size_t cross(int level, std::size_t pair_index, int corner) const {
    return 1 + 4 * static_cast<std::size_t>(d) +
           (static_cast<std::size_t>(level) * (d * (d - 1) / 2) + pair_index) * 4 +
           static_cast<std::size_t>(corner);
  }
};

Stencil build_stencil(Eigen::Index d, double h) {
  Stencil st;
  st.d = d;
  st.h = h;
  st.points.push_back(VectorXd::Zero(d));
  for (int level = 0; level < 2; ++level) {
    const double step = (level == 0) ? h : h / 2;
    for (Eigen::Index i = 0; i < d; ++i) {
      VectorXd p = VectorXd::Zero(d);
      p[i] = step;
      st.points.push_back(p);
      st.points.push_back(-p);
    }
  }
  for (int level = 0; level < 2; ++level) {
    const double step = (level == 0) ? h : h / 2;
    for (Eigen::Index i = 0; i < d; ++i) {
      for (Eigen::Index j = i + 1; j < d; ++j) {
        const double signs[4][2] = {{1, 1}, {1, -1}, {-1, 1}, {-1, -1}};
        for (const auto& s : signs) {
          VectorXd p = VectorXd::Zero(d);
          p[i] = s[0] * step;
          p[j] = s[1] * step;
          st.points.push_back(p);
        }
      }
    }
  }
  return st;
}

}  // namespace

SandwichCov sandwich_covariance(const MatrixXcd& y_batches, const ProjectivePoint& kappa_hat,
                                const Spd2& precision, const SandwichOptions& opts) {
  const Eigen::Index b_count = y_batches.rows();
  const Eigen::Index n = y_batches.cols();
  if (n != kappa_hat.dim()) throw DimensionMismatch("batch width does not match direction");
  if (b_count < 2) throw EmptyData("need at least 2 batches");
  const Eigen::Index d = 2 * (n - 1);

  const Chart chart(kappa_hat);
  const Stencil st = build_stencil(d, opts.fd_step);
  const std::size_t n_pts = st.points.size();

  // Directions and their cached weighted Grams, one per stencil point.
  std::vector<VectorXcd> dirs(n_pts);
  std::vector<Matrix2d> gram_inv(n_pts);
  for (std::size_t s = 0; s < n_pts; ++s) {
    dirs[s] = chart.inverse(st.points[s]).rep();
    gram_inv[s] = pair_matrix(dirs[s], precision, dirs[s]).inverse().eval();
  }

  // Loss values, stencil-major.
  MatrixXd rho(n_pts, b_count);
  const Matrix2d p = precision.matrix();
  parallel_for(
      static_cast<std::size_t>(b_count),
      [&](std::size_t b) {
        const VectorXcd yb = y_batches.row(static_cast<Eigen::Index>(b)).transpose();
        const double base = mahal_norm2(yb, p);
        for (std::size_t s = 0; s < n_pts; ++s) {
          const Vector2d r = pair_vector(dirs[s], p, yb);
          rho(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(b)) =
              base - r.dot(gram_inv[s] * r);
        }
      },
      opts.threads);

  const double h = st.h;
  auto grad_at = [&](Eigen::Index b, int level) {
    const double step = (level == 0) ? h : h / 2;
    VectorXd g(d);
    for (Eigen::Index i = 0; i < d; ++i)
      g[i] = (rho(st.axis(level, i, +1), b) - rho(st.axis(level, i, -1), b)) / (2 * step);
    return g;
  };
  auto hess_at = [&](Eigen::Index b, int level) {
    const double step = (level == 0) ? h : h / 2;
    MatrixXd hm(d, d);
    const double f0 = rho(0, b);
    for (Eigen::Index i = 0; i < d; ++i)
      hm(i, i) =
          (rho(st.axis(level, i, +1), b) - 2 * f0 + rho(st.axis(level, i, -1), b)) / (step * step);
    std::size_t pair_index = 0;
    for (Eigen::Index i = 0; i < d; ++i) {
      for (Eigen::Index j = i + 1; j < d; ++j, ++pair_index) {
        const double v = (rho(st.cross(level, pair_index, 0), b) -
                          rho(st.cross(level, pair_index, 1), b) -
                          rho(st.cross(level, pair_index, 2), b) +
                          rho(st.cross(level, pair_index, 3), b)) /
                         (4 * step * step);
        hm(i, j) = v;
        hm(j, i) = v;
      }
    }
    return hm;
  };

  MatrixXd h_hat = MatrixXd::Zero(d, d);
  MatrixXd outer = MatrixXd::Zero(d, d);
  VectorXd g_mean = VectorXd::Zero(d);
  std::vector<VectorXd> grads(b_count);
  for (Eigen::Index b = 0; b < b_count; ++b) {
    // Richardson extrapolation of the two step sizes.
    const VectorXd g = (4.0 * grad_at(b, 1) - grad_at(b, 0)) / 3.0;
    const MatrixXd hm = (4.0 * hess_at(b, 1) - hess_at(b, 0)) / 3.0;
    grads[b] = g;
    g_mean += g;
    h_hat += hm;
  }
  const double bd = static_cast<double>(b_count);
  h_hat /= bd;
  g_mean /= bd;
  for (Eigen::Index b = 0; b < b_count; ++b) {
    const VectorXd c = grads[b] - g_mean;
    outer += c * c.transpose();
  }
  MatrixXd g_hat = outer / bd;

  Eigen::FullPivLU<MatrixXd> lu(h_hat);
  if (!lu.isInvertible())
    throw SingularHessian("mean chart Hessian is singular at the fitted direction");
  const MatrixXd h_inv = lu.inverse();

  SandwichCov out;
  out.h_hat = 0.5 * (h_hat + h_hat.transpose());
  out.g_hat = 0.5 * (g_hat + g_hat.transpose());
  MatrixXd cov_beta = h_inv * out.g_hat * h_inv.transpose();
  out.cov_beta = 0.5 * (cov_beta + cov_beta.transpose());
  const MatrixXd jac = spectrum_jacobian(kappa_hat.rep());
  out.cov_I = jac * out.cov_beta * jac.transpose() / bd;
  return out;
}

Matrix2d profile_precision_gradient(const ProjectivePoint& kappa0, const Spd2& precision0) {
  const VectorXcd conj_k = kappa0.rep().conjugate();
  const Matrix2d w = pair_matrix(kappa0.rep(), precision0, kappa0.rep()).inverse();
  const Matrix2d a = pair_matrix(conj_k, w, conj_k);
  Matrix2d diag_a = Matrix2d::Zero();
  diag_a.diagonal() = a.diagonal();
  return -(2.0 * a - diag_a);
}

}  // namespace driftfit
