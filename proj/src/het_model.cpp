#include "driftfit/het_model.hpp"

#include <Eigen/Cholesky>

#include "driftfit/optim.hpp"

namespace driftfit {

namespace {

constexpr double kLog2Pi2 = 2.0 * 1.8378770664093454836;

Matrix2d phase_noise_outer(cdouble psi_b) {
  const Vector2d v = vec_of(cdouble(0, 1) * psi_b);
  return v * v.transpose();
}

Matrix2d batch_sigma_raw(const Matrix2d& sigma0, double sigma_tilde, cdouble psi_b) {
  return sigma0 + sigma_tilde * sigma_tilde * phase_noise_outer(psi_b);
}

/// Lower Cholesky factor of a 2x2 SPD matrix, kept as the primary
/// representation of the base covariance: forming L L^T destroys the small
/// diagonal entries whenever the off-diagonal factor is much larger, so all
/// determinant and precision formulas below work on the factors directly.
struct Chol2 {
  double l11 = 1.0, l21 = 0.0, l22 = 1.0;

  static Chol2 from_matrix(const Matrix2d& spd) {
    const double a = spd(0, 0);
    if (!(a > 0) || !std::isfinite(a))
      throw SingularSigma("covariance has a nonpositive leading entry");
    Chol2 c;
    c.l11 = std::sqrt(a);
    c.l21 = 0.5 * (spd(0, 1) + spd(1, 0)) / c.l11;
    c.l22 = std::sqrt(std::max(spd(1, 1) - c.l21 * c.l21, 0.0));
    return c;
  }

  Matrix2d matrix() const {
    Matrix2d m;
    m << l11 * l11, l11 * l21, l11 * l21, l21 * l21 + l22 * l22;
    return m;
  }

  /// adj(L L^T), assembled from the factors without cancellation.
  Matrix2d adjugate() const {
    Matrix2d a;
    a << l21 * l21 + l22 * l22, -l11 * l21, -l11 * l21, l11 * l11;
    return a;
  }

  double det() const { return (l11 * l22) * (l11 * l22); }
};

struct BatchPrecision {
  Matrix2d prec;
  double log_det;
};

/// Precision and log-determinant of L L^T + st^2 vec(i psi) vec(i psi)^T.
/// The 2x2 adjugate is linear, adj(vec(i psi) vec(i psi)^T) equals
/// vec(psi) vec(psi)^T, and the determinant expands into a sum of squares
///   det = (l11 l22)^2 + st^2 ((l21 v1 - l11 v2)^2 + l22^2 v1^2),
/// so no term can cancel even when the rank-1 part dominates.
BatchPrecision batch_precision(const Chol2& l0, double sigma_tilde, cdouble psi_b) {
  const double st2 = sigma_tilde * sigma_tilde;
  const Vector2d v = vec_of(cdouble(0, 1) * psi_b);  // rank-1 direction
  const Vector2d w = vec_of(psi_b);                  // its 2x2 adjugate direction
  const double cross = l0.l21 * v[0] - l0.l11 * v[1];
  const double det =
      l0.det() + st2 * (cross * cross + (l0.l22 * v[0]) * (l0.l22 * v[0]));
  if (!(det > 0) || !std::isfinite(det))
    throw SingularSigma("batch covariance is not positive definite");
  BatchPrecision out;
  out.prec = (l0.adjugate() + st2 * (w * w.transpose())) / det;
  out.log_det = std::log(det);
  return out;
}

BatchPrecision batch_precision(const Matrix2d& sigma0, double sigma_tilde, cdouble psi_b) {
  return batch_precision(Chol2::from_matrix(sigma0), sigma_tilde, psi_b);
}

/// -2 * (log-likelihood contribution of one batch), given its residual row.
double batch_neg2_loglik(const VectorXcd& resid, const BatchPrecision& bp) {
  const double n_freq = static_cast<double>(resid.size());
  return mahal_inner(resid, bp.prec, resid) + n_freq * (bp.log_det + kLog2Pi2);
}

double loglik_factors(const MatrixXcd& y, const VectorXcd& psi, const VectorXcd& phi,
                      const VectorXcd& kbreve, double sigma_tilde, const Chol2& l0) {
  double neg2 = 0.0;
  for (Eigen::Index b = 0; b < y.rows(); ++b) {
    const VectorXcd resid =
        y.row(b).transpose() - psi[b] * VectorXcd::Ones(y.cols()) - phi[b] * kbreve;
    neg2 += batch_neg2_loglik(resid, batch_precision(l0, sigma_tilde, psi[b]));
  }
  return -0.5 * neg2;
}

/// Gradient of the log likelihood in (sigma_tilde, l11, l21, l22) with the
/// drift parameters held fixed.
Eigen::Vector4d noise_gradient_factors(const MatrixXcd& y, const VectorXcd& psi,
                                       const VectorXcd& phi, const VectorXcd& kbreve,
                                       double sigma_tilde, const Chol2& l0) {
  const double n_freq = static_cast<double>(y.cols());
  Matrix2d grad_sigma0 = Matrix2d::Zero();
  double grad_sigma_tilde = 0.0;
  for (Eigen::Index b = 0; b < y.rows(); ++b) {
    const VectorXcd resid =
        y.row(b).transpose() - psi[b] * VectorXcd::Ones(y.cols()) - phi[b] * kbreve;
    const Matrix2d p = batch_precision(l0, sigma_tilde, psi[b]).prec;
    Matrix2d s = Matrix2d::Zero();
    for (Eigen::Index v = 0; v < resid.size(); ++v) {
      const Vector2d r = vec_of(resid[v]);
      s += r * r.transpose();
    }
    const Matrix2d dl_dsigma = 0.5 * (p * s * p) - 0.5 * n_freq * p;
    grad_sigma0 += dl_dsigma;
    grad_sigma_tilde +=
        2.0 * sigma_tilde * (dl_dsigma.cwiseProduct(phase_noise_outer(psi[b]))).sum();
  }
  // Chain rule through sigma0 = L L^T: d/dl_ij = 2 (grad_sigma0 * L)_ij.
  Matrix2d lm;
  lm << l0.l11, 0.0, l0.l21, l0.l22;
  const Matrix2d gl = 2.0 * grad_sigma0 * lm;
  return {grad_sigma_tilde, gl(0, 0), gl(1, 0), gl(1, 1)};
}

MatrixXcd residual_matrix(const MatrixXcd& y, const VectorXcd& psi, const VectorXcd& phi,
                          const VectorXcd& kbreve) {
  MatrixXcd r = y;
  for (Eigen::Index b = 0; b < y.rows(); ++b)
    r.row(b) -= psi[b] * Eigen::RowVectorXcd::Ones(y.cols()) + phi[b] * kbreve.transpose();
  return r;
}

}  // namespace

Spd2 batch_covariance(const HetParams& params, Eigen::Index b) {
  if (b < 0 || b >= params.psi.size()) throw IndexOutOfRange("batch index out of range");
  return Spd2(batch_sigma_raw(params.sigma0, params.sigma_tilde, params.psi[b]));
}

double het_loglik(const MatrixXcd& y, const HetParams& params) {
  const Eigen::Index b_count = y.rows();
  if (params.psi.size() != b_count || params.phi.size() != b_count ||
      params.kappa.size() != y.cols())
    throw DimensionMismatch("parameter lengths do not match data");
  const VectorXcd kbreve = params.kappa.array() + params.c;
  double neg2 = 0.0;
  for (Eigen::Index b = 0; b < b_count; ++b) {
    const VectorXcd resid = y.row(b).transpose() - params.psi[b] * VectorXcd::Ones(y.cols()) -
                            params.phi[b] * kbreve;
    neg2 += batch_neg2_loglik(resid,
                              batch_precision(params.sigma0, params.sigma_tilde, params.psi[b]));
  }
  return -0.5 * neg2;
}

Eigen::Vector4d het_noise_gradient(const MatrixXcd& y, const HetParams& params) {
  if (params.psi.size() != y.rows() || params.phi.size() != y.rows() ||
      params.kappa.size() != y.cols())
    throw DimensionMismatch("parameter lengths do not match data");
  const VectorXcd kbreve = params.kappa.array() + params.c;
  return noise_gradient_factors(y, params.psi, params.phi, kbreve, params.sigma_tilde,
                                Chol2::from_matrix(params.sigma0));
}

namespace {

struct NoiseState {
  double sigma_tilde = 0.0;
  Chol2 l0;
};

/// OLS of per-batch residual second-moment matrices on the phase-noise outer
/// products; shared scalar slope, matrix intercept.
NoiseState init_noise_regression(const MatrixXcd& resid, const VectorXcd& psi, double delta,
                                 std::vector<std::string>& warnings) {
  const Eigen::Index b_count = resid.rows();
  const double n_freq = static_cast<double>(resid.cols());

  std::vector<Matrix2d> s(b_count), v(b_count);
  Matrix2d s_mean = Matrix2d::Zero(), v_mean = Matrix2d::Zero();
  for (Eigen::Index b = 0; b < b_count; ++b) {
    Matrix2d acc = Matrix2d::Zero();
    for (Eigen::Index j = 0; j < resid.cols(); ++j) {
      const Vector2d r = vec_of(resid(b, j));
      acc += r * r.transpose();
    }
    s[b] = acc / n_freq;
    v[b] = phase_noise_outer(psi[b]);
    s_mean += s[b];
    v_mean += v[b];
  }
  s_mean /= static_cast<double>(b_count);
  v_mean /= static_cast<double>(b_count);

  // Three free entries per symmetric matrix: (0,0), (0,1), (1,1).
  double num = 0.0, den = 0.0;
  const int idx[3][2] = {{0, 0}, {0, 1}, {1, 1}};
  for (Eigen::Index b = 0; b < b_count; ++b) {
    for (const auto& ij : idx) {
      const double dv = v[b](ij[0], ij[1]) - v_mean(ij[0], ij[1]);
      const double ds = s[b](ij[0], ij[1]) - s_mean(ij[0], ij[1]);
      num += dv * ds;
      den += dv * dv;
    }
  }
  // Keep the slope only when it is clearly resolved: with an essentially
  // constant batch mean the regressor variation is estimation noise and the
  // fitted slope is an arbitrary split of a flat likelihood ridge, so the
  // nested model is the right starting point.
  double slope = (den > 0) ? num / den : 0.0;
  if (slope != 0.0) {
    double rss = 0.0;
    for (Eigen::Index b = 0; b < b_count; ++b) {
      for (const auto& ij : idx) {
        const double dv = v[b](ij[0], ij[1]) - v_mean(ij[0], ij[1]);
        const double ds = s[b](ij[0], ij[1]) - s_mean(ij[0], ij[1]);
        rss += (ds - slope * dv) * (ds - slope * dv);
      }
    }
    const double dof = std::max(3.0 * static_cast<double>(b_count) - 4.0, 1.0);
    const double slope_se = std::sqrt(rss / dof / den);
    if (slope < 2.0 * slope_se) {
      if (slope < 0)
        warnings.push_back("phase-noise regression gave a negative variance slope; clamped to 0");
      else if (slope > 0)
        warnings.push_back("phase-noise variance slope not resolved; starting at 0");
      slope = 0.0;
    }
  }
  NoiseState st;
  st.sigma_tilde = std::sqrt(slope);
  Matrix2d intercept = s_mean - slope * v_mean;
  const double floor = std::max(delta, 1e-12 * std::abs(intercept.trace()));
  Eigen::SelfAdjointEigenSolver<Matrix2d> es(0.5 * (intercept + intercept.transpose()));
  st.l0 = Chol2::from_matrix(es.eigenvectors() * es.eigenvalues().cwiseMax(floor).asDiagonal() *
                             es.eigenvectors().transpose());
  return st;
}

}  // namespace

HetFitReport fit_het(const MatrixXcd& y, const HetFitOptions& opts) {
  const Eigen::Index b_count = y.rows();
  const Eigen::Index n_freq = y.cols();
  if (b_count < 2) throw InvalidDimension("need at least 2 batches");
  if (n_freq < 3) throw InvalidDimension("need at least 3 frequencies");

  HetFitReport report;

  VectorXcd psi, phi, kbreve;
  NoiseState noise;
  if (opts.warm_start) {
    const HetParams& w = *opts.warm_start;
    if (w.psi.size() != b_count || w.phi.size() != b_count || w.kappa.size() != n_freq)
      throw DimensionMismatch("warm-start parameter lengths do not match data");
    psi = w.psi;
    phi = w.phi;
    kbreve = w.kappa.array() + w.c;
    noise.sigma_tilde = w.sigma_tilde;
    noise.l0 = Chol2::from_matrix(clamp_spd(w.sigma0, 1e-14));
  } else {
    FitOptions hom_opts;
    hom_opts.maxiter = opts.maxiter;
    hom_opts.min_delta_loglik = opts.min_delta_loglik;
    const FitReport hom = fit_hom(y, hom_opts);
    report.warnings = hom.warnings;
    psi = hom.params.psi;
    phi = hom.params.phi;
    kbreve = hom.params.kappa;  // spectrum mean starts at zero
    const MatrixXcd resid0 = residual_matrix(y, psi, phi, kbreve);
    noise = init_noise_regression(resid0, psi, opts.delta, report.warnings);
  }

  const double sqrt_delta = std::sqrt(opts.delta);
  const Eigen::Vector4d lower(0.0, sqrt_delta, -std::numeric_limits<double>::infinity(),
                              sqrt_delta);
  const Eigen::Vector4d upper = Eigen::Vector4d::Constant(std::numeric_limits<double>::infinity());

  int k = 0;
  for (; k < opts.maxiter; ++k) {
    const double ll = loglik_factors(y, psi, phi, kbreve, noise.sigma_tilde, noise.l0);
    report.loglik_trace.push_back(ll);
    if (k > 0 && ll - report.loglik_trace[k - 1] < opts.min_delta_loglik) {
      report.converged = true;
      break;
    }

    // Noise parameters by bounded quasi-Newton with the analytic gradient.
    {
      Eigen::VectorXd theta0(4);
      theta0 << noise.sigma_tilde, std::max(noise.l0.l11, sqrt_delta), noise.l0.l21,
          std::max(noise.l0.l22, sqrt_delta);
      auto unpack = [](const Eigen::VectorXd& th) {
        NoiseState st;
        st.sigma_tilde = th[0];
        st.l0.l11 = th[1];
        st.l0.l21 = th[2];
        st.l0.l22 = th[3];
        return st;
      };
      auto objective = [&](const Eigen::VectorXd& th) {
        const NoiseState st = unpack(th);
        return -loglik_factors(y, psi, phi, kbreve, st.sigma_tilde, st.l0);
      };
      auto gradient = [&](const Eigen::VectorXd& th) -> Eigen::VectorXd {
        const NoiseState st = unpack(th);
        return -noise_gradient_factors(y, psi, phi, kbreve, st.sigma_tilde, st.l0);
      };
      LbfgsbOptions lopts;
      lopts.max_iter = opts.lbfgs_max_iter;
      const OptimResult r = lbfgsb_minimize(objective, gradient, theta0, lower, upper, lopts);
      noise = unpack(r.x);
    }

    // Per-batch precisions for the generalized least squares updates.
    std::vector<Matrix2d> prec(b_count);
    for (Eigen::Index b = 0; b < b_count; ++b)
      prec[b] = batch_precision(noise.l0, noise.sigma_tilde, psi[b]).prec;

    // phi: per-batch closed form.
    for (Eigen::Index b = 0; b < b_count; ++b) {
      const VectorXcd yb = y.row(b).transpose() - psi[b] * VectorXcd::Ones(n_freq);
      const Matrix2d gram = pair_matrix(kbreve, prec[b], kbreve);
      if (!(gram.determinant() > 1e-300)) throw ZeroDirection("kappa update ill-posed");
      phi[b] = comp_of(gram.inverse() * pair_vector(kbreve, prec[b], yb));
    }

    // kappa + c: per-frequency closed form with batch-dependent weights.
    for (Eigen::Index v = 0; v < n_freq; ++v) {
      Matrix2d gram = Matrix2d::Zero();
      Vector2d rhs = Vector2d::Zero();
      for (Eigen::Index b = 0; b < b_count; ++b) {
        const Matrix2d mb = mat_of(phi[b]);
        gram += mb.transpose() * prec[b] * mb;
        rhs += mb.transpose() * (prec[b] * vec_of(y(b, v) - psi[b]));
      }
      if (!(gram.determinant() > 1e-300)) throw ZeroDirection("phi is numerically zero");
      kbreve[v] = comp_of(gram.inverse() * rhs);
    }

    // Renormalize so the centered part of kappa+c has unit norm.
    const cdouble kmean = kbreve.mean();
    const double r_hat = std::sqrt((kbreve.array() - kmean).matrix().squaredNorm());
    if (!(r_hat > 0)) throw DegenerateData("spectrum direction collapsed");
    phi *= r_hat;
    kbreve /= r_hat;

    // psi: the likelihood separates over batches; each term is a 2-d
    // derivative-free problem because sigma_b depends on psi_b.
    NelderMeadOptions nm;
    nm.max_evals = opts.simplex_max_evals;
    for (Eigen::Index b = 0; b < b_count; ++b) {
      const VectorXcd row = y.row(b).transpose();
      const VectorXcd signal = phi[b] * kbreve;
      auto objective = [&](const Eigen::VectorXd& x) {
        const cdouble psi_b(x[0], x[1]);
        const VectorXcd resid = row - psi_b * VectorXcd::Ones(n_freq) - signal;
        return batch_neg2_loglik(resid, batch_precision(noise.l0, noise.sigma_tilde, psi_b));
      };
      const Eigen::Vector2d start(psi[b].real(), psi[b].imag());
      const OptimResult r = nelder_mead_minimize(objective, start, nm);
      psi[b] = cdouble(r.x[0], r.x[1]);
    }

    // Spectrum-mean re-centering: moves mean between kappa+c and psi leaving
    // residuals unchanged, so only the covariances move.
    if (k >= opts.start_c_opt) {
      const MatrixXcd resid = residual_matrix(y, psi, phi, kbreve);
      auto objective = [&](const Eigen::VectorXd& x) {
        const cdouble dc(x[0], x[1]);
        double neg2 = 0.0;
        for (Eigen::Index b = 0; b < b_count; ++b) {
          const cdouble psi_b = psi[b] - dc * phi[b];
          neg2 += batch_neg2_loglik(resid.row(b).transpose(),
                                    batch_precision(noise.l0, noise.sigma_tilde, psi_b));
        }
        return neg2;
      };
      NelderMeadOptions nm_c;
      nm_c.max_evals = opts.simplex_max_evals;
      const OptimResult r = nelder_mead_minimize(objective, Eigen::Vector2d::Zero(), nm_c);
      const cdouble dc(r.x[0], r.x[1]);
      psi -= dc * phi;
      kbreve.array() += dc;
    }
  }
  report.n_iter = k;

  // Decompose kappa+c and fix the serialization gauge.
  cdouble c = kbreve.mean();
  VectorXcd kappa = kbreve.array() - c;
  const double nrm = kappa.norm();
  kappa /= nrm;
  phi *= nrm;
  c /= nrm;
  Eigen::Index imax = 0;
  kappa.cwiseAbs().maxCoeff(&imax);
  const cdouble rot = std::conj(kappa[imax]) / std::abs(kappa[imax]);
  kappa *= rot;
  c *= rot;
  phi *= std::conj(rot);

  report.params.psi = psi;
  report.params.phi = phi;
  report.params.kappa = kappa;
  report.params.c = c;
  report.params.sigma_tilde = noise.sigma_tilde;
  report.params.sigma0 = noise.l0.matrix();
  report.boundary_warning =
      Eigen::SelfAdjointEigenSolver<Matrix2d>(report.params.sigma0).eigenvalues()[0] <
      opts.delta * (1.0 + 1e-6);
  return report;
}

double boundary_sequence_loglik_logk(const MatrixXcd& y, double log_k) {
  const Eigen::Index b_count = y.rows();
  const Eigen::Index n_freq = y.cols();
  if (b_count < 1 || n_freq < 1) throw EmptyData("empty data matrix");
  if (y.cwiseAbs().maxCoeff() == 0.0) throw DegenerateFirstBatch("data matrix is zero");
  const cdouble psi1 = y.row(0).mean();
  if (std::abs(psi1) == 0.0)
    throw DegenerateFirstBatch("first batch has zero row sum");

  const double n = static_cast<double>(n_freq);
  const double abs_psi1 = std::abs(psi1);

  // First batch: residuals are zero by construction; only the collapsing
  // covariance determinant contributes.
  const double term1 =
      0.5 * n * (log_k - std::log(2.0 * std::pow(abs_psi1, 4))) - n * std::log(2.0 * M_PI);

  // Remaining batches: identity-like covariance |psi1|^2 Id and residuals
  // converging as k grows.
  const double shrink = (log_k > 40.0) ? 1.0 : std::sqrt(1.0 - std::exp(-log_k));
  const VectorXcd kappa_dir = y.row(0).transpose().array() - psi1;
  double total = term1;
  for (Eigen::Index b = 1; b < b_count; ++b) {
    double quad = 0.0;
    for (Eigen::Index v = 0; v < n_freq; ++v) {
      const cdouble r = y(b, v) + cdouble(0, 1) * shrink * psi1 + cdouble(0, 1) * kappa_dir[v];
      quad += std::norm(r);
    }
    total += -0.5 * (quad / (abs_psi1 * abs_psi1) +
                     n * (std::log(std::pow(abs_psi1, 4)) + kLog2Pi2));
  }
  return total;
}

double boundary_kstar_log(double loglik_fit, const MatrixXcd& y) {
  const double half_n = 0.5 * static_cast<double>(y.cols());
  double log_k = 50.0;
  for (int it = 0; it < 8; ++it) {
    const double offset = boundary_sequence_loglik_logk(y, log_k) - half_n * log_k;
    log_k = (loglik_fit - offset) / half_n;
  }
  return log_k;
}

TruncationCheck truncation_check(const HetParams& params) {
  TruncationCheck out;
  out.min_marginal = std::numeric_limits<double>::infinity();
  out.max_quadratic = 0.0;
  const double st2 = params.sigma_tilde * params.sigma_tilde;
  for (Eigen::Index b = 0; b < params.psi.size(); ++b) {
    const double a = std::abs(params.psi[b]);
    if (a == 0.0) continue;
    const Vector2d dir = vec_of(params.psi[b] / a);
    out.min_marginal = std::min(out.min_marginal, double(dir.transpose() * params.sigma0 * dir));
    out.max_quadratic = std::max(out.max_quadratic, 0.5 * a * a * st2 * st2);
  }
  out.ratio = (out.max_quadratic > 0) ? out.min_marginal / out.max_quadratic
                                      : std::numeric_limits<double>::infinity();
  return out;
}

}  // namespace driftfit
