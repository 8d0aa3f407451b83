#include "driftfit/hom_model.hpp"

#include <Eigen/SVD>

namespace driftfit {

namespace {

constexpr double kLog2Pi2 = 2.0 * 1.8378770664093454836;  // log((2*pi)^2)

Matrix2d regularized_sigma(const Matrix2d& sigma) {
  const double tr = sigma.trace();
  if (!(tr > 0)) return 1e-30 * Matrix2d::Identity();
  return clamp_spd(sigma, 1e-14);
}

}  // namespace

double hom_loglik(const MatrixXcd& yc, const HomParams& params) {
  const Eigen::Index b_count = yc.rows();
  const Eigen::Index n_freq = yc.cols();
  if (params.phi.size() != b_count || params.kappa.size() != n_freq)
    throw DimensionMismatch("parameter lengths do not match data");
  const Spd2 sigma(params.sigma);
  const Matrix2d p = sigma.inverse().matrix();

  double quad = 0.0;
  for (Eigen::Index b = 0; b < b_count; ++b) {
    const VectorXcd resid = yc.row(b).transpose() - params.phi[b] * params.kappa;
    quad += mahal_inner(resid, p, resid);
  }
  const double nobs = static_cast<double>(b_count) * static_cast<double>(n_freq);
  return -0.5 * nobs * (kLog2Pi2 + sigma.log_det()) - 0.5 * quad;
}

VectorXcd kappa_mle(const VectorXcd& phi, const Spd2& precision, const MatrixXcd& yc) {
  if (phi.size() != yc.rows()) throw DimensionMismatch("phi length does not match batches");
  const Matrix2d gram = pair_matrix(phi, precision, phi);
  if (!(gram.determinant() > 1e-300))
    throw ZeroDirection("phi is numerically zero; kappa update undefined");
  const Matrix2d gram_inv = gram.inverse();
  const Matrix2d p = precision.matrix();

  VectorXcd kappa(yc.cols());
  for (Eigen::Index v = 0; v < yc.cols(); ++v) {
    Vector2d rhs = Vector2d::Zero();
    for (Eigen::Index b = 0; b < yc.rows(); ++b)
      rhs += mat_of(phi[b]).transpose() * (p * vec_of(yc(b, v)));
    kappa[v] = comp_of(gram_inv * rhs);
  }
  return kappa;
}

VectorXcd phi_mle(const VectorXcd& kappa, const Spd2& precision, const MatrixXcd& yc) {
  if (kappa.size() != yc.cols()) throw DimensionMismatch("kappa length does not match frequencies");
  const Matrix2d gram = pair_matrix(kappa, precision, kappa);
  if (!(gram.determinant() > 1e-300))
    throw ZeroDirection("kappa is numerically zero; phi update undefined");
  const Matrix2d gram_inv = gram.inverse();

  VectorXcd phi(yc.rows());
  for (Eigen::Index b = 0; b < yc.rows(); ++b) {
    const Vector2d rhs = pair_vector(kappa, precision, yc.row(b).transpose());
    phi[b] = comp_of(gram_inv * rhs);
  }
  return phi;
}

Matrix2d sigma_mle(const VectorXcd& phi, const VectorXcd& kappa, const MatrixXcd& yc) {
  if (phi.size() != yc.rows() || kappa.size() != yc.cols())
    throw DimensionMismatch("parameter lengths do not match data");
  Matrix2d acc = Matrix2d::Zero();
  for (Eigen::Index b = 0; b < yc.rows(); ++b) {
    for (Eigen::Index v = 0; v < yc.cols(); ++v) {
      const Vector2d r = vec_of(yc(b, v) - phi[b] * kappa[v]);
      acc += r * r.transpose();
    }
  }
  return acc / (static_cast<double>(yc.rows()) * static_cast<double>(yc.cols()));
}

void fix_phase_gauge(VectorXcd& kappa, VectorXcd& phi) {
  Eigen::Index imax = 0;
  kappa.cwiseAbs().maxCoeff(&imax);
  if (std::abs(kappa[imax]) == 0.0) return;
  const cdouble rot = std::conj(kappa[imax]) / std::abs(kappa[imax]);
  kappa *= rot;
  phi *= std::conj(rot);
}

FitReport fit_hom(const MatrixXcd& y, const FitOptions& opts) {
  const Eigen::Index b_count = y.rows();
  const Eigen::Index n_freq = y.cols();
  if (b_count == 0 || n_freq == 0) throw EmptyData("empty data matrix");
  if (b_count < 2) throw InvalidDimension("need at least 2 batches");
  if (n_freq < 3) throw InvalidDimension("need at least 3 frequencies");

  FitReport report;
  VectorXcd psi = y.rowwise().mean();
  MatrixXcd yc = y;
  yc.colwise() -= psi;

  VectorXcd phi, kappa;
  if (opts.init_phi && opts.init_kappa) {
    phi = *opts.init_phi;
    kappa = *opts.init_kappa;
    if (phi.size() != b_count || kappa.size() != n_freq)
      throw DimensionMismatch("warm-start parameter lengths do not match data");
  } else {
    Eigen::JacobiSVD<MatrixXcd> svd(yc, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const double eta = svd.singularValues()[0];
    if (!(eta > 0)) throw DegenerateData("centered data matrix has rank zero");
    if (svd.singularValues().size() > 1 &&
        svd.singularValues()[1] > eta * (1.0 - 1e-12))
      report.warnings.push_back("leading singular values nearly tied; rank-1 start is ambiguous");
    phi = eta * svd.matrixU().col(0);
    kappa = svd.matrixV().col(0).conjugate();
  }

  Matrix2d sigma = opts.sigma_known.value_or(opts.init_sigma.value_or(Matrix2d::Identity()));
  const bool sigma_fixed = opts.sigma_known.has_value();
  if (sigma_fixed) sigma = Spd2(sigma).matrix();

  const double data_scale =
      yc.squaredNorm() / (static_cast<double>(b_count) * static_cast<double>(n_freq));
  int k = 0;
  for (; k < opts.maxiter; ++k) {
    if (!sigma_fixed) {
      const Matrix2d raw = sigma_mle(phi, kappa, yc);
      sigma = regularized_sigma(raw);
      if (raw.trace() <= 1e-26 * data_scale) {
        // Exact rank-1 fit: the likelihood diverges as the covariance
        // collapses, so stop at the clamped value.
        HomParams cur{psi, phi, kappa, sigma};
        report.loglik_trace.push_back(hom_loglik(yc, cur));
        report.converged = true;
        ++k;
        break;
      }
    }
    const Spd2 prec = Spd2(sigma).inverse();
    phi = phi_mle(kappa, prec, yc);
    kappa = kappa_mle(phi, prec, yc);
    const double nrm = kappa.norm();
    if (!(nrm > 0)) throw DegenerateData("kappa collapsed to zero during iteration");
    kappa /= nrm;
    phi *= nrm;

    HomParams cur{psi, phi, kappa, sigma};
    const double ll = hom_loglik(yc, cur);
    report.loglik_trace.push_back(ll);
    if (k > 0 && ll - report.loglik_trace[k - 1] < opts.min_delta_loglik) {
      report.converged = true;
      ++k;
      break;
    }
  }
  report.n_iter = k;

  // Identifiability normalization: mean-zero kappa (already near zero for
  // row-centered data), unit norm, reproducible phase.
  const cdouble mean = kappa.mean();
  kappa.array() -= mean;
  const double nrm = kappa.norm();
  if (!(nrm > 0)) throw DegenerateData("kappa collapsed to zero after centering");
  kappa /= nrm;
  phi *= nrm;
  fix_phase_gauge(kappa, phi);

  report.params = HomParams{psi, phi, kappa, sigma};
  return report;
}

VectorXcd fit_centered_known_precision(const MatrixXcd& yc, const Spd2& precision,
                                       int maxiter, double tol) {
  if (yc.rows() < 2 || yc.cols() < 2) throw InvalidDimension("need at least a 2x2 matrix");
  Eigen::JacobiSVD<MatrixXcd> svd(yc, Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (!(svd.singularValues()[0] > 0)) throw DegenerateData("rank-zero matrix");
  VectorXcd phi = svd.singularValues()[0] * svd.matrixU().col(0);
  VectorXcd kappa = svd.matrixV().col(0).conjugate();

  for (int k = 0; k < maxiter; ++k) {
    phi = phi_mle(kappa, precision, yc);
    VectorXcd next = kappa_mle(phi, precision, yc);
    next /= next.norm();
    const double step = proj_distance(ProjectivePoint(next), ProjectivePoint(kappa));
    kappa = next;
    if (step < tol) break;
  }
  return kappa;
}

}  // namespace driftfit
