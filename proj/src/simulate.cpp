#include "driftfit/simulate.hpp"

#include <algorithm>

#include "driftfit/parallel.hpp"
#include "driftfit/phase_extraction.hpp"
#include "driftfit/rng.hpp"

namespace driftfit {

namespace {

VectorXcd generate_series(const GeneratorSpec& gen, Eigen::Index b_count, Rng& rng) {
  VectorXcd out(b_count);
  switch (gen.kind) {
    case GeneratorSpec::Kind::Constant:
      out.setConstant(gen.value);
      break;
    case GeneratorSpec::Kind::RandomWalk: {
      cdouble cur = gen.value;
      for (Eigen::Index b = 0; b < b_count; ++b) {
        out[b] = cur;
        const double dphase = gen.phase_step * rng.normal();
        const double damp = gen.amp_step * rng.normal();
        cur *= std::exp(cdouble(damp, dphase));
      }
      break;
    }
    case GeneratorSpec::Kind::Vector:
      if (gen.values.size() != b_count)
        throw InvalidSpec("generator vector length does not match batch count");
      out = gen.values;
      break;
  }
  if (!out.allFinite()) throw InvalidSpec("generator produced non-finite values");
  return out;
}

/// Square root of a PSD 2x2 matrix; negative rounding is clipped so exact
/// zero-noise simulations are allowed.
Matrix2d psd_sqrt(const Matrix2d& m) {
  Eigen::SelfAdjointEigenSolver<Matrix2d> es(0.5 * (m + m.transpose()));
  const Vector2d lam = es.eigenvalues().cwiseMax(0.0);
  return es.eigenvectors() * lam.cwiseSqrt().asDiagonal() * es.eigenvectors().transpose();
}

VectorXd empirical_quantile(MatrixXd samples /*replicates x freq*/, double q) {
  VectorXd out(samples.cols());
  const Eigen::Index m = samples.rows();
  for (Eigen::Index v = 0; v < samples.cols(); ++v) {
    VectorXd col = samples.col(v);
    std::sort(col.data(), col.data() + m);
    const double pos = q * static_cast<double>(m - 1);
    const Eigen::Index lo = static_cast<Eigen::Index>(std::floor(pos));
    const Eigen::Index hi = std::min(lo + 1, m - 1);
    const double w = pos - static_cast<double>(lo);
    out[v] = (1.0 - w) * col[lo] + w * col[hi];
  }
  return out;
}

}  // namespace

VectorXcd synthetic_kappa(Eigen::Index n_plus_1) {
  if (n_plus_1 < 3) throw InvalidDimension("need at least 3 frequencies");
  VectorXcd k(n_plus_1);
  const double mid = 0.5 * static_cast<double>(n_plus_1 - 1);
  const double width = std::max(1.0, static_cast<double>(n_plus_1) / 8.0);
  for (Eigen::Index v = 0; v < n_plus_1; ++v) {
    const double t = (static_cast<double>(v) - mid) / width;
    const double peak = std::exp(-0.5 * t * t);
    const double wave = 0.25 * t * std::exp(-0.5 * t * t);  // odd companion component
    k[v] = cdouble(peak, wave);
  }
  k.array() -= k.mean();
  k /= k.norm();
  return k;
}

MatrixXcd simulate(const SimSpec& spec) {
  if (spec.b_count < 1) throw InvalidSpec("batch count must be positive");
  if (spec.n_plus_1 < 2) throw InvalidSpec("need at least 2 frequencies");
  if (spec.kappa0.size() != spec.n_plus_1)
    throw InvalidSpec("kappa0 length does not match the frequency count");
  if (std::abs(spec.kappa0.mean()) > 1e-6 || std::abs(spec.kappa0.norm() - 1.0) > 1e-6)
    throw InvalidSpec("kappa0 must be mean-zero and unit-norm");
  if (spec.noise.sigma_tilde < 0) throw InvalidSpec("sigma_tilde must be nonnegative");

  Rng rng(spec.seed);
  const VectorXcd psi = generate_series(spec.psi_gen, spec.b_count, rng);
  const VectorXcd phi = generate_series(spec.phi_gen, spec.b_count, rng);

  const bool het = spec.noise.model == NoiseSpec::Model::Het;
  const cdouble c = het ? spec.noise.c : cdouble(0, 0);
  const Matrix2d hom_half = psd_sqrt(spec.noise.sigma);

  MatrixXcd y(spec.b_count, spec.n_plus_1);
  for (Eigen::Index b = 0; b < spec.b_count; ++b) {
    Matrix2d half = hom_half;
    if (het) {
      const Vector2d dir = vec_of(cdouble(0, 1) * psi[b]);
      half = psd_sqrt(spec.noise.sigma0 +
                      spec.noise.sigma_tilde * spec.noise.sigma_tilde * dir * dir.transpose());
    }
    for (Eigen::Index v = 0; v < spec.n_plus_1; ++v) {
      const Vector2d g(rng.normal(), rng.normal());
      y(b, v) = psi[b] + phi[b] * (spec.kappa0[v] + c) + comp_of(half * g);
    }
  }
  return y;
}

// ---------------------------------------------------------------------------

namespace {

struct ReplicateOutcome {
  bool ok = false;
  VectorXd i, omega;
  Matrix2d sigma = Matrix2d::Zero();
  double phi_norm = 0.0;
};

template <typename SimulateFn, typename RefitFn>
std::vector<ReplicateOutcome> run_replicates(int count, std::uint64_t seed, int threads,
                                             const SimulateFn& sim, const RefitFn& refit) {
  std::vector<ReplicateOutcome> out(static_cast<std::size_t>(count));
  parallel_for(
      static_cast<std::size_t>(count),
      [&](std::size_t r) {
        Rng rng = Rng::substream(seed, r);
        const MatrixXcd y_star = sim(rng);
        try {
          out[r] = refit(y_star);
          out[r].ok = true;
        } catch (const Error&) {
          out[r].ok = false;
        }
      },
      threads);
  return out;
}

BootstrapResult assemble_bands(const std::vector<ReplicateOutcome>& outcomes,
                               const VectorXd& i_point, const VectorXd& omega_point,
                               const BootstrapOptions& opts) {
  const Eigen::Index n_freq = i_point.size();
  int ok_count = 0;
  for (const auto& o : outcomes)
    if (o.ok) ++ok_count;
  const int failures = static_cast<int>(outcomes.size()) - ok_count;
  if (failures > opts.max_failure_rate * static_cast<double>(outcomes.size()))
    throw RefitFailure("bootstrap refit failure rate " + std::to_string(failures) + "/" +
                       std::to_string(outcomes.size()) + " exceeds the allowed rate");
  if (ok_count < 2) throw RefitFailure("too few successful bootstrap replicates");

  MatrixXd i_samples(ok_count, n_freq), omega_samples(ok_count, n_freq);
  Matrix2d sigma_mean = Matrix2d::Zero();
  double phi_norm_mean = 0.0;
  int row = 0;
  for (const auto& o : outcomes) {
    if (!o.ok) continue;
    i_samples.row(row) = o.i.transpose();
    omega_samples.row(row) = o.omega.transpose();
    sigma_mean += o.sigma;
    phi_norm_mean += o.phi_norm;
    ++row;
  }
  sigma_mean /= ok_count;
  phi_norm_mean /= ok_count;

  const double q = 0.5 * (1.0 - opts.level);
  BootstrapResult res;
  res.replicates = ok_count;
  res.failures = failures;
  res.level = opts.level;
  res.i_point = i_point;
  res.omega_point = omega_point;
  res.i_lower = empirical_quantile(i_samples, q);
  res.i_upper = empirical_quantile(i_samples, 1.0 - q);
  res.omega_lower = empirical_quantile(omega_samples, q);
  res.omega_upper = empirical_quantile(omega_samples, 1.0 - q);
  res.replicate_sigma_mean = sigma_mean;
  res.replicate_phi_norm_mean = phi_norm_mean;
  return res;
}

}  // namespace

BootstrapResult parametric_bootstrap(const MatrixXcd& y, const FitReport& fit,
                                     const BootstrapOptions& opts) {
  if (!fit.converged) throw RefitFailure("bootstrap requires a converged fit");
  if (opts.replicates < 2) throw InvalidSpec("need at least 2 replicates");
  const Eigen::Index b_count = y.rows();
  const Eigen::Index n_freq = y.cols();
  const HomParams& p = fit.params;
  const SpectrumResult point = extract_spectrum(p.kappa);

  auto simulate_from = [&](const VectorXcd& phi_sim, const Matrix2d& sigma_sim, Rng& rng) {
    const Matrix2d half = psd_sqrt(sigma_sim);
    MatrixXcd ys(b_count, n_freq);
    for (Eigen::Index b = 0; b < b_count; ++b)
      for (Eigen::Index v = 0; v < n_freq; ++v) {
        const Vector2d g(rng.normal(), rng.normal());
        ys(b, v) = p.psi[b] + phi_sim[b] * p.kappa[v] + comp_of(half * g);
      }
    return ys;
  };

  auto refit = [&](const MatrixXcd& y_star) {
    FitOptions fopts;
    fopts.init_phi = p.phi;
    fopts.init_kappa = p.kappa;
    fopts.init_sigma = p.sigma;
    const FitReport r = fit_hom(y_star, fopts);
    ReplicateOutcome out;
    const SpectrumResult s = extract_spectrum(r.params.kappa);
    out.i = s.I;
    out.omega = s.omega;
    out.sigma = r.params.sigma;
    out.phi_norm = r.params.phi.norm();
    return out;
  };

  BootstrapBias bias;
  VectorXcd phi_sim = p.phi;
  Matrix2d sigma_sim = p.sigma;
  if (opts.bias_correct) {
    auto pilot = run_replicates(
        opts.pilot_replicates, opts.seed ^ 0x70696c6f74ULL, opts.threads,
        [&](Rng& rng) { return simulate_from(p.phi, p.sigma, rng); }, refit);
    Matrix2d sigma_mean = Matrix2d::Zero();
    double phi_mean = 0.0;
    int ok = 0;
    for (const auto& o : pilot) {
      if (!o.ok) continue;
      sigma_mean += o.sigma;
      phi_mean += o.phi_norm;
      ++ok;
    }
    if (ok < 2) throw RefitFailure("pilot bootstrap round failed");
    sigma_mean /= ok;
    phi_mean /= ok;
    bias.sigma_additive = sigma_mean - p.sigma;
    bias.phi_multiplicative = phi_mean / p.phi.norm();
    sigma_sim = clamp_spd(p.sigma - bias.sigma_additive);
    phi_sim = p.phi / bias.phi_multiplicative;
  }

  auto outcomes = run_replicates(
      opts.replicates, opts.seed, opts.threads,
      [&](Rng& rng) { return simulate_from(phi_sim, sigma_sim, rng); }, refit);
  BootstrapResult res = assemble_bands(outcomes, point.I, point.omega, opts);
  res.bias = bias;
  res.bias_corrected = opts.bias_correct;
  return res;
}

BootstrapResult parametric_bootstrap(const MatrixXcd& y, const HetFitReport& fit,
                                     const BootstrapOptions& opts) {
  if (!fit.converged) throw RefitFailure("bootstrap requires a converged fit");
  if (opts.replicates < 2) throw InvalidSpec("need at least 2 replicates");
  const Eigen::Index b_count = y.rows();
  const Eigen::Index n_freq = y.cols();
  const HetParams& p = fit.params;
  const SpectrumResult point = extract_spectrum(p.kappa);

  auto simulate_from = [&](const VectorXcd& phi_sim, const Matrix2d& sigma0_sim, Rng& rng) {
    MatrixXcd ys(b_count, n_freq);
    for (Eigen::Index b = 0; b < b_count; ++b) {
      const Vector2d dir = vec_of(cdouble(0, 1) * p.psi[b]);
      const Matrix2d half =
          psd_sqrt(sigma0_sim + p.sigma_tilde * p.sigma_tilde * dir * dir.transpose());
      for (Eigen::Index v = 0; v < n_freq; ++v) {
        const Vector2d g(rng.normal(), rng.normal());
        ys(b, v) = p.psi[b] + phi_sim[b] * (p.kappa[v] + p.c) + comp_of(half * g);
      }
    }
    return ys;
  };

  auto refit = [&](const MatrixXcd& y_star) {
    HetFitOptions hopts;
    hopts.warm_start = p;
    const HetFitReport r = fit_het(y_star, hopts);
    ReplicateOutcome out;
    const SpectrumResult s = extract_spectrum(r.params.kappa);
    out.i = s.I;
    out.omega = s.omega;
    out.sigma = r.params.sigma0;
    out.phi_norm = r.params.phi.norm();
    return out;
  };

  BootstrapBias bias;
  VectorXcd phi_sim = p.phi;
  Matrix2d sigma0_sim = p.sigma0;
  if (opts.bias_correct) {
    auto pilot = run_replicates(
        opts.pilot_replicates, opts.seed ^ 0x70696c6f74ULL, opts.threads,
        [&](Rng& rng) { return simulate_from(p.phi, p.sigma0, rng); }, refit);
    Matrix2d sigma_mean = Matrix2d::Zero();
    double phi_mean = 0.0;
    int ok = 0;
    for (const auto& o : pilot) {
      if (!o.ok) continue;
      sigma_mean += o.sigma;
      phi_mean += o.phi_norm;
      ++ok;
    }
    if (ok < 2) throw RefitFailure("pilot bootstrap round failed");
    sigma_mean /= ok;
    phi_mean /= ok;
    bias.sigma_additive = sigma_mean - p.sigma0;
    bias.phi_multiplicative = phi_mean / p.phi.norm();
    sigma0_sim = clamp_spd(p.sigma0 - bias.sigma_additive);
    phi_sim = p.phi / bias.phi_multiplicative;
  }

  auto outcomes = run_replicates(
      opts.replicates, opts.seed, opts.threads,
      [&](Rng& rng) { return simulate_from(phi_sim, sigma0_sim, rng); }, refit);
  BootstrapResult res = assemble_bands(outcomes, point.I, point.omega, opts);
  res.bias = bias;
  res.bias_corrected = opts.bias_correct;
  return res;
}

}  // namespace driftfit
