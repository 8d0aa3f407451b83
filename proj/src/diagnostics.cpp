#include "driftfit/diagnostics.hpp"

#include <algorithm>
#include <cmath>

#include "driftfit/averaging.hpp"

namespace driftfit {

void FlatRegions::validate(Eigen::Index n_freq) const {
  if (intervals.empty()) throw RegionOutOfRange("no flat regions given");
  auto sorted = intervals;
  std::sort(sorted.begin(), sorted.end());
  Eigen::Index prev_end = -1;
  Eigen::Index total = 0;
  for (const auto& [lo, hi] : sorted) {
    if (lo < 0 || hi > n_freq || lo >= hi)
      throw RegionOutOfRange("flat region [" + std::to_string(lo) + ", " + std::to_string(hi) +
                             ") is out of range");
    if (lo < prev_end) throw RegionOutOfRange("flat regions overlap");
    prev_end = hi;
    total += hi - lo;
  }
  if (total == 0) throw RegionOutOfRange("flat regions have empty union");
}

std::vector<Eigen::Index> FlatRegions::indices(Eigen::Index n_freq) const {
  validate(n_freq);
  std::vector<Eigen::Index> out;
  for (const auto& [lo, hi] : intervals)
    for (Eigen::Index v = lo; v < hi; ++v) out.push_back(v);
  std::sort(out.begin(), out.end());
  return out;
}

StandardizedResiduals standardized_residuals(const MatrixXcd& y, const HomParams& params) {
  if (params.psi.size() != y.rows() || params.phi.size() != y.rows() ||
      params.kappa.size() != y.cols())
    throw DimensionMismatch("parameter lengths do not match data");
  const Matrix2d w = Spd2(params.sigma).inv_sqrt().matrix();
  StandardizedResiduals out;
  out.real.resize(y.rows(), y.cols());
  out.imag.resize(y.rows(), y.cols());
  for (Eigen::Index b = 0; b < y.rows(); ++b) {
    for (Eigen::Index v = 0; v < y.cols(); ++v) {
      const Vector2d r =
          w * vec_of(y(b, v) - params.psi[b] - params.phi[b] * params.kappa[v]);
      out.real(b, v) = r[0];
      out.imag(b, v) = r[1];
    }
  }
  return out;
}

StandardizedResiduals standardized_residuals(const MatrixXcd& y, const HetParams& params) {
  if (params.psi.size() != y.rows() || params.phi.size() != y.rows() ||
      params.kappa.size() != y.cols())
    throw DimensionMismatch("parameter lengths do not match data");
  StandardizedResiduals out;
  out.real.resize(y.rows(), y.cols());
  out.imag.resize(y.rows(), y.cols());
  for (Eigen::Index b = 0; b < y.rows(); ++b) {
    const Matrix2d w = batch_covariance(params, b).inv_sqrt().matrix();
    for (Eigen::Index v = 0; v < y.cols(); ++v) {
      const Vector2d r =
          w * vec_of(y(b, v) - params.psi[b] - params.phi[b] * (params.kappa[v] + params.c));
      out.real(b, v) = r[0];
      out.imag(b, v) = r[1];
    }
  }
  return out;
}

namespace {

double std_normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

/// Asymptotic Kolmogorov tail probability.  For large arguments the
/// alternating series 2 sum_j (-1)^{j-1} e^{-2 j^2 t^2} converges fast; for
/// small arguments it barely decays, so the theta-transformed series of the
/// CDF is used instead.  Both are truncated at 100 terms, which keeps the
/// error below 1e-10 across the switch point.
double kolmogorov_tail(double t) {
  if (t <= 0) return 1.0;
  if (t < 1.18) {
    const double f = M_PI * M_PI / (8.0 * t * t);
    double cdf = 0.0;
    for (int j = 1; j <= 100; ++j) {
      const double term = std::exp(-f * (2.0 * j - 1.0) * (2.0 * j - 1.0));
      cdf += term;
      if (term < 1e-16 * cdf && j > 3) break;
    }
    cdf *= std::sqrt(2.0 * M_PI) / t;
    return std::clamp(1.0 - cdf, 0.0, 1.0);
  }
  double sum = 0.0;
  for (int j = 1; j <= 100; ++j) {
    const double term = std::exp(-2.0 * j * j * t * t);
    sum += (j % 2 == 1) ? term : -term;
    if (term < 1e-16 && j > 3) break;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

}  // namespace

KsResult ks_test(const std::vector<double>& sample) {
  const int n = static_cast<int>(sample.size());
  if (n < 8) throw TooFewSamples("Kolmogorov-Smirnov test needs at least 8 samples");
  std::vector<double> sorted = sample;
  std::sort(sorted.begin(), sorted.end());

  double d = 0.0;
  for (int i = 0; i < n; ++i) {
    const double f = std_normal_cdf(sorted[i]);
    d = std::max(d, static_cast<double>(i + 1) / n - f);
    d = std::max(d, f - static_cast<double>(i) / n);
  }
  KsResult out;
  out.stat = d;
  out.n = n;
  out.p_value = kolmogorov_tail(std::sqrt(static_cast<double>(n)) * d);
  return out;
}

GofReport gof_test(const StandardizedResiduals& resid) {
  const auto pool = [](const MatrixXd& m) {
    return std::vector<double>(m.data(), m.data() + m.size());
  };
  GofReport out;
  out.real = ks_test(pool(resid.real));
  out.imag = ks_test(pool(resid.imag));
  return out;
}

double snr_flat_std(const VectorXd& spectrum, const FlatRegions& regions,
                    SnrNormalize normalize) {
  const auto idx = regions.indices(spectrum.size());
  VectorXd values = spectrum;
  if (normalize == SnrNormalize::MinMax) {
    const double lo = spectrum.minCoeff();
    const double hi = spectrum.maxCoeff();
    if (!(hi > lo)) throw DegenerateSpectrum("constant spectrum cannot be min-max rescaled");
    values = (spectrum.array() - lo) / (hi - lo);
  }
  if (idx.size() < 2) throw RegionOutOfRange("flat regions must cover at least 2 points");
  double mean = 0.0;
  for (const auto v : idx) mean += values[v];
  mean /= static_cast<double>(idx.size());
  double ss = 0.0;
  for (const auto v : idx) ss += (values[v] - mean) * (values[v] - mean);
  return std::sqrt(ss / static_cast<double>(idx.size() - 1));
}

ModelComparison compare_models(const MatrixXcd& y, const FlatRegions& regions,
                               bool include_het) {
  regions.validate(y.cols());
  ModelComparison out;

  {
    const AveragingSpectrum avg = averaging_spectrum(average(y));
    ModelComparisonEntry e;
    e.model = "averaging";
    e.spectrum = avg.I;  // already min-max normalized
    e.flat_std = snr_flat_std(avg.I, regions, SnrNormalize::None);
    out.entries.push_back(std::move(e));
  }
  {
    const FitReport fit = fit_hom(y);
    const SpectrumResult s = extract_spectrum(fit.params.kappa);
    ModelComparisonEntry e;
    e.model = "hom";
    e.flat_std = snr_flat_std(s.I, regions, SnrNormalize::MinMax);
    const double lo = s.I.minCoeff(), hi = s.I.maxCoeff();
    e.spectrum = (s.I.array() - lo) / (hi - lo);
    e.gof = gof_test(standardized_residuals(y, fit.params));
    out.entries.push_back(std::move(e));
  }
  if (include_het) {
    const HetFitReport fit = fit_het(y);
    const SpectrumResult s = extract_spectrum(fit.params.kappa);
    ModelComparisonEntry e;
    e.model = "het";
    e.flat_std = snr_flat_std(s.I, regions, SnrNormalize::MinMax);
    const double lo = s.I.minCoeff(), hi = s.I.maxCoeff();
    e.spectrum = (s.I.array() - lo) / (hi - lo);
    e.gof = gof_test(standardized_residuals(y, fit.params));
    out.entries.push_back(std::move(e));
  }
  return out;
}

}  // namespace driftfit
