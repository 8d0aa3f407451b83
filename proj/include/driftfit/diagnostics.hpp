#pragma once

#include <optional>
#include <vector>

#include "driftfit/core.hpp"
#include "driftfit/het_model.hpp"
#include "driftfit/hom_model.hpp"

namespace driftfit {

/// Disjoint half-open index intervals [lo, hi) into the frequency axis where
/// the true spectrum is judged constant.
struct FlatRegions {
  std::vector<std::pair<Eigen::Index, Eigen::Index>> intervals;

  void validate(Eigen::Index n_freq) const;
  std::vector<Eigen::Index> indices(Eigen::Index n_freq) const;
};

/// Residual pairs whitened by the (per-batch, for the heteroscedastic model)
/// inverse symmetric square root of the fitted covariance; i.i.d. standard
/// normal components under a correct model.
struct StandardizedResiduals {
  MatrixXd real;  // batches x frequencies
  MatrixXd imag;
};

StandardizedResiduals standardized_residuals(const MatrixXcd& y, const HomParams& params);
StandardizedResiduals standardized_residuals(const MatrixXcd& y, const HetParams& params);

struct KsResult {
  double stat = 0.0;
  double p_value = 1.0;
  int n = 0;
};

/// One-sample Kolmogorov-Smirnov test against the standard normal, p-value
/// from the asymptotic Kolmogorov series.
KsResult ks_test(const std::vector<double>& sample);

struct GofReport {
  KsResult real;
  KsResult imag;
};

/// KS tests on the pooled real and imaginary standardized residuals.
GofReport gof_test(const StandardizedResiduals& resid);

enum class SnrNormalize { MinMax, None };

/// Sample standard deviation (n-1 divisor) of the spectrum over the flat
/// regions; with MinMax the whole spectrum is first rescaled to [0,1].
double snr_flat_std(const VectorXd& spectrum, const FlatRegions& regions,
                    SnrNormalize normalize = SnrNormalize::MinMax);

/// Side-by-side fit of the averaging and drift models on the same data.
struct ModelComparisonEntry {
  std::string model;
  VectorXd spectrum;  // min-max rescaled to [0,1]
  double flat_std = 0.0;
  std::optional<GofReport> gof;  // absent for the averaging model
};

struct ModelComparison {
  std::vector<ModelComparisonEntry> entries;
};

ModelComparison compare_models(const MatrixXcd& y, const FlatRegions& regions,
                               bool include_het = false);

}  // namespace driftfit
