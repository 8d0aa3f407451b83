"""Drift-model fitting for batched complex measurement matrices.

Thin python layer over the C++ core: model fitting (averaging,
homoscedastic, heteroscedastic), spectrum extraction, parametric bootstrap
bands, plug-in CLT covariances and the Monte-Carlo validation suites.
"""

try:
    from . import _driftfit as _impl  # installed layout: extension inside the package
except ImportError:  # build-tree layout: extension on sys.path
    import _driftfit as _impl

AveragingSpectrum = _impl.AveragingSpectrum
BootstrapResult = _impl.BootstrapResult
DriftfitError = _impl.DriftfitError
FitReport = _impl.FitReport
HetFitReport = _impl.HetFitReport
HetParams = _impl.HetParams
HomParams = _impl.HomParams
KsResult = _impl.KsResult
SandwichCov = _impl.SandwichCov
SpectrumResult = _impl.SpectrumResult

average = _impl.average
averaging_spectrum = _impl.averaging_spectrum
batch_covariance = _impl.batch_covariance
extract_spectrum = _impl.extract_spectrum
fit_het = _impl.fit_het
fit_hom = _impl.fit_hom
helmert_matrix = _impl.helmert_matrix
helmertize = _impl.helmertize
het_loglik = _impl.het_loglik
ks_test = _impl.ks_test
parametric_bootstrap = _impl.parametric_bootstrap
profile_loss = _impl.profile_loss
profile_precision_gradient = _impl.profile_precision_gradient
proj_distance = _impl.proj_distance
read_csv = _impl.read_csv
sandwich_covariance = _impl.sandwich_covariance
simulate = _impl.simulate
snr_flat_std = _impl.snr_flat_std
spectrum_jacobian = _impl.spectrum_jacobian
standardized_residuals = _impl.standardized_residuals
synthetic_kappa = _impl.synthetic_kappa
validate_theory = _impl.validate_theory
write_csv = _impl.write_csv

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
