#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "driftfit/averaging.hpp"
#include "driftfit/diagnostics.hpp"
#include "driftfit/frechet.hpp"
#include "driftfit/helmert.hpp"
#include "driftfit/het_model.hpp"
#include "driftfit/hom_model.hpp"
#include "driftfit/io.hpp"
#include "driftfit/phase_extraction.hpp"
#include "driftfit/simulate.hpp"
#include "driftfit/theory_validation.hpp"

namespace py = pybind11;
using namespace driftfit;

namespace {

GeneratorSpec generator_from_dict(const py::dict& d) {
  const std::string type = d["type"].cast<std::string>();
  if (type == "constant") return GeneratorSpec::constant(d["value"].cast<cdouble>());
  if (type == "random-walk")
    return GeneratorSpec::random_walk(d["start"].cast<cdouble>(),
                                      d.contains("phase_step") ? d["phase_step"].cast<double>() : 0.0,
                                      d.contains("amp_step") ? d["amp_step"].cast<double>() : 0.0);
  if (type == "vector") return GeneratorSpec::vector(d["values"].cast<VectorXcd>());
  throw InvalidSpec("unknown generator type " + type);
}

}  // namespace

PYBIND11_MODULE(_driftfit, m) {
  m.doc() = "Drift-model fitting for batched complex measurement matrices";

  py::register_exception<Error>(m, "DriftfitError");

  // ---- spectra ----
  py::class_<SpectrumResult>(m, "SpectrumResult")
      .def_readonly("I", &SpectrumResult::I)
      .def_readonly("omega", &SpectrumResult::omega)
      .def_readonly("lambda_opt", &SpectrumResult::lambda_opt)
      .def_readonly("flipped", &SpectrumResult::flipped);

  m.def("extract_spectrum", &extract_spectrum, py::arg("kappa"),
        "Phase-correct a unit direction with the maximum method and sign flip");
  m.def("spectrum_jacobian", &spectrum_jacobian, py::arg("kappa0"));
  m.def(
      "proj_distance",
      [](const VectorXcd& a, const VectorXcd& b) {
        return proj_distance(ProjectivePoint(a), ProjectivePoint(b));
      },
      py::arg("a"), py::arg("b"),
      "Quotient distance between unit directions modulo global phase");

  // ---- averaging ----
  py::class_<AveragingSpectrum>(m, "AveragingSpectrum")
      .def_readonly("I", &AveragingSpectrum::I)
      .def_readonly("omega", &AveragingSpectrum::omega)
      .def_readonly("lambda_", &AveragingSpectrum::lambda)
      .def_readonly("flipped", &AveragingSpectrum::flipped);
  m.def("average", &average, py::arg("y"));
  m.def(
      "averaging_spectrum",
      [](const VectorXcd& z, std::optional<double> lambda) {
        return averaging_spectrum(z, lambda);
      },
      py::arg("z"), py::arg("lambda") = std::nullopt);

  // ---- homoscedastic model ----
  py::class_<HomParams>(m, "HomParams")
      .def_readonly("psi", &HomParams::psi)
      .def_readonly("phi", &HomParams::phi)
      .def_readonly("kappa", &HomParams::kappa)
      .def_readonly("sigma", &HomParams::sigma);
  py::class_<FitReport>(m, "FitReport")
      .def_readonly("params", &FitReport::params)
      .def_readonly("loglik_trace", &FitReport::loglik_trace)
      .def_readonly("n_iter", &FitReport::n_iter)
      .def_readonly("converged", &FitReport::converged)
      .def_readonly("warnings", &FitReport::warnings)
      .def_property_readonly("loglik", &FitReport::loglik);
  m.def(
      "fit_hom",
      [](const MatrixXcd& y, int maxiter, double min_delta_loglik,
         std::optional<Matrix2d> sigma_known) {
        FitOptions opts;
        opts.maxiter = maxiter;
        opts.min_delta_loglik = min_delta_loglik;
        opts.sigma_known = sigma_known;
        return fit_hom(y, opts);
      },
      py::arg("y"), py::arg("maxiter") = 200, py::arg("min_delta_loglik") = 1e-4,
      py::arg("sigma_known") = std::nullopt,
      "Iterative maximum likelihood fit of the homoscedastic drift model");

  // ---- heteroscedastic model ----
  py::class_<HetParams>(m, "HetParams")
      .def_readonly("psi", &HetParams::psi)
      .def_readonly("phi", &HetParams::phi)
      .def_readonly("kappa", &HetParams::kappa)
      .def_readonly("c", &HetParams::c)
      .def_readonly("sigma_tilde", &HetParams::sigma_tilde)
      .def_readonly("sigma0", &HetParams::sigma0);
  py::class_<HetFitReport>(m, "HetFitReport")
      .def_readonly("params", &HetFitReport::params)
      .def_readonly("loglik_trace", &HetFitReport::loglik_trace)
      .def_readonly("n_iter", &HetFitReport::n_iter)
      .def_readonly("converged", &HetFitReport::converged)
      .def_readonly("boundary_warning", &HetFitReport::boundary_warning)
      .def_readonly("warnings", &HetFitReport::warnings)
      .def_property_readonly("loglik", &HetFitReport::loglik);
  m.def(
      "fit_het",
      [](const MatrixXcd& y, int maxiter, double min_delta_loglik, int start_c_opt,
         double delta) {
        HetFitOptions opts;
        opts.maxiter = maxiter;
        opts.min_delta_loglik = min_delta_loglik;
        opts.start_c_opt = start_c_opt;
        opts.delta = delta;
        return fit_het(y, opts);
      },
      py::arg("y"), py::arg("maxiter") = 200, py::arg("min_delta_loglik") = 1e-4,
      py::arg("start_c_opt") = 25, py::arg("delta") = 1e-20,
      "Iterative maximum likelihood fit of the heteroscedastic drift model");
  m.def("het_loglik", &het_loglik, py::arg("y"), py::arg("params"));
  m.def(
      "batch_covariance",
      [](const HetParams& p, Eigen::Index b) { return batch_covariance(p, b).matrix(); },
      py::arg("params"), py::arg("b"));

  // ---- helmert ----
  m.def(
      "helmert_matrix",
      [](Eigen::Index n_plus_1) { return HelmertBasis(n_plus_1).matrix(); },
      py::arg("n_plus_1"));
  m.def(
      "helmertize",
      [](const VectorXcd& v) { return helmertize(v); },
      py::arg("v"));

  // ---- simulation and bootstrap ----
  m.def("synthetic_kappa", &synthetic_kappa, py::arg("n_plus_1"));
  m.def(
      "simulate",
      [](Eigen::Index b, Eigen::Index n_plus_1, const VectorXcd& kappa0, const py::dict& psi,
         const py::dict& phi, const py::dict& noise, std::uint64_t seed) {
        SimSpec spec;
        spec.b_count = b;
        spec.n_plus_1 = n_plus_1;
        spec.kappa0 = kappa0;
        spec.psi_gen = generator_from_dict(psi);
        spec.phi_gen = generator_from_dict(phi);
        const std::string model = noise["model"].cast<std::string>();
        if (model == "hom") {
          spec.noise = NoiseSpec::hom(noise["sigma"].cast<Matrix2d>());
        } else if (model == "het") {
          spec.noise = NoiseSpec::het(
              noise["sigma0"].cast<Matrix2d>(), noise["sigma_tilde"].cast<double>(),
              noise.contains("c") ? noise["c"].cast<cdouble>() : cdouble(0, 0));
        } else {
          throw InvalidSpec("unknown noise model " + model);
        }
        spec.seed = seed;
        return simulate(spec);
      },
      py::arg("B"), py::arg("N_plus_1"), py::arg("kappa0"), py::arg("psi"), py::arg("phi"),
      py::arg("noise"), py::arg("seed") = 0,
      "Draw a data matrix from the generative drift model");

  py::class_<BootstrapResult>(m, "BootstrapResult")
      .def_readonly("replicates", &BootstrapResult::replicates)
      .def_readonly("failures", &BootstrapResult::failures)
      .def_readonly("level", &BootstrapResult::level)
      .def_readonly("i_point", &BootstrapResult::i_point)
      .def_readonly("omega_point", &BootstrapResult::omega_point)
      .def_readonly("i_lower", &BootstrapResult::i_lower)
      .def_readonly("i_upper", &BootstrapResult::i_upper)
      .def_readonly("omega_lower", &BootstrapResult::omega_lower)
      .def_readonly("omega_upper", &BootstrapResult::omega_upper)
      .def_readonly("bias_corrected", &BootstrapResult::bias_corrected);
  m.def(
      "parametric_bootstrap",
      [](const MatrixXcd& y, const FitReport& fit, int replicates, double level,
         bool bias_correct, int pilot, std::uint64_t seed, int threads) {
        BootstrapOptions opts;
        opts.replicates = replicates;
        opts.level = level;
        opts.bias_correct = bias_correct;
        opts.pilot_replicates = pilot;
        opts.seed = seed;
        opts.threads = threads;
        return parametric_bootstrap(y, fit, opts);
      },
      py::arg("y"), py::arg("fit"), py::arg("replicates") = 500, py::arg("level") = 0.95,
      py::arg("bias_correct") = false, py::arg("pilot") = 50, py::arg("seed") = 0,
      py::arg("threads") = 0);

  // ---- asymptotics ----
  py::class_<SandwichCov>(m, "SandwichCov")
      .def_readonly("h_hat", &SandwichCov::h_hat)
      .def_readonly("g_hat", &SandwichCov::g_hat)
      .def_readonly("cov_beta", &SandwichCov::cov_beta)
      .def_readonly("cov_I", &SandwichCov::cov_I);
  m.def(
      "sandwich_covariance",
      [](const MatrixXcd& y_batches, const VectorXcd& kappa_hat, const Matrix2d& precision,
         int threads) {
        SandwichOptions opts;
        opts.threads = threads;
        return sandwich_covariance(y_batches, ProjectivePoint(kappa_hat), Spd2(precision), opts);
      },
      py::arg("y_batches"), py::arg("kappa_hat"), py::arg("precision"), py::arg("threads") = 0,
      "Plug-in CLT covariance of the fitted direction, pushed to the spectrum");
  m.def(
      "profile_loss",
      [](const VectorXcd& y, const VectorXcd& kappa, const Matrix2d& precision) {
        return profile_loss(y, ProjectivePoint(kappa), Spd2(precision));
      },
      py::arg("y"), py::arg("kappa"), py::arg("precision"));
  m.def(
      "profile_precision_gradient",
      [](const VectorXcd& kappa0, const Matrix2d& precision0) {
        return profile_precision_gradient(ProjectivePoint(kappa0), Spd2(precision0));
      },
      py::arg("kappa0"), py::arg("precision0"));

  // ---- diagnostics ----
  py::class_<KsResult>(m, "KsResult")
      .def_readonly("stat", &KsResult::stat)
      .def_readonly("p_value", &KsResult::p_value)
      .def_readonly("n", &KsResult::n);
  m.def("ks_test", &ks_test, py::arg("sample"),
        "One-sample Kolmogorov-Smirnov test against the standard normal");
  m.def(
      "standardized_residuals",
      [](const MatrixXcd& y, const HomParams& p) {
        const StandardizedResiduals r = standardized_residuals(y, p);
        return py::make_tuple(r.real, r.imag);
      },
      py::arg("y"), py::arg("params"));
  m.def(
      "snr_flat_std",
      [](const VectorXd& spectrum, const std::vector<std::pair<Eigen::Index, Eigen::Index>>& regions,
         const std::string& normalize) {
        return snr_flat_std(spectrum, FlatRegions{regions},
                            normalize == "none" ? SnrNormalize::None : SnrNormalize::MinMax);
      },
      py::arg("spectrum"), py::arg("regions"), py::arg("normalize") = "minmax");

  // ---- io ----
  m.def(
      "read_csv",
      [](const std::string& path) {
        const DataMatrix d = read_csv(path);
        return py::make_tuple(d.values, d.freq_hz, d.batch_ids);
      },
      py::arg("path"));
  m.def(
      "write_csv",
      [](const MatrixXcd& values, const VectorXd& freq_hz, const std::string& path) {
        DataMatrix d;
        d.values = values;
        d.freq_hz = freq_hz;
        for (Eigen::Index b = 0; b < values.rows(); ++b) d.batch_ids.push_back(b);
        write_csv(d, path);
      },
      py::arg("values"), py::arg("freq_hz"), py::arg("path"));

  // ---- validation ----
  m.def(
      "validate_theory",
      [](bool quick, std::uint64_t seed, int threads) {
        ValidationOptions opts;
        opts.quick = quick;
        opts.seed = seed;
        opts.threads = threads;
        py::list out;
        for (const CheckResult& r : validate_theory(opts)) {
          py::dict d;
          d["name"] = r.name;
          d["pass"] = r.pass;
          d["detail"] = r.detail;
          d["seconds"] = r.seconds;
          out.append(d);
        }
        return out;
      },
      py::arg("quick") = true, py::arg("seed") = 20240901ULL, py::arg("threads") = 0,
      "Run the Monte-Carlo validation suites");
}
