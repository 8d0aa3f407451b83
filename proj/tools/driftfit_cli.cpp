#include <CLI11.hpp>
#include <iostream>

#include "driftfit/frechet.hpp"
#include "driftfit/helmert.hpp"
#include "driftfit/io.hpp"
#include "driftfit/theory_validation.hpp"

namespace {

using namespace driftfit;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitConvergence = 3;

std::vector<std::pair<Eigen::Index, Eigen::Index>> parse_regions(const std::string& text) {
  std::vector<std::pair<Eigen::Index, Eigen::Index>> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto colon = item.find(':');
    if (colon == std::string::npos)
      throw InvalidSpec("region '" + item + "' is not of the form lo:hi");
    out.emplace_back(std::stol(item.substr(0, colon)), std::stol(item.substr(colon + 1)));
  }
  return out;
}

FitOptions hom_options(const RunConfig& cfg) {
  FitOptions o;
  o.maxiter = cfg.maxiter;
  o.min_delta_loglik = cfg.min_delta_loglik;
  return o;
}

HetFitOptions het_options(const RunConfig& cfg) {
  HetFitOptions o;
  o.maxiter = cfg.maxiter;
  o.min_delta_loglik = cfg.min_delta_loglik;
  o.start_c_opt = cfg.start_c_opt;
  o.delta = cfg.delta;
  return o;
}

ResultBundle fit_bundle_hom(const DataMatrix& data, const RunConfig& cfg) {
  ResultBundle r;
  r.model = "hom";
  r.freq_hz = data.freq_hz;
  const FitReport fit = fit_hom(data.values, hom_options(cfg));
  r.converged = fit.converged;
  r.hom = fit.params;
  r.loglik_trace = fit.loglik_trace;
  r.n_iter = fit.n_iter;
  r.spectrum = extract_spectrum(fit.params.kappa);
  if (!fit.converged) r.error = "no convergence within the iteration limit";
  return r;
}

ResultBundle fit_bundle_het(const DataMatrix& data, const RunConfig& cfg) {
  ResultBundle r;
  r.model = "het";
  r.freq_hz = data.freq_hz;
  const HetFitReport fit = fit_het(data.values, het_options(cfg));
  r.converged = fit.converged;
  r.het = fit.params;
  r.loglik_trace = fit.loglik_trace;
  r.n_iter = fit.n_iter;
  r.spectrum = extract_spectrum(fit.params.kappa);
  if (!fit.converged) r.error = "no convergence within the iteration limit";
  return r;
}

int exit_code_for(const ResultBundle& r) { return r.converged ? kExitOk : kExitConvergence; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Drift-model fitting and uncertainty for batched complex measurement matrices"};
  app.require_subcommand(1);

  RunConfig cfg;
  std::string config_path;
  app.add_option("--config", config_path, "JSON configuration file");
  std::uint64_t seed_flag = 0;
  bool seed_given = false;
  app.add_option("--seed", seed_flag, "random seed")->each([&](const std::string&) {
    seed_given = true;
  });
  int threads_flag = 0;
  app.add_option("--threads", threads_flag, "worker threads (default: DRIFTSPEC_THREADS or all)");

  // ---- simulate ----
  auto* sim = app.add_subcommand("simulate", "draw a data matrix from a generative spec");
  std::string sim_spec_path, sim_out;
  sim->add_option("--spec", sim_spec_path, "simulation spec (json)")->required();
  sim->add_option("--out", sim_out, "output CSV path")->required();

  // ---- average ----
  auto* avg = app.add_subcommand("average", "averaging-model spectrum");
  std::string avg_in, avg_out, avg_format = "json";
  double avg_lambda = -1.0;
  bool avg_lambda_given = false;
  avg->add_option("data", avg_in, "input CSV")->required();
  avg->add_option("--out", avg_out, "output path")->required();
  avg->add_option("--format", avg_format, "json or csv-bundle");
  avg->add_option("--lambda", avg_lambda, "phase (radians); default: maximum method")
      ->each([&](const std::string&) { avg_lambda_given = true; });

  // ---- fit-hom / fit-het ----
  auto* fh = app.add_subcommand("fit-hom", "fit the homoscedastic drift model");
  std::string fh_in, fh_out, fh_format = "json";
  fh->add_option("data", fh_in, "input CSV")->required();
  fh->add_option("--out", fh_out, "output path")->required();
  fh->add_option("--format", fh_format, "json or csv-bundle");
  fh->add_option("--maxiter", cfg.maxiter, "iteration cap");
  fh->add_option("--min-delta-loglik", cfg.min_delta_loglik, "convergence threshold");

  auto* ft = app.add_subcommand("fit-het", "fit the heteroscedastic drift model");
  std::string ft_in, ft_out, ft_format = "json";
  ft->add_option("data", ft_in, "input CSV")->required();
  ft->add_option("--out", ft_out, "output path")->required();
  ft->add_option("--format", ft_format, "json or csv-bundle");
  ft->add_option("--maxiter", cfg.maxiter, "iteration cap");
  ft->add_option("--min-delta-loglik", cfg.min_delta_loglik, "convergence threshold");
  ft->add_option("--start-c-opt", cfg.start_c_opt, "first re-centering iteration");
  ft->add_option("--delta", cfg.delta, "eigenvalue floor for the base covariance");

  // ---- bootstrap ----
  auto* bs = app.add_subcommand("bootstrap", "parametric bootstrap confidence bands");
  std::string bs_in, bs_out, bs_model = "hom";
  bs->add_option("data", bs_in, "input CSV")->required();
  bs->add_option("--out", bs_out, "output path")->required();
  bs->add_option("--model", bs_model, "hom or het");
  bs->add_option("--replicates", cfg.bootstrap_replicates, "bootstrap replicates");
  bs->add_option("--level", cfg.bootstrap_level, "confidence level");
  bs->add_flag("--bias-correct", cfg.bootstrap_bias_correct, "pilot-round bias correction");
  bs->add_option("--pilot", cfg.bootstrap_pilot, "pilot replicates for bias estimation");

  // ---- asymptotics ----
  auto* asy = app.add_subcommand("asymptotics",
                                 "plug-in CLT covariance and confidence intervals");
  std::string asy_in, asy_out;
  asy->add_option("data", asy_in, "input CSV")->required();
  asy->add_option("--out", asy_out, "output path")->required();
  double asy_level = 0.95;
  asy->add_option("--level", asy_level, "confidence level");

  // ---- gof / snr / compare ----
  auto* gof = app.add_subcommand("gof", "residual goodness of fit");
  std::string gof_in, gof_out, gof_model = "hom";
  gof->add_option("data", gof_in, "input CSV")->required();
  gof->add_option("--out", gof_out, "output path")->required();
  gof->add_option("--model", gof_model, "hom or het");

  auto* snr = app.add_subcommand("snr", "flat-region standard deviation of the spectrum");
  std::string snr_in, snr_out, snr_model = "hom", snr_regions, snr_norm = "minmax";
  snr->add_option("data", snr_in, "input CSV")->required();
  snr->add_option("--out", snr_out, "output path")->required();
  snr->add_option("--model", snr_model, "averaging, hom or het");
  snr->add_option("--regions", snr_regions, "flat regions lo:hi,lo:hi")->required();
  snr->add_option("--normalize", snr_norm, "minmax or none");

  auto* cmp = app.add_subcommand("compare", "side-by-side model comparison");
  std::string cmp_in, cmp_out, cmp_regions;
  bool cmp_het = false;
  cmp->add_option("data", cmp_in, "input CSV")->required();
  cmp->add_option("--out", cmp_out, "output path")->required();
  cmp->add_option("--regions", cmp_regions, "flat regions lo:hi,lo:hi")->required();
  cmp->add_flag("--het", cmp_het, "include the heteroscedastic model");

  // ---- validate-theory ----
  auto* vt = app.add_subcommand("validate-theory", "run the Monte-Carlo validation suites");
  bool vt_quick = false;
  vt->add_flag("--quick", vt_quick, "reduced replication counts");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (!config_path.empty()) {
      const RunConfig file_cfg = read_config(config_path);
      // Values not set on the command line fall back to the file.
      if (fh->count("--maxiter") == 0 && ft->count("--maxiter") == 0)
        cfg.maxiter = file_cfg.maxiter;
      if (fh->count("--min-delta-loglik") == 0 && ft->count("--min-delta-loglik") == 0)
        cfg.min_delta_loglik = file_cfg.min_delta_loglik;
      if (ft->count("--start-c-opt") == 0) cfg.start_c_opt = file_cfg.start_c_opt;
      if (ft->count("--delta") == 0) cfg.delta = file_cfg.delta;
      if (bs->count("--replicates") == 0) cfg.bootstrap_replicates = file_cfg.bootstrap_replicates;
      if (bs->count("--level") == 0) cfg.bootstrap_level = file_cfg.bootstrap_level;
      if (bs->count("--bias-correct") == 0)
        cfg.bootstrap_bias_correct = file_cfg.bootstrap_bias_correct;
      if (bs->count("--pilot") == 0) cfg.bootstrap_pilot = file_cfg.bootstrap_pilot;
      if (!seed_given) cfg.seed = file_cfg.seed;
      if (threads_flag == 0) cfg.threads = file_cfg.threads;
    }
    if (seed_given) cfg.seed = seed_flag;
    if (threads_flag > 0) cfg.threads = threads_flag;
    cfg.validate();

    if (sim->parsed()) {
      SimSpec spec = read_sim_spec(sim_spec_path);
      if (seed_given) spec.seed = cfg.seed;
      const MatrixXcd y = simulate(spec);
      DataMatrix data;
      data.values = y;
      data.freq_hz = VectorXd::LinSpaced(spec.n_plus_1, 0.0, static_cast<double>(spec.n_plus_1 - 1));
      for (Eigen::Index b = 0; b < spec.b_count; ++b) data.batch_ids.push_back(b);
      write_csv(data, sim_out);
      return kExitOk;
    }

    if (avg->parsed()) {
      const DataMatrix data = read_csv(avg_in);
      ResultBundle r;
      r.model = "averaging";
      r.freq_hz = data.freq_hz;
      r.averaged = average(data.values);
      r.averaging = avg_lambda_given ? averaging_spectrum(*r.averaged, avg_lambda)
                                     : averaging_spectrum(*r.averaged);
      r.converged = true;
      write_result(r, avg_out, avg_format);
      return kExitOk;
    }

    if (fh->parsed()) {
      const DataMatrix data = read_csv(fh_in);
      const ResultBundle r = fit_bundle_hom(data, cfg);
      write_result(r, fh_out, fh_format);
      return exit_code_for(r);
    }

    if (ft->parsed()) {
      const DataMatrix data = read_csv(ft_in);
      const ResultBundle r = fit_bundle_het(data, cfg);
      write_result(r, ft_out, ft_format);
      return exit_code_for(r);
    }

    if (bs->parsed()) {
      const DataMatrix data = read_csv(bs_in);
      BootstrapOptions opts;
      opts.replicates = cfg.bootstrap_replicates;
      opts.level = cfg.bootstrap_level;
      opts.bias_correct = cfg.bootstrap_bias_correct;
      opts.pilot_replicates = cfg.bootstrap_pilot;
      opts.seed = cfg.seed;
      opts.threads = cfg.threads;
      ResultBundle r;
      r.freq_hz = data.freq_hz;
      if (bs_model == "hom") {
        const FitReport fit = fit_hom(data.values, hom_options(cfg));
        if (!fit.converged) throw ConvergenceFailure("fit did not converge");
        r = fit_bundle_hom(data, cfg);
        r.bands = parametric_bootstrap(data.values, fit, opts);
      } else if (bs_model == "het") {
        const HetFitReport fit = fit_het(data.values, het_options(cfg));
        if (!fit.converged) throw ConvergenceFailure("fit did not converge");
        r = fit_bundle_het(data, cfg);
        r.bands = parametric_bootstrap(data.values, fit, opts);
      } else {
        std::cerr << "unknown model " << bs_model << "\n";
        return kExitUsage;
      }
      write_result(r, bs_out, "json");
      return kExitOk;
    }

    if (asy->parsed()) {
      const DataMatrix data = read_csv(asy_in);
      const FitReport fit = fit_hom(data.values, hom_options(cfg));
      if (!fit.converged) throw ConvergenceFailure("fit did not converge");

      // Reduce to the centered contrast basis, then estimate the plug-in
      // covariance of the fitted direction and push it to the spectrum.
      // The drift-amplitude distribution is a modeling assumption here: its
      // fourth moment must exist for the limit covariance to be defined.
      MatrixXcd yc = data.values;
      yc.colwise() -= VectorXcd(data.values.rowwise().mean());
      const HelmertBasis basis(data.frequencies());
      const MatrixXcd yh = basis.apply(yc);
      const VectorXcd khat = basis.apply(fit.params.kappa);
      SandwichOptions sopts;
      sopts.threads = cfg.threads;
      const SandwichCov cov =
          sandwich_covariance(yh, ProjectivePoint(khat), Spd2(fit.params.sigma).inverse(), sopts);

      const SpectrumResult spec = extract_spectrum(khat);
      const double z = 1.959963984540054;
      std::ostringstream json;
      json.precision(17);
      json << "{\n  \"model\": \"hom\",\n  \"contrast_spectrum\": [";
      for (Eigen::Index v = 0; v < spec.I.size(); ++v)
        json << (v ? ", " : "") << spec.I[v];
      json << "],\n  \"ci_lower\": [";
      for (Eigen::Index v = 0; v < spec.I.size(); ++v)
        json << (v ? ", " : "") << spec.I[v] - z * std::sqrt(cov.cov_I(v, v));
      json << "],\n  \"ci_upper\": [";
      for (Eigen::Index v = 0; v < spec.I.size(); ++v)
        json << (v ? ", " : "") << spec.I[v] + z * std::sqrt(cov.cov_I(v, v));
      json << "],\n  \"cov_I\": [";
      for (Eigen::Index i = 0; i < cov.cov_I.rows(); ++i) {
        json << (i ? ", " : "") << "[";
        for (Eigen::Index j = 0; j < cov.cov_I.cols(); ++j)
          json << (j ? ", " : "") << cov.cov_I(i, j);
        json << "]";
      }
      json << "]\n}\n";
      std::ofstream out(asy_out);
      if (!out) throw IoError("cannot write " + asy_out);
      out << json.str();
      return kExitOk;
    }

    if (gof->parsed()) {
      const DataMatrix data = read_csv(gof_in);
      GofReport report;
      if (gof_model == "hom") {
        const FitReport fit = fit_hom(data.values, hom_options(cfg));
        report = gof_test(standardized_residuals(data.values, fit.params));
      } else if (gof_model == "het") {
        const HetFitReport fit = fit_het(data.values, het_options(cfg));
        report = gof_test(standardized_residuals(data.values, fit.params));
      } else {
        std::cerr << "unknown model " << gof_model << "\n";
        return kExitUsage;
      }
      std::ofstream out(gof_out);
      if (!out) throw IoError("cannot write " + gof_out);
      out.precision(17);
      out << "{\"model\": \"" << gof_model << "\", \"p_real\": " << report.real.p_value
          << ", \"p_imag\": " << report.imag.p_value
          << ", \"ks_stat_real\": " << report.real.stat
          << ", \"ks_stat_imag\": " << report.imag.stat << ", \"n\": " << report.real.n
          << "}\n";
      return kExitOk;
    }

    if (snr->parsed()) {
      const DataMatrix data = read_csv(snr_in);
      FlatRegions regions{parse_regions(snr_regions)};
      const SnrNormalize norm =
          (snr_norm == "none") ? SnrNormalize::None : SnrNormalize::MinMax;
      VectorXd spectrum;
      if (snr_model == "averaging") {
        spectrum = averaging_spectrum(average(data.values)).I;
      } else if (snr_model == "hom") {
        spectrum = extract_spectrum(fit_hom(data.values, hom_options(cfg)).params.kappa).I;
      } else if (snr_model == "het") {
        spectrum = extract_spectrum(fit_het(data.values, het_options(cfg)).params.kappa).I;
      } else {
        std::cerr << "unknown model " << snr_model << "\n";
        return kExitUsage;
      }
      const double value = snr_flat_std(spectrum, regions, norm);
      std::ofstream out(snr_out);
      if (!out) throw IoError("cannot write " + snr_out);
      out.precision(17);
      out << "{\"model\": \"" << snr_model << "\", \"flat_std\": " << value << "}\n";
      return kExitOk;
    }

    if (cmp->parsed()) {
      const DataMatrix data = read_csv(cmp_in);
      FlatRegions regions{parse_regions(cmp_regions)};
      const ModelComparison comparison = compare_models(data.values, regions, cmp_het);
      std::ofstream out(cmp_out);
      if (!out) throw IoError("cannot write " + cmp_out);
      out.precision(17);
      out << "{\"entries\": [";
      for (std::size_t i = 0; i < comparison.entries.size(); ++i) {
        const auto& e = comparison.entries[i];
        out << (i ? ", " : "") << "{\"model\": \"" << e.model
            << "\", \"flat_std\": " << e.flat_std;
        if (e.gof)
          out << ", \"p_real\": " << e.gof->real.p_value
              << ", \"p_imag\": " << e.gof->imag.p_value;
        out << "}";
      }
      out << "]}\n";
      return kExitOk;
    }

    if (vt->parsed()) {
      ValidationOptions vopts;
      vopts.quick = vt_quick;
      vopts.threads = cfg.threads;
      if (seed_given) vopts.seed = cfg.seed;
      const auto results = validate_theory(vopts);
      bool all_pass = true;
      for (const auto& r : results) {
        std::cout << (r.pass ? "PASS" : "FAIL") << "  " << r.name << "  (" << r.detail << ")  ["
                  << r.seconds << " s]\n";
        all_pass = all_pass && r.pass;
      }
      return all_pass ? kExitOk : kExitConvergence;
    }
  } catch (const ConvergenceFailure& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConvergence;
  } catch (const OptimizerFailure& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConvergence;
  } catch (const RefitFailure& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConvergence;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}
