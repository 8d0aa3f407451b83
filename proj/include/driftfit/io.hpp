#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "driftfit/averaging.hpp"
#include "driftfit/core.hpp"
#include "driftfit/diagnostics.hpp"
#include "driftfit/het_model.hpp"
#include "driftfit/hom_model.hpp"
#include "driftfit/phase_extraction.hpp"
#include "driftfit/simulate.hpp"

namespace driftfit {

/// Complex batch-by-frequency measurement matrix with axis metadata.
struct DataMatrix {
  MatrixXcd values;           // batches x frequencies
  VectorXd freq_hz;           // strictly monotone
  std::vector<long> batch_ids;
  std::map<std::string, std::string> meta;

  Eigen::Index batches() const { return values.rows(); }
  Eigen::Index frequencies() const { return values.cols(); }
  void validate() const;
};

/// Long-format CSV with header `batch,freq_index,freq_hz,re,im`, one row per
/// cell, complete grid required.
DataMatrix read_csv(const std::string& path);
void write_csv(const DataMatrix& data, const std::string& path);

struct RunConfig {
  std::string model = "hom";  // averaging | hom | het
  int maxiter = 200;
  double min_delta_loglik = 1e-4;
  int start_c_opt = 25;
  double delta = 1e-20;
  int bootstrap_replicates = 500;
  double bootstrap_level = 0.95;
  bool bootstrap_bias_correct = false;
  int bootstrap_pilot = 50;
  std::uint64_t seed = 0;
  int threads = 0;
  std::vector<std::pair<Eigen::Index, Eigen::Index>> flat_regions;
  std::string output;

  void validate() const;
};

RunConfig read_config(const std::string& path);

SimSpec read_sim_spec(const std::string& path);

/// Everything a fit produces, in one serializable bundle.
struct ResultBundle {
  std::string model;
  bool converged = false;
  std::string error;
  std::optional<HomParams> hom;
  std::optional<HetParams> het;
  std::optional<VectorXcd> averaged;  // averaging model signal
  std::optional<SpectrumResult> spectrum;
  std::optional<AveragingSpectrum> averaging;
  std::vector<double> loglik_trace;
  int n_iter = 0;
  std::optional<GofReport> gof;
  std::optional<double> flat_std;
  std::optional<BootstrapResult> bands;
  VectorXd freq_hz;
};

/// JSON serialization; floats carry 17 significant digits so binary64 values
/// round trip exactly.  format is "json" or "csv-bundle" (one CSV per array
/// plus a manifest).
void write_result(const ResultBundle& result, const std::string& path,
                  const std::string& format = "json");

ResultBundle read_result_json(const std::string& path);

std::string result_to_json_string(const ResultBundle& result);

}  // namespace driftfit
