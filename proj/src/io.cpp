#include "driftfit/io.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace driftfit {

using nlohmann::json;

namespace {

std::string fmt17(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

json cplx(cdouble z) { return json::array({z.real(), z.imag()}); }

json cvec(const VectorXcd& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(cplx(v[i]));
  return out;
}

json rvec(const VectorXd& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

json mat2(const Matrix2d& m) {
  return json::array({json::array({m(0, 0), m(0, 1)}), json::array({m(1, 0), m(1, 1)})});
}

cdouble parse_cplx(const json& j) {
  if (!j.is_array() || j.size() != 2) throw IoError("expected [re, im] pair");
  return {j[0].get<double>(), j[1].get<double>()};
}

VectorXcd parse_cvec(const json& j) {
  VectorXcd v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = parse_cplx(j[i]);
  return v;
}

VectorXd parse_rvec(const json& j) {
  VectorXd v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  return v;
}

Matrix2d parse_mat2(const json& j) {
  Matrix2d m;
  m << j[0][0].get<double>(), j[0][1].get<double>(), j[1][0].get<double>(), j[1][1].get<double>();
  return m;
}

}  // namespace

void DataMatrix::validate() const {
  if (values.rows() < 1 || values.cols() < 1) throw EmptyData("empty data matrix");
  if (!values.allFinite()) throw IoError("non-finite entries in data matrix");
  if (freq_hz.size() != values.cols()) throw DimensionMismatch("frequency axis length mismatch");
  for (Eigen::Index v = 1; v < freq_hz.size(); ++v)
    if (!(freq_hz[v] > freq_hz[v - 1]))
      throw NonMonotoneFrequency("freq_hz must be strictly increasing");
  if (batch_ids.size() != static_cast<std::size_t>(values.rows()))
    throw DimensionMismatch("batch id length mismatch");
}

DataMatrix read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);

  std::string line;
  long line_no = 0;
  if (!std::getline(in, line)) throw IoError("empty file " + path);
  ++line_no;
  // Tolerate a UTF-8 byte order mark.
  if (line.rfind("\xEF\xBB\xBF", 0) == 0) line = line.substr(3);
  if (line != "batch,freq_index,freq_hz,re,im")
    throw ParseError("expected header batch,freq_index,freq_hz,re,im", line_no);

  struct Cell {
    double freq;
    cdouble value;
  };
  std::map<long, std::map<long, Cell>> grid;  // batch -> freq_index -> cell
  std::set<long> freq_indices;

  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string fields[5];
    for (int f = 0; f < 5; ++f) {
      if (!std::getline(ss, fields[f], ',')) throw ParseError("expected 5 fields", line_no);
    }
    std::string extra;
    if (std::getline(ss, extra, ',')) throw ParseError("too many fields", line_no);
    try {
      const long b = std::stol(fields[0]);
      const long v = std::stol(fields[1]);
      const double f = std::stod(fields[2]);
      const double re = std::stod(fields[3]);
      const double im = std::stod(fields[4]);
      auto& row = grid[b];
      if (row.count(v)) throw ParseError("duplicate cell (" + fields[0] + "," + fields[1] + ")",
                                         line_no);
      row[v] = Cell{f, cdouble(re, im)};
      freq_indices.insert(v);
    } catch (const std::invalid_argument&) {
      throw ParseError("malformed number", line_no);
    } catch (const std::out_of_range&) {
      throw ParseError("number out of range", line_no);
    }
  }
  if (grid.empty()) throw EmptyData("no data rows in " + path);

  // The grid must be complete: every batch holds every frequency index.
  std::vector<long> missing;
  for (const auto& [b, row] : grid)
    for (const long v : freq_indices)
      if (!row.count(v)) {
        missing.push_back(b);
        missing.push_back(v);
      }
  if (!missing.empty()) {
    std::string cells;
    for (std::size_t i = 0; i + 1 < missing.size() && i < 10; i += 2)
      cells += " (" + std::to_string(missing[i]) + "," + std::to_string(missing[i + 1]) + ")";
    throw IncompleteGrid("missing cells:" + cells);
  }

  DataMatrix data;
  data.values.resize(static_cast<Eigen::Index>(grid.size()),
                     static_cast<Eigen::Index>(freq_indices.size()));
  data.freq_hz.resize(static_cast<Eigen::Index>(freq_indices.size()));
  Eigen::Index bi = 0;
  for (const auto& [b, row] : grid) {
    data.batch_ids.push_back(b);
    Eigen::Index vi = 0;
    for (const long v : freq_indices) {
      const Cell& cell = row.at(v);
      data.values(bi, vi) = cell.value;
      if (bi == 0) data.freq_hz[vi] = cell.freq;
      ++vi;
    }
    ++bi;
  }
  data.validate();
  return data;
}

void write_csv(const DataMatrix& data, const std::string& path) {
  data.validate();
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << "batch,freq_index,freq_hz,re,im\n";
  for (Eigen::Index b = 0; b < data.batches(); ++b)
    for (Eigen::Index v = 0; v < data.frequencies(); ++v)
      out << data.batch_ids[static_cast<std::size_t>(b)] << ',' << v << ','
          << fmt17(data.freq_hz[v]) << ',' << fmt17(data.values(b, v).real()) << ','
          << fmt17(data.values(b, v).imag()) << '\n';
  if (!out) throw IoError("write failed for " + path);
}

void RunConfig::validate() const {
  if (model != "averaging" && model != "hom" && model != "het")
    throw InvalidSpec("unknown model " + model);
  if (maxiter <= 0 || bootstrap_replicates <= 0 || bootstrap_pilot <= 0 ||
      min_delta_loglik <= 0 || delta <= 0 || start_c_opt < 0)
    throw InvalidSpec("optimizer constants must be positive");
  if (!(bootstrap_level > 0 && bootstrap_level < 1))
    throw InvalidSpec("bootstrap level must be in (0,1)");
}

RunConfig read_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw IoError("invalid config json: " + std::string(e.what()));
  }
  RunConfig cfg;
  cfg.model = j.value("model", cfg.model);
  cfg.maxiter = j.value("maxiter", cfg.maxiter);
  cfg.min_delta_loglik = j.value("min_delta_loglik", cfg.min_delta_loglik);
  cfg.start_c_opt = j.value("start_c_opt", cfg.start_c_opt);
  cfg.delta = j.value("delta", cfg.delta);
  cfg.seed = j.value("seed", cfg.seed);
  cfg.threads = j.value("threads", cfg.threads);
  cfg.output = j.value("output", cfg.output);
  if (j.contains("bootstrap")) {
    const json& b = j["bootstrap"];
    cfg.bootstrap_replicates = b.value("replicates", cfg.bootstrap_replicates);
    cfg.bootstrap_level = b.value("level", cfg.bootstrap_level);
    cfg.bootstrap_bias_correct = b.value("bias_correct", cfg.bootstrap_bias_correct);
    cfg.bootstrap_pilot = b.value("pilot", cfg.bootstrap_pilot);
  }
  if (j.contains("flat_regions")) {
    for (const auto& r : j["flat_regions"])
      cfg.flat_regions.emplace_back(r[0].get<Eigen::Index>(), r[1].get<Eigen::Index>());
  }
  cfg.validate();
  return cfg;
}

SimSpec read_sim_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw IoError("invalid spec json: " + std::string(e.what()));
  }

  SimSpec spec;
  try {
    spec.b_count = j.at("B").get<Eigen::Index>();
    spec.n_plus_1 = j.at("N_plus_1").get<Eigen::Index>();
    spec.seed = j.value("seed", 0ULL);

    if (j.at("kappa0").is_string()) {
      if (j["kappa0"].get<std::string>() != "synthetic")
        throw InvalidSpec("kappa0 must be an array of [re,im] pairs or \"synthetic\"");
      spec.kappa0 = synthetic_kappa(spec.n_plus_1);
    } else {
      spec.kappa0 = parse_cvec(j.at("kappa0"));
    }

    auto parse_gen = [](const json& g) {
      GeneratorSpec out;
      const std::string type = g.at("type").get<std::string>();
      if (type == "constant") {
        out = GeneratorSpec::constant(parse_cplx(g.at("value")));
      } else if (type == "random-walk") {
        out = GeneratorSpec::random_walk(parse_cplx(g.at("start")),
                                         g.value("phase_step", 0.0), g.value("amp_step", 0.0));
      } else if (type == "vector") {
        out = GeneratorSpec::vector(parse_cvec(g.at("values")));
      } else {
        throw InvalidSpec("unknown generator type " + type);
      }
      return out;
    };
    spec.psi_gen = parse_gen(j.at("psi"));
    spec.phi_gen = parse_gen(j.at("phi"));

    const json& n = j.at("noise");
    const std::string model = n.at("model").get<std::string>();
    if (model == "hom") {
      spec.noise = NoiseSpec::hom(parse_mat2(n.at("sigma")));
    } else if (model == "het") {
      spec.noise = NoiseSpec::het(parse_mat2(n.at("sigma0")), n.at("sigma_tilde").get<double>(),
                                  n.contains("c") ? parse_cplx(n["c"]) : cdouble(0, 0));
    } else {
      throw InvalidSpec("unknown noise model " + model);
    }
  } catch (const json::exception& e) {
    throw InvalidSpec("malformed simulation spec: " + std::string(e.what()));
  }
  return spec;
}

namespace {

json spectrum_json(const SpectrumResult& s) {
  return {{"I", rvec(s.I)},
          {"omega", rvec(s.omega)},
          {"lambda_opt", s.lambda_opt},
          {"flipped", s.flipped}};
}

json bands_json(const BootstrapResult& b) {
  json out = {{"replicates", b.replicates},
              {"failures", b.failures},
              {"level", b.level},
              {"I_lower", rvec(b.i_lower)},
              {"I_upper", rvec(b.i_upper)},
              {"omega_lower", rvec(b.omega_lower)},
              {"omega_upper", rvec(b.omega_upper)},
              {"bias_corrected", b.bias_corrected}};
  if (b.bias_corrected) {
    out["bias"] = {{"sigma_additive", mat2(b.bias.sigma_additive)},
                   {"phi_multiplicative", b.bias.phi_multiplicative}};
  }
  return out;
}

json result_json(const ResultBundle& r) {
  json j;
  j["model"] = r.model;
  j["converged"] = r.converged;
  if (!r.error.empty()) j["error"] = r.error;
  json params = json::object();
  if (r.hom) {
    params["psi"] = cvec(r.hom->psi);
    params["phi"] = cvec(r.hom->phi);
    params["kappa"] = cvec(r.hom->kappa);
    params["sigma"] = mat2(r.hom->sigma);
  }
  if (r.het) {
    params["psi"] = cvec(r.het->psi);
    params["phi"] = cvec(r.het->phi);
    params["kappa"] = cvec(r.het->kappa);
    params["c"] = cplx(r.het->c);
    params["sigma0"] = mat2(r.het->sigma0);
    params["sigma_tilde"] = r.het->sigma_tilde;
  }
  if (r.averaged) params["z"] = cvec(*r.averaged);
  j["params"] = params;
  if (r.spectrum) j["spectrum"] = spectrum_json(*r.spectrum);
  if (r.averaging) {
    j["spectrum"] = {{"I", rvec(r.averaging->I)},
                     {"omega", rvec(r.averaging->omega)},
                     {"lambda_opt", r.averaging->lambda},
                     {"flipped", r.averaging->flipped}};
  }
  j["loglik_trace"] = r.loglik_trace;
  j["n_iter"] = r.n_iter;
  if (r.gof || r.flat_std) {
    json d = json::object();
    if (r.gof) {
      d["ks"] = {{"p_real", r.gof->real.p_value},
                 {"p_imag", r.gof->imag.p_value},
                 {"stat_real", r.gof->real.stat},
                 {"stat_imag", r.gof->imag.stat},
                 {"n", r.gof->real.n}};
    }
    if (r.flat_std) d["flat_std"] = *r.flat_std;
    j["diagnostics"] = d;
  }
  if (r.bands) j["bands"] = bands_json(*r.bands);
  if (r.freq_hz.size() > 0) j["freq_hz"] = rvec(r.freq_hz);
  return j;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << text;
  if (!out) throw IoError("write failed for " + path);
}

void write_array_csv(const std::string& path, const std::string& header,
                     const std::vector<std::vector<double>>& columns) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << header << '\n';
  const std::size_t rows = columns.empty() ? 0 : columns[0].size();
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < columns.size(); ++c) {
      if (c) out << ',';
      out << fmt17(columns[c][r]);
    }
    out << '\n';
  }
}

}  // namespace

std::string result_to_json_string(const ResultBundle& result) {
  // 17 significant digits through nlohmann's double serializer (shortest
  // round-trip representation), so values survive a write/read cycle.
  return result_json(result).dump(2);
}

void write_result(const ResultBundle& result, const std::string& path,
                  const std::string& format) {
  if (format == "json") {
    write_text(path, result_to_json_string(result) + "\n");
    return;
  }
  if (format != "csv-bundle") throw IoError("unknown result format " + format);

  // csv-bundle: a directory with one CSV per array and a manifest.
  const std::string dir = path;
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir + ": " + ec.message());
  json manifest;
  manifest["model"] = result.model;
  manifest["converged"] = result.converged;
  json files = json::array();

  auto dump_cvec = [&](const std::string& name, const VectorXcd& v) {
    std::vector<double> re(v.size()), im(v.size());
    for (Eigen::Index i = 0; i < v.size(); ++i) {
      re[static_cast<std::size_t>(i)] = v[i].real();
      im[static_cast<std::size_t>(i)] = v[i].imag();
    }
    write_array_csv(dir + "/" + name + ".csv", "re,im", {re, im});
    files.push_back(name + ".csv");
  };
  auto dump_rvec = [&](const std::string& name, const VectorXd& v) {
    std::vector<double> col(v.data(), v.data() + v.size());
    write_array_csv(dir + "/" + name + ".csv", name, {col});
    files.push_back(name + ".csv");
  };

  if (result.hom) {
    dump_cvec("psi", result.hom->psi);
    dump_cvec("phi", result.hom->phi);
    dump_cvec("kappa", result.hom->kappa);
  }
  if (result.het) {
    dump_cvec("psi", result.het->psi);
    dump_cvec("phi", result.het->phi);
    dump_cvec("kappa", result.het->kappa);
  }
  if (result.averaged) dump_cvec("z", *result.averaged);
  if (result.spectrum) {
    dump_rvec("I", result.spectrum->I);
    dump_rvec("omega", result.spectrum->omega);
  }
  if (result.averaging) {
    dump_rvec("I", result.averaging->I);
    dump_rvec("omega", result.averaging->omega);
  }
  if (result.bands) {
    dump_rvec("I_lower", result.bands->i_lower);
    dump_rvec("I_upper", result.bands->i_upper);
    dump_rvec("omega_lower", result.bands->omega_lower);
    dump_rvec("omega_upper", result.bands->omega_upper);
  }
  if (result.freq_hz.size() > 0) dump_rvec("freq_hz", result.freq_hz);

  manifest["files"] = files;
  json scalars = json::object();
  if (result.hom) scalars["sigma"] = mat2(result.hom->sigma);
  if (result.het) {
    scalars["sigma0"] = mat2(result.het->sigma0);
    scalars["sigma_tilde"] = result.het->sigma_tilde;
    scalars["c"] = cplx(result.het->c);
  }
  if (result.spectrum) {
    scalars["lambda_opt"] = result.spectrum->lambda_opt;
    scalars["flipped"] = result.spectrum->flipped;
  }
  manifest["scalars"] = scalars;
  write_text(dir + "/manifest.json", manifest.dump(2) + "\n");
}

ResultBundle read_result_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw IoError("invalid result json: " + std::string(e.what()));
  }
  ResultBundle r;
  r.model = j.value("model", "");
  r.converged = j.value("converged", false);
  r.error = j.value("error", "");
  r.n_iter = j.value("n_iter", 0);
  if (j.contains("loglik_trace")) r.loglik_trace = j["loglik_trace"].get<std::vector<double>>();
  const json params = j.value("params", json::object());
  if (params.contains("sigma")) {
    HomParams p;
    p.psi = parse_cvec(params.at("psi"));
    p.phi = parse_cvec(params.at("phi"));
    p.kappa = parse_cvec(params.at("kappa"));
    p.sigma = parse_mat2(params.at("sigma"));
    r.hom = p;
  } else if (params.contains("sigma0")) {
    HetParams p;
    p.psi = parse_cvec(params.at("psi"));
    p.phi = parse_cvec(params.at("phi"));
    p.kappa = parse_cvec(params.at("kappa"));
    p.c = parse_cplx(params.at("c"));
    p.sigma0 = parse_mat2(params.at("sigma0"));
    p.sigma_tilde = params.at("sigma_tilde").get<double>();
    r.het = p;
  }
  if (params.contains("z")) r.averaged = parse_cvec(params.at("z"));
  if (j.contains("spectrum")) {
    SpectrumResult s;
    s.I = parse_rvec(j["spectrum"].at("I"));
    s.omega = parse_rvec(j["spectrum"].at("omega"));
    s.lambda_opt = j["spectrum"].value("lambda_opt", 0.0);
    s.flipped = j["spectrum"].value("flipped", false);
    r.spectrum = s;
  }
  if (j.contains("freq_hz")) r.freq_hz = parse_rvec(j["freq_hz"]);
  return r;
}

}  // namespace driftfit
