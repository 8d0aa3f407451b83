#include "driftfit/averaging.hpp"

namespace driftfit {

VectorXcd average(const MatrixXcd& y) {
  if (y.rows() < 1 || y.cols() < 1) throw EmptyData("empty data matrix");
  return y.colwise().mean();
}

AveragingSpectrum averaging_spectrum(const VectorXcd& z, std::optional<double> lambda) {
  if (z.size() < 2) throw InvalidDimension("need at least two frequencies");

  AveragingSpectrum out;
  if (lambda.has_value()) {
    out.lambda = *lambda;
  } else {
    VectorXcd centered = z.array() - z.mean();
    const double nrm = centered.norm();
    if (!(nrm > 0)) throw DegenerateSpectrum("constant signal has no spectrum");
    const SpectrumResult s = extract_spectrum(centered / nrm);
    out.lambda = s.lambda_opt;
    out.flipped = s.flipped;
  }

  const VectorXcd rotated = std::exp(cdouble(0, out.lambda)) * z;
  const VectorXd raw = rotated.real();
  const double lo = raw.minCoeff();
  const double hi = raw.maxCoeff();
  if (!(hi > lo)) throw DegenerateSpectrum("flat real part; min-max normalization undefined");
  out.I = (raw.array() - lo) / (hi - lo);
  out.omega = rotated.imag();
  return out;
}

}  // namespace driftfit
