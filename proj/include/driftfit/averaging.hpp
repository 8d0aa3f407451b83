#pragma once

#include <optional>

#include "driftfit/core.hpp"
#include "driftfit/phase_extraction.hpp"

namespace driftfit {

/// Column means of the batch-by-frequency matrix.
VectorXcd average(const MatrixXcd& y);

/// Averaging-model spectrum: rotate by lambda, take the real part and min-max
/// normalize to [0,1].  omega is the orthogonal part of the rotated signal,
/// reported unnormalized.  When lambda is not given, the phase is chosen by
/// the maximum method applied to the centered, unit-normalized average.
struct AveragingSpectrum {
  VectorXd I;
  VectorXd omega;
  double lambda = 0.0;
  bool flipped = false;
};

AveragingSpectrum averaging_spectrum(const VectorXcd& z,
                                     std::optional<double> lambda = std::nullopt);

}  // namespace driftfit
