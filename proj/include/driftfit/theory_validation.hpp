#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "driftfit/core.hpp"

namespace driftfit {

struct CheckResult {
  std::string name;
  bool pass = false;
  std::string detail;
  double seconds = 0.0;
};

struct ValidationOptions {
  std::uint64_t seed = 20240901ULL;
  int threads = 0;
  bool quick = false;  // reduced replication counts for smoke runs
};

// Individual Monte-Carlo suites.  Each is deterministic for a fixed seed.
CheckResult check_consistency(const ValidationOptions& opts);
CheckResult check_noise_loss_constant(const ValidationOptions& opts);
CheckResult check_lipschitz_bound(const ValidationOptions& opts);
CheckResult check_chart_distance(const ValidationOptions& opts);
CheckResult check_spectrum_jacobian(const ValidationOptions& opts);
CheckResult check_clt_sandwich(const ValidationOptions& opts);
CheckResult check_precision_gradient(const ValidationOptions& opts);
CheckResult check_boundary_maxima(const ValidationOptions& opts);
CheckResult check_contrast_noise(const ValidationOptions& opts);

/// Runs every suite in order.
std::vector<CheckResult> validate_theory(const ValidationOptions& opts);

}  // namespace driftfit
