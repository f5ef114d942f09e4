#pragma once

#include "pas/nn/tape.hpp"

#include <cstdint>
#include <functional>
#include <string>

namespace pas::nn {

struct GradCheckResult {
  double maxRelativeError = 0.0;
  std::string worstParameter;
  Eigen::Index worstIndex = -1;
  size_t entriesChecked = 0;
};

struct GradCheckOptions {
  double eps = 1e-4;
  /// Entries sampled per parameter; <= 0 checks all entries.
  int maxEntriesPerParameter = 0;
  uint64_t seed = 0;
};

/// Scalar-valued function of the parameters in a store, built on the given tape.
using LossFunction = std::function<Var(Tape&)>;

/// Compares reverse-mode gradients with central differences. Relative error per
/// entry is |analytic - numeric| / (|analytic| + |numeric| + 1e-8).
/// Throws ConfigError for eps outside [1e-6, 1e-3] and NumericError on non-finite losses.
GradCheckResult gradCheckDetailed(const LossFunction& loss, ParamStore& params, const GradCheckOptions& options = {});

double gradCheck(const LossFunction& loss, ParamStore& params, double eps = 1e-4);

} // namespace pas::nn
