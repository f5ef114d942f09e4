#pragma once

#include "pas/nn/params.hpp"

namespace pas::nn {

struct AdamConfig {
  double learningRate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double weightDecay = 0.0;
};

/// One bias-corrected Adam update over every parameter, then clears gradients.
void adamStep(ParamStore& store, const AdamConfig& config);

/// Scales all gradients so their global L2 norm is at most maxNorm. Returns the pre-clip norm.
double clipGradNorm(ParamStore& store, double maxNorm);

} // namespace pas::nn
