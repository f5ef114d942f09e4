#include "pas/nn/optim.hpp"

#include <cmath>

namespace pas::nn {

void adamStep(ParamStore& store, const AdamConfig& config) {
  store.incrementStep();
  const double t = store.step();
  const double correction1 = 1.0 - std::pow(config.beta1, t);
  const double correction2 = 1.0 - std::pow(config.beta2, t);
  for (auto& [name, p] : store) {
    if (config.weightDecay != 0.0) {
      p.grad += config.weightDecay * p.value;
    }
    p.firstMoment = config.beta1 * p.firstMoment + (1.0 - config.beta1) * p.grad;
    p.secondMoment = config.beta2 * p.secondMoment + (1.0 - config.beta2) * p.grad.cwiseAbs2();
    p.value.array() -= config.learningRate * (p.firstMoment.array() / correction1) /
        ((p.secondMoment.array() / correction2).sqrt() + config.epsilon);
    p.grad.setZero();
  }
}

double clipGradNorm(ParamStore& store, double maxNorm) {
  double total = 0.0;
  for (const auto& [name, p] : store) {
    total += p.grad.squaredNorm();
  }
  const double norm = std::sqrt(total);
  if (norm > maxNorm && norm > 0.0) {
    const double factor = maxNorm / norm;
    for (auto& [name, p] : store) {
      p.grad *= factor;
    }
  }
  return norm;
}

} // namespace pas::nn
