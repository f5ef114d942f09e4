#include "pas/nn/grad_check.hpp"

#include "pas/core/errors.hpp"
#include "pas/core/random.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace pas::nn {

namespace {

double evaluate(const LossFunction& loss, double& out) {
  Tape tape(false);
  const Var v = loss(tape);
  if (v.value().size() != 1) {
    throwInput("grad check: loss must be scalar");
  }
  out = v.value()(0, 0);
  if (!std::isfinite(out)) {
    throw NumericError("grad check: non-finite loss");
  }
  return out;
}

} // namespace

GradCheckResult gradCheckDetailed(const LossFunction& loss, ParamStore& params, const GradCheckOptions& options) {
  if (!(options.eps >= 1e-6 && options.eps <= 1e-3)) {
    throwConfig("grad check: eps must lie in [1e-6, 1e-3]");
  }
  params.zeroGrad();
  {
    Tape tape(true);
    const Var v = loss(tape);
    tape.backward(v);
  }
  Rng rng(options.seed);
  GradCheckResult result;
  for (auto& [name, p] : params) {
    const Eigen::Index n = p.value.size();
    std::vector<Eigen::Index> indices(static_cast<size_t>(n));
    std::iota(indices.begin(), indices.end(), 0);
    if (options.maxEntriesPerParameter > 0 && n > options.maxEntriesPerParameter) {
      std::shuffle(indices.begin(), indices.end(), rng.engine());
      indices.resize(static_cast<size_t>(options.maxEntriesPerParameter));
    }
    for (Eigen::Index idx : indices) {
      double& w = p.value.data()[idx];
      const double original = w;
      double plus = 0.0;
      double minus = 0.0;
      w = original + options.eps;
      evaluate(loss, plus);
      w = original - options.eps;
      evaluate(loss, minus);
      w = original;
      const double numeric = (plus - minus) / (2.0 * options.eps);
      const double analytic = p.grad.data()[idx];
      const double rel = std::abs(analytic - numeric) / (std::abs(analytic) + std::abs(numeric) + 1e-8);
      ++result.entriesChecked;
      if (rel > result.maxRelativeError || result.worstIndex < 0) {
        result.maxRelativeError = std::max(result.maxRelativeError, rel);
        if (rel >= result.maxRelativeError) {
          result.worstParameter = name;
          result.worstIndex = idx;
        }
      }
    }
  }
  params.zeroGrad();
  return result;
}

double gradCheck(const LossFunction& loss, ParamStore& params, double eps) {
  GradCheckOptions options;
  options.eps = eps;
  return gradCheckDetailed(loss, params, options).maxRelativeError;
}

} // namespace pas::nn
