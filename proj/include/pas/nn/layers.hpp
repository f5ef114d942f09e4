#pragma once

#include "pas/nn/ops.hpp"
#include "pas/nn/params.hpp"

#include <string>

namespace pas {
class Rng;
}

namespace pas::nn {

/// Fully connected layer y = xW + b. Holds pointers into a ParamStore.
struct Dense {
  Parameter* weight = nullptr;
  Parameter* bias = nullptr;

  Var operator()(Var x) const;
  [[nodiscard]] Eigen::Index inputs() const {
    return weight->value.rows();
  }
  [[nodiscard]] Eigen::Index outputs() const {
    return weight->value.cols();
  }
};

/// Registers `name.weight` [in, out] and `name.bias` [out], both uniform(±initScale/sqrt(in)).
Dense addDense(ParamStore& store, const std::string& name, int in, int out, Rng& rng, double initScale = 1.0);

struct LayerNormLayer {
  Parameter* gain = nullptr;
  Parameter* shift = nullptr;

  Var operator()(Var x) const;
};

LayerNormLayer addLayerNorm(ParamStore& store, const std::string& name, int width);

/// Multi-head attention with input/output projections.
struct AttentionLayer {
  Dense query;
  Dense key;
  Dense value;
  Dense output;
  int heads = 1;

  /// Self-attention over `batch` stacked sequences of equal length.
  Var selfAttention(Var x, int batch, bool causal) const;
  /// Cross-attention from x to context (both stacked per batch item).
  Var crossAttention(Var x, Var context, int batch) const;
};

/// Throws ConfigError when width is not divisible by heads.
AttentionLayer addAttention(ParamStore& store, const std::string& name, int width, int heads, Rng& rng);
AttentionLayer addCrossAttention(
    ParamStore& store,
    const std::string& name,
    int width,
    int contextWidth,
    int heads,
    Rng& rng);

/// Standalone attention evaluation on a single sequence (rows = tokens).
/// Uses a non-recording tape; attention projections taken from `layer`.
Tensor attentionForward(const AttentionLayer& layer, const Tensor& sequence, bool causal);

/// Rows of sinusoidal embeddings, one per value.
Matrix sinusoidalRows(std::span<const double> values, int dim);

} // namespace pas::nn
