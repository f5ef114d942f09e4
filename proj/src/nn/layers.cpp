#include "pas/nn/layers.hpp"

#include "pas/core/errors.hpp"
#include "pas/core/random.hpp"

#include <cmath>

namespace pas::nn {

Var Dense::operator()(Var x) const {
  Tape& tape = *x.tape;
  return addRow(matmul(x, tape.param(*weight)), tape.param(*bias));
}

Dense addDense(ParamStore& store, const std::string& name, int in, int out, Rng& rng, double initScale) {
  const double bound = initScale / std::sqrt(static_cast<double>(in));
  Dense layer;
  layer.weight = &store.addUniform(name + ".weight", {in, out}, bound, rng);
  layer.bias = &store.addUniform(name + ".bias", {out}, bound, rng);
  return layer;
}

Var LayerNormLayer::operator()(Var x) const {
  Tape& tape = *x.tape;
  return layerNorm(x, tape.param(*gain), tape.param(*shift));
}

LayerNormLayer addLayerNorm(ParamStore& store, const std::string& name, int width) {
  LayerNormLayer layer;
  layer.gain = &store.add(name + ".gain", {width});
  layer.gain->value.setOnes();
  layer.shift = &store.add(name + ".shift", {width});
  return layer;
}

Var AttentionLayer::selfAttention(Var x, int batch, bool causal) const {
  return output(attention(query(x), key(x), value(x), batch, heads, causal));
}

Var AttentionLayer::crossAttention(Var x, Var context, int batch) const {
  return output(attention(query(x), key(context), value(context), batch, heads, false));
}

AttentionLayer addAttention(ParamStore& store, const std::string& name, int width, int heads, Rng& rng) {
  return addCrossAttention(store, name, width, width, heads, rng);
}

AttentionLayer addCrossAttention(
    ParamStore& store,
    const std::string& name,
    int width,
    int contextWidth,
    int heads,
    Rng& rng) {
  if (heads <= 0 || width % heads != 0) {
    throwConfig("attention width " + std::to_string(width) + " is not divisible by " + std::to_string(heads) + " heads");
  }
  AttentionLayer layer;
  layer.heads = heads;
  layer.query = addDense(store, name + ".query", width, width, rng);
  layer.key = addDense(store, name + ".key", contextWidth, width, rng);
  layer.value = addDense(store, name + ".value", contextWidth, width, rng);
  layer.output = addDense(store, name + ".output", width, width, rng);
  return layer;
}

Tensor attentionForward(const AttentionLayer& layer, const Tensor& sequence, bool causal) {
  if (sequence.rank() != 2) {
    throwInput("attentionForward: sequence must be rank 2 [L, d]");
  }
  Tape tape(false);
  Var x = tape.constant(sequence.toMatrix());
  return Tensor::fromMatrix(layer.selfAttention(x, 1, causal).value());
}

Matrix sinusoidalRows(std::span<const double> values, int dim) {
  Matrix out(static_cast<Eigen::Index>(values.size()), dim);
  for (size_t i = 0; i < values.size(); ++i) {
    out.row(static_cast<Eigen::Index>(i)) = sinusoidalEmbed(values[i], dim).transpose();
  }
  return out;
}

} // namespace pas::nn
