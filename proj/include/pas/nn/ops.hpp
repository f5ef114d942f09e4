#pragma once

#include "pas/nn/tape.hpp"

#include <Eigen/SparseCore>

#include <memory>
#include <vector>

namespace pas::nn {

using SparseMatrix = Eigen::SparseMatrix<double>;

// Linear algebra
Var matmul(Var a, Var b);
Var transpose(Var a);

// Elementwise
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double s);
Var addScalar(Var a, double s);
/// a + row broadcast over every row of a; row is 1×cols.
Var addRow(Var a, Var row);
Var leakyRelu(Var a, double slope = 0.01);
/// Tanh approximation of GELU.
Var gelu(Var a);
Var tanh(Var a);
Var sigmoid(Var a);
Var exp(Var a);
Var square(Var a);
/// Clamps values; gradient is zero where the clamp is active.
Var clamp(Var a, double lo, double hi);

inline Var operator+(Var a, Var b) {
  return add(a, b);
}
inline Var operator-(Var a, Var b) {
  return sub(a, b);
}

// Reductions (1×1 results)
Var sum(Var a);
Var mean(Var a);
/// mean((a - target)^2) over all entries.
Var mseLoss(Var a, Var target);

// Shape manipulation
Var sliceRows(Var a, Eigen::Index start, Eigen::Index count);
Var sliceCols(Var a, Eigen::Index start, Eigen::Index count);
Var concatRows(std::span<const Var> parts);
Var concatCols(std::span<const Var> parts);
inline Var concatRows(std::initializer_list<Var> parts) {
  return concatRows(std::span<const Var>(parts.begin(), parts.size()));
}
inline Var concatCols(std::initializer_list<Var> parts) {
  return concatCols(std::span<const Var>(parts.begin(), parts.size()));
}
/// out.row(i) = a.row(index[i]).
Var gatherRows(Var a, std::vector<int> index);
/// vec(out) = map * vec(a) with column-major vectorization; out is outRows×outCols.
Var sparseMap(Var a, std::shared_ptr<const SparseMatrix> map, Eigen::Index outRows, Eigen::Index outCols);
/// out = s * a for a constant sparse s (row shifts, pooling, upsampling).
Var sparseMatmul(std::shared_ptr<const SparseMatrix> s, Var a);

// Normalization
/// Row-wise layer normalization with learned gain and shift (both 1×cols).
Var layerNorm(Var x, Var gain, Var shift, double eps = 1e-5);
/// Divides each row by its L2 norm.
Var rowNormalize(Var a, double eps = 1e-12);
Var logSoftmaxRows(Var a);

/// Scaled dot-product attention over `batch` independent sequences.
/// q is (batch·Lq)×d, k and v are (batch·Lk)×d; heads split the d columns.
/// With `causal`, query i attends only to keys j ≤ i (requires Lq == Lk).
Var attention(Var q, Var k, Var v, int batch, int heads, bool causal);

} // namespace pas::nn
