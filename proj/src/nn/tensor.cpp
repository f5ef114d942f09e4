#include "pas/nn/tensor.hpp"

#include "pas/core/errors.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <string>

namespace pas::nn {

size_t elementCount(const std::vector<int>& dims) {
  size_t n = 1;
  for (int d : dims) {
    if (d <= 0) {
      throwInput("tensor dimensions must be positive");
    }
    n *= static_cast<size_t>(d);
  }
  return n;
}

Tensor::Tensor(std::vector<int> dims) : dims_(std::move(dims)) {
  data_.assign(elementCount(dims_), 0.0);
}

Tensor::Tensor(std::vector<int> dims, std::vector<double> data)
    : dims_(std::move(dims)), data_(std::move(data)) {
  if (elementCount(dims_) != data_.size()) {
    throwInput(
        "tensor data length " + std::to_string(data_.size()) + " does not match dims product " +
        std::to_string(elementCount(dims_)));
  }
}

Tensor Tensor::fromMatrix(const Matrix& m) {
  std::vector<double> data(static_cast<size_t>(m.size()));
  Eigen::Map<RowMajorMatrix>(data.data(), m.rows(), m.cols()) = m;
  return Tensor({static_cast<int>(m.rows()), static_cast<int>(m.cols())}, std::move(data));
}

Tensor Tensor::fromVector(const Vector& v) {
  return Tensor({static_cast<int>(v.size())}, std::vector<double>(v.data(), v.data() + v.size()));
}

Matrix Tensor::toMatrix() const {
  Eigen::Index rows = 1;
  Eigen::Index cols = 1;
  if (dims_.size() == 1) {
    cols = dims_[0];
  } else if (dims_.size() >= 2) {
    rows = dims_[0];
    cols = static_cast<Eigen::Index>(data_.size()) / rows;
  }
  return Eigen::Map<const RowMajorMatrix>(data_.data(), rows, cols);
}

bool Tensor::allFinite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

Tensor denseForward(const Tensor& x, const Tensor& weights, const Tensor& bias) {
  if (weights.rank() != 2 || bias.rank() != 1) {
    throwInput("dense: weights must be rank 2 and bias rank 1");
  }
  const int din = weights.dims()[0];
  const int dout = weights.dims()[1];
  if (bias.dims()[0] != dout) {
    throwInput("dense: bias length does not match output width");
  }
  Matrix xm;
  if (x.rank() == 1) {
    xm = x.toMatrix();
  } else if (x.rank() == 2) {
    xm = x.toMatrix();
  } else {
    throwInput("dense: input must be rank 1 or 2");
  }
  if (xm.cols() != din) {
    throwInput(
        "dense: input width " + std::to_string(xm.cols()) + " does not match weights rows " +
        std::to_string(din));
  }
  Matrix y = xm * weights.toMatrix();
  y.rowwise() += bias.toMatrix().row(0);
  if (x.rank() == 1) {
    return Tensor::fromVector(y.row(0).transpose());
  }
  return Tensor::fromMatrix(y);
}

Vector sinusoidalEmbed(double value, int dim) {
  if (dim <= 0 || dim % 2 != 0) {
    throwConfig("sinusoidal embedding width must be a positive even integer");
  }
  Vector out(dim);
  const int pairs = dim / 2;
  for (int i = 0; i < pairs; ++i) {
    const double freq = std::pow(10000.0, -2.0 * i / dim);
    out[2 * i] = std::sin(value * freq);
    out[2 * i + 1] = std::cos(value * freq);
  }
  return out;
}

} // namespace pas::nn
