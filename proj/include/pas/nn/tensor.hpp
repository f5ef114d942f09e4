#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <vector>

namespace pas::nn {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowMajorMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Dense n-dimensional array of doubles stored row-major.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<int> dims);
  Tensor(std::vector<int> dims, std::vector<double> data);

  /// Rank-2 tensor with dims {rows, cols}.
  static Tensor fromMatrix(const Matrix& m);
  /// Rank-1 tensor.
  static Tensor fromVector(const Vector& v);

  /// Rank 1 maps to a 1×n row, rank 2 to rows×cols, higher ranks to dims[0]×(rest).
  [[nodiscard]] Matrix toMatrix() const;

  [[nodiscard]] const std::vector<int>& dims() const {
    return dims_;
  }
  [[nodiscard]] const std::vector<double>& data() const {
    return data_;
  }
  std::vector<double>& data() {
    return data_;
  }
  [[nodiscard]] size_t size() const {
    return data_.size();
  }
  [[nodiscard]] size_t rank() const {
    return dims_.size();
  }

  double& operator[](size_t i) {
    return data_[i];
  }
  double operator[](size_t i) const {
    return data_[i];
  }

  [[nodiscard]] bool allFinite() const;

  bool operator==(const Tensor&) const = default;

 private:
  std::vector<int> dims_;
  std::vector<double> data_;
};

size_t elementCount(const std::vector<int>& dims);

/// y = xW + b for x[n, d_in], W[d_in, d_out], b[d_out]. Throws InputError on mismatch.
Tensor denseForward(const Tensor& x, const Tensor& weights, const Tensor& bias);

/// Interleaved (sin, cos) pairs over geometrically spaced frequencies 10000^(-2i/dim).
/// Throws ConfigError when dim is odd or non-positive.
Vector sinusoidalEmbed(double value, int dim);

} // namespace pas::nn
