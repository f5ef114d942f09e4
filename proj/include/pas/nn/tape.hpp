#pragma once

#include "pas/nn/params.hpp"
#include "pas/nn/tensor.hpp"

#include <functional>
#include <initializer_list>
#include <span>
#include <vector>

namespace pas::nn {

class Tape;

/// Handle to a value recorded on a tape.
struct Var {
  Tape* tape = nullptr;
  int id = -1;

  [[nodiscard]] const Matrix& value() const;
  [[nodiscard]] Eigen::Index rows() const {
    return value().rows();
  }
  [[nodiscard]] Eigen::Index cols() const {
    return value().cols();
  }
};

/// Dynamically recorded computation graph for reverse-mode differentiation.
/// A tape built with recordGradients=false only evaluates values; it is the
/// inference path and keeps no backward closures.
class Tape {
 public:
  using Backward = std::function<void(Tape&, const Matrix& outGrad)>;

  explicit Tape(bool recordGradients = true) : record_(recordGradients) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Matrix value);
  Var param(Parameter& parameter);

  /// Records an operation result computed from `inputs`.
  Var record(Matrix value, std::span<const Var> inputs, Backward backward);
  Var record(Matrix value, std::initializer_list<Var> inputs, Backward backward) {
    return record(std::move(value), std::span<const Var>(inputs.begin(), inputs.size()), std::move(backward));
  }

  [[nodiscard]] const Matrix& value(Var v) const {
    return nodes_[static_cast<size_t>(v.id)].value;
  }
  /// Gradient of the last backward() target with respect to v (zero if unreached).
  [[nodiscard]] Matrix grad(Var v) const;

  [[nodiscard]] bool needsGrad(Var v) const {
    return nodes_[static_cast<size_t>(v.id)].needsGrad;
  }
  template <typename Derived>
  void accumulate(Var v, const Eigen::MatrixBase<Derived>& g) {
    Node& node = nodes_[static_cast<size_t>(v.id)];
    if (!node.needsGrad) {
      return;
    }
    if (!node.hasGrad) {
      node.grad = g;
      node.hasGrad = true;
    } else {
      node.grad += g;
    }
  }

  /// Back-propagates from a 1×1 value and adds the result into parameter gradients.
  void backward(Var loss);

  [[nodiscard]] bool recording() const {
    return record_;
  }
  [[nodiscard]] size_t size() const {
    return nodes_.size();
  }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    Backward backward;
    Parameter* param = nullptr;
    bool needsGrad = false;
    bool hasGrad = false;
  };

  std::vector<Node> nodes_;
  bool record_;
};

} // namespace pas::nn
