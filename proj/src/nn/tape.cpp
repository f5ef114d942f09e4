#include "pas/nn/tape.hpp"

#include "pas/core/errors.hpp"
#include "pas/core/random.hpp"

#include <cmath>

#if defined(__GLIBC__)
#include <malloc.h>
#endif

namespace pas::nn {

namespace {

#if defined(__GLIBC__)
// Tape values are short-lived matrices of a few hundred KB. Keeping them on the heap
// instead of a fresh mmap per allocation removes most page-fault overhead in training.
const bool kHeapTuned = [] {
  mallopt(M_MMAP_THRESHOLD, 64 << 20);
  mallopt(M_TRIM_THRESHOLD, 256 << 20);
  return true;
}();
#endif

} // namespace

Tensor Parameter::toTensor() const {
  std::vector<double> data(static_cast<size_t>(value.size()));
  Eigen::Map<RowMajorMatrix>(data.data(), value.rows(), value.cols()) = value;
  return Tensor(dims, std::move(data));
}

namespace {

std::pair<Eigen::Index, Eigen::Index> matrixShape(const std::vector<int>& dims) {
  if (dims.empty()) {
    throwInput("parameter must have rank >= 1");
  }
  if (dims.size() == 1) {
    return {1, dims[0]};
  }
  const auto total = static_cast<Eigen::Index>(elementCount(dims));
  return {dims[0], total / dims[0]};
}

} // namespace

Parameter& ParamStore::add(const std::string& name, std::vector<int> dims) {
  if (params_.count(name) != 0) {
    throwConfig("duplicate parameter name: " + name);
  }
  const auto [rows, cols] = matrixShape(dims);
  Parameter p;
  p.dims = std::move(dims);
  p.value = Matrix::Zero(rows, cols);
  p.grad = Matrix::Zero(rows, cols);
  p.firstMoment = Matrix::Zero(rows, cols);
  p.secondMoment = Matrix::Zero(rows, cols);
  return params_.emplace(name, std::move(p)).first->second;
}

Parameter& ParamStore::addUniform(const std::string& name, std::vector<int> dims, double bound, Rng& rng) {
  Parameter& p = add(name, std::move(dims));
  for (Eigen::Index r = 0; r < p.value.rows(); ++r) {
    for (Eigen::Index c = 0; c < p.value.cols(); ++c) {
      p.value(r, c) = rng.uniform(-bound, bound);
    }
  }
  return p;
}

bool ParamStore::contains(const std::string& name) const {
  return params_.count(name) != 0;
}

Parameter& ParamStore::get(const std::string& name) {
  auto it = params_.find(name);
  if (it == params_.end()) {
    throw ModelStateError("missing parameter: " + name);
  }
  return it->second;
}

const Parameter& ParamStore::get(const std::string& name) const {
  auto it = params_.find(name);
  if (it == params_.end()) {
    throw ModelStateError("missing parameter: " + name);
  }
  return it->second;
}

void ParamStore::zeroGrad() {
  for (auto& [name, p] : params_) {
    p.grad.setZero();
  }
}

size_t ParamStore::parameterCount() const {
  size_t n = 0;
  for (const auto& [name, p] : params_) {
    n += static_cast<size_t>(p.value.size());
  }
  return n;
}

const Matrix& Var::value() const {
  return tape->value(*this);
}

Var Tape::constant(Matrix value) {
  Node node;
  node.value = std::move(value);
  nodes_.push_back(std::move(node));
  return {this, static_cast<int>(nodes_.size()) - 1};
}

Var Tape::param(Parameter& parameter) {
  Node node;
  node.value = parameter.value;
  node.param = &parameter;
  node.needsGrad = record_;
  nodes_.push_back(std::move(node));
  return {this, static_cast<int>(nodes_.size()) - 1};
}

Var Tape::record(Matrix value, std::span<const Var> inputs, Backward backward) {
  Node node;
  node.value = std::move(value);
  if (record_) {
    for (const Var& in : inputs) {
      if (nodes_[static_cast<size_t>(in.id)].needsGrad) {
        node.needsGrad = true;
        break;
      }
    }
    if (node.needsGrad) {
      node.backward = std::move(backward);
    }
  }
  nodes_.push_back(std::move(node));
  return {this, static_cast<int>(nodes_.size()) - 1};
}

Matrix Tape::grad(Var v) const {
  const Node& node = nodes_[static_cast<size_t>(v.id)];
  if (!node.hasGrad) {
    return Matrix::Zero(node.value.rows(), node.value.cols());
  }
  return node.grad;
}

void Tape::backward(Var loss) {
  if (!record_) {
    throw ModelStateError("backward() on a tape that does not record gradients");
  }
  Node& root = nodes_[static_cast<size_t>(loss.id)];
  if (root.value.size() != 1) {
    throwInput("backward() requires a scalar loss");
  }
  if (!std::isfinite(root.value(0, 0))) {
    throw NumericError("non-finite loss");
  }
  if (!root.needsGrad) {
    return;
  }
  root.grad = Matrix::Ones(1, 1);
  root.hasGrad = true;
  for (int i = loss.id; i >= 0; --i) {
    Node& node = nodes_[static_cast<size_t>(i)];
    if (!node.hasGrad) {
      continue;
    }
    if (node.backward) {
      node.backward(*this, node.grad);
    }
    if (node.param != nullptr) {
      node.param->grad += node.grad;
    }
  }
}

} // namespace pas::nn
