#pragma once

#include "pas/nn/tensor.hpp"

#include <map>
#include <string>
#include <vector>

namespace pas {
class Rng;
}

namespace pas::nn {

/// A trainable array. Values are held as a matrix: rank-1 parameters are 1×n rows.
struct Parameter {
  std::vector<int> dims;
  Matrix value;
  Matrix grad;
  // Adam moments
  Matrix firstMoment;
  Matrix secondMoment;

  [[nodiscard]] Tensor toTensor() const;
};

/// Named parameter collection. Element addresses are stable for the lifetime of
/// the store (including across moves), so layers hold raw pointers into it.
class ParamStore {
 public:
  ParamStore() = default;
  ParamStore(const ParamStore&) = delete;
  ParamStore& operator=(const ParamStore&) = delete;
  ParamStore(ParamStore&&) = default;
  ParamStore& operator=(ParamStore&&) = default;

  /// Adds a zero-initialized parameter. Names must be unique.
  Parameter& add(const std::string& name, std::vector<int> dims);
  /// Adds a parameter filled with uniform(-bound, bound).
  Parameter& addUniform(const std::string& name, std::vector<int> dims, double bound, Rng& rng);

  [[nodiscard]] bool contains(const std::string& name) const;
  Parameter& get(const std::string& name);
  [[nodiscard]] const Parameter& get(const std::string& name) const;

  void zeroGrad();
  [[nodiscard]] size_t parameterCount() const;

  [[nodiscard]] int step() const {
    return step_;
  }
  void incrementStep() {
    ++step_;
  }

  auto begin() {
    return params_.begin();
  }
  auto end() {
    return params_.end();
  }
  [[nodiscard]] auto begin() const {
    return params_.begin();
  }
  [[nodiscard]] auto end() const {
    return params_.end();
  }
  [[nodiscard]] size_t size() const {
    return params_.size();
  }

 private:
  std::map<std::string, Parameter> params_;
  int step_ = 0;
};

} // namespace pas::nn
