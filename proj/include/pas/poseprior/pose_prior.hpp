#pragma once

#include "pas/kinematics/skeleton.hpp"
#include "pas/nn/layers.hpp"
#include "pas/nn/optim.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>

namespace pas {

inline constexpr int kLatentDim = 32;
inline constexpr int kBody6dDim = 6 * kBodyJointCount;

struct PosePriorConfig {
  int hidden = 256;
  double betaKl = 0.005;
  double lambdaRot = 1.0;
  double leakySlope = 0.2;
};

struct LatentGaussian {
  Eigen::VectorXd mean;
  /// Clamped to [-10, 5].
  Eigen::VectorXd logStd;
};

/// Closed-form KL(N(mean, exp(logStd)^2) || N(0, I)) summed over dimensions, in nats.
double gaussianKl(const LatentGaussian& q);

struct VaeLossTerms {
  nn::Var total;
  nn::Var recon;
  nn::Var kl;
  nn::Var validity;
};

struct PosePriorTrainConfig {
  int steps = 3000;
  int batchSize = 128;
  nn::AdamConfig adam{.learningRate = 1e-3};
  uint64_t seed = 0;
  /// Called every `logEvery` steps with (step, loss).
  std::function<void(int, double)> log;
  int logEvery = 100;
};

/// Variational autoencoder over the 21 body-joint rotations in 6D form.
/// Encoder and decoder are each two leaky-ReLU dense layers.
class PosePrior {
 public:
  explicit PosePrior(const PosePriorConfig& config = {}, uint64_t seed = 0);

  /// Restores a trained prior; the hidden width is taken from the checkpoint.
  static PosePrior load(const std::filesystem::path& path, const PosePriorConfig& config = {});
  void save(const std::filesystem::path& path) const;

  /// Rows are 126-d body vectors. Throws ModelStateError until trained or loaded.
  [[nodiscard]] LatentGaussian encode(const Eigen::VectorXd& body6d) const;
  [[nodiscard]] Eigen::MatrixXd encodeMeans(const Eigen::MatrixXd& body6d) const;
  /// Raw decoder output (126 values); Gram-Schmidt yields the rotations.
  [[nodiscard]] Eigen::VectorXd decode(const Eigen::VectorXd& z) const;
  [[nodiscard]] Eigen::MatrixXd decodeBatch(const Eigen::MatrixXd& z) const;
  /// Body replaced by decode(encode(body).mean); the root is copied unchanged.
  [[nodiscard]] Pose regularize(const Pose& pose) const;

  /// Loss on a batch (rows = examples) with fixed reparameterization noise (rows × 32).
  VaeLossTerms loss(nn::Tape& tape, const Eigen::MatrixXd& batch, const Eigen::MatrixXd& noise) const;
  /// Gaussian of the encoder and the decoded reparameterized sample, recorded on `tape`.
  nn::Var encodeVar(nn::Tape& tape, nn::Var x, nn::Var* logStd) const;
  nn::Var decodeVar(nn::Tape& tape, nn::Var z) const;

  /// Adam training on random mini-batches of `data` (rows = examples). Marks the model trained.
  std::vector<double> train(const Eigen::MatrixXd& data, const PosePriorTrainConfig& config);

  void markTrained() {
    trained_ = true;
  }
  [[nodiscard]] bool trained() const {
    return trained_;
  }
  nn::ParamStore& params() {
    return *store_;
  }
  [[nodiscard]] const PosePriorConfig& config() const {
    return config_;
  }

 private:
  void requireTrained() const;

  PosePriorConfig config_;
  std::unique_ptr<nn::ParamStore> store_;
  nn::Dense enc1_, enc2_, encMean_, encLogStd_;
  nn::Dense dec1_, dec2_, decOut_;
  bool trained_ = false;
};

/// Stacks bodyRot6d() of each pose as rows.
Eigen::MatrixXd bodyMatrix(const std::vector<Pose>& poses);

} // namespace pas
