#pragma once

#include "pas/diffusion/schedule.hpp"
#include "pas/kinematics/skeleton.hpp"
#include "pas/nn/layers.hpp"
#include "pas/nn/optim.hpp"
#include "pas/text/text_encoder.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace pas {

class PosePrior;
class Rng;

enum class PoseMode { Latent, SixD };

PoseMode parsePoseMode(const std::string& name);
std::string poseModeName(PoseMode mode);

struct PoseDiffusionConfig {
  PoseMode mode = PoseMode::Latent;
  int layers = 4;
  int width = 128;
  int heads = 4;
  int mlpRatio = 4;
  int timesteps = 1000;
  ScheduleKind schedule = ScheduleKind::Cosine;
  double dropProbability = 0.1;
  /// Pose and root vector widths; 0 selects the mode default (32 or 126, and 6).
  int poseDim = 0;
  int rootDim = 0;
  /// x̂0 clamp bound; 0 selects 6 for LATENT and 3 for SIX_D.
  double clampBound = 0.0;

  [[nodiscard]] int resolvedPoseDim() const;
  [[nodiscard]] int resolvedRootDim() const;
  [[nodiscard]] double resolvedClamp() const;
};

/// Number of sequence slots: caption tokens, pooled text, timestep, x_p, x_r, two queries.
inline constexpr int kDenoiserSlots = kMaxTokens + 6;
inline constexpr int kPooledSlot = kMaxTokens;
inline constexpr int kTimeSlot = kMaxTokens + 1;
inline constexpr int kPoseSlot = kMaxTokens + 2;
inline constexpr int kRootSlot = kMaxTokens + 3;
inline constexpr int kPoseQuerySlot = kMaxTokens + 4;
inline constexpr int kOrientQuerySlot = kMaxTokens + 5;

/// Clean training pairs, rows = examples.
struct PoseTrainingSet {
  Eigen::MatrixXd pose;
  Eigen::MatrixXd root;
  /// Per-example caption token embeddings, stacked: (n·kMaxTokens) × kTextWidth.
  Eigen::MatrixXd tokens;
  Eigen::MatrixXd pooled;

  [[nodiscard]] Eigen::Index size() const {
    return pose.rows();
  }
  void append(const Eigen::VectorXd& pose, const Eigen::VectorXd& root, const TextEmbedding& text);
};

/// One noised mini-batch as fed to the denoiser.
struct NoisedBatch {
  std::vector<int> timesteps;
  Eigen::MatrixXd noisyPose;
  Eigen::MatrixXd noisyRoot;
  Eigen::MatrixXd cleanPose;
  Eigen::MatrixXd cleanRoot;
  Eigen::MatrixXd tokens;
  Eigen::MatrixXd pooled;
  std::vector<bool> dropped;
};

struct PoseDiffusionTrainConfig {
  int steps = 4000;
  int batchSize = 64;
  nn::AdamConfig adam{.learningRate = 1e-3};
  double gradClip = 1.0;
  uint64_t seed = 0;
  std::function<void(int, double)> log;
  int logEvery = 100;
};

struct GuidanceConfig {
  double scale = 3.0;
  /// Sampling steps; 0 uses every step of the schedule.
  int steps = 0;
};

struct PoseState {
  PoseMode mode = PoseMode::Latent;
  Eigen::VectorXd pose;
  Eigen::VectorXd root;
};

/// Text-conditioned x0-predicting diffusion model over (pose, root) vectors with a
/// decoder-only causal transformer denoiser.
class PoseDiffusion {
 public:
  explicit PoseDiffusion(const PoseDiffusionConfig& config = {}, uint64_t seed = 0);

  static PoseDiffusion load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  /// Predicted (x̂0_pose | x̂0_root), rows = batch.
  nn::Var predict(
      nn::Tape& tape,
      const Eigen::MatrixXd& noisyPose,
      const Eigen::MatrixXd& noisyRoot,
      const std::vector<int>& timesteps,
      const Eigen::MatrixXd& tokens,
      const Eigen::MatrixXd& pooled) const;

  /// Draws timesteps, noise and text dropout for the given rows of `data`.
  NoisedBatch prepareBatch(const PoseTrainingSet& data, const std::vector<int>& rows, Rng& rng) const;
  /// Per-element mean squared error between the prediction and the clean target.
  nn::Var loss(nn::Tape& tape, const NoisedBatch& batch) const;
  /// One optimizer step on a random mini-batch; returns the loss.
  double trainStep(const PoseTrainingSet& data, int batchSize, Rng& rng, const nn::AdamConfig& adam, double gradClip);
  std::vector<double> train(const PoseTrainingSet& data, const PoseDiffusionTrainConfig& config);

  /// Classifier-free guided ancestral sampling of n states.
  [[nodiscard]] std::vector<PoseState> sample(const TextEmbedding& text, const GuidanceConfig& guidance, int n, Rng& rng) const;
  /// The same sampler driven by the conditional prediction alone.
  [[nodiscard]] std::vector<PoseState> sampleConditional(const TextEmbedding& text, int steps, int n, Rng& rng) const;

  [[nodiscard]] const PoseDiffusionConfig& config() const {
    return config_;
  }
  [[nodiscard]] const DiffusionSchedule& schedule() const {
    return schedule_;
  }
  nn::ParamStore& params() {
    return *store_;
  }
  void markTrained() {
    trained_ = true;
  }
  [[nodiscard]] bool trained() const {
    return trained_;
  }

 private:
  struct Block {
    nn::LayerNormLayer norm1;
    nn::AttentionLayer attention;
    nn::LayerNormLayer norm2;
    nn::Dense mlpIn;
    nn::Dense mlpOut;
  };

  std::vector<PoseState> runSampler(const TextEmbedding& text, std::optional<double> scale, int steps, int n, Rng& rng) const;
  Eigen::MatrixXd predictValue(
      const Eigen::MatrixXd& x,
      int t,
      const Eigen::MatrixXd& tokens,
      const Eigen::MatrixXd& pooled) const;

  PoseDiffusionConfig config_;
  DiffusionSchedule schedule_;
  std::unique_ptr<nn::ParamStore> store_;
  nn::Dense tokenIn_, pooledIn_, timeIn1_, timeIn2_, poseIn_, rootIn_;
  nn::Parameter* poseQuery_ = nullptr;
  nn::Parameter* orientQuery_ = nullptr;
  nn::Parameter* positions_ = nullptr;
  std::vector<Block> blocks_;
  nn::LayerNormLayer finalNorm_;
  nn::Dense poseOut_, rootOut_;
  bool trained_ = false;
};

/// Converts a sampled state into a pose: LATENT decodes through the prior, SIX_D converts
/// directly and optionally regularizes. The root is always a direct 6D conversion.
Pose decodeToPose(const PoseState& state, const PosePrior* prior, bool regularize);

/// Diffusion targets for a corpus: LATENT uses prior means, SIX_D the raw 6D body.
PoseTrainingSet buildTrainingSet(
    const std::vector<Pose>& poses,
    const std::vector<std::string>& captions,
    PoseMode mode,
    const PosePrior* prior,
    const TextEncoder& encoder);

} // namespace pas
