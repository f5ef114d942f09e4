#pragma once

#include "pas/compositor/autoencoder.hpp"
#include "pas/compositor/scene.hpp"
#include "pas/diffusion/schedule.hpp"
#include "pas/text/text_encoder.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <span>
#include <vector>

namespace pas {

class Rng;

/// Text tokens, pooled text and the downsample-rate token.
inline constexpr int kContextTokens = kMaxTokens + 2;
inline constexpr double kMaxDownsampleFactor = 8.0;

/// Nearest-neighbor downsample to max(1, round(size / factor)) pixels per side; output pixel i
/// samples source pixel floor((i + 0.5)·size / outSize).
Raster downsampleNearest(const Raster& raster, double factor);
/// Bilinear resize with pixel-center alignment and edge clamping.
Raster resizeBilinear(const Raster& raster, int width, int height);
/// Factor 1 + w·(8 − 1): nearest downsample then bilinear upsample back, all four channels.
Raster augmentDownsample(const Raster& raster, double w);
/// 4×4 box average of one channel onto the 16×16 latent grid (256 values, grid order).
Eigen::VectorXd poolToGrid(const Raster& raster, int channel);

struct ConditioningBundle {
  LatentGrid avatar;
  Eigen::VectorXd alpha;
  Eigen::VectorXd gray;
  double w = 0.0;
  TextEmbedding text;
};

/// Encodes augmentDownsample(avatar, w) and pools its alpha; the gray channel is the gray
/// render's premultiplied intensity r·α.
ConditioningBundle makeBundle(const SceneAutoencoder& autoencoder, const Raster& avatar, const Raster& gray, double w,
                              const TextEmbedding& text);

struct CompositorConfig {
  int latentChannels = 4;
  int base = 32;
  int bottleneck = 64;
  int heads = 4;
  int timesteps = 1000;
  ScheduleKind schedule = ScheduleKind::Cosine;
  /// false zeroes the avatar, alpha and gray channels: the unconditioned ablation.
  bool conditioned = true;
  double clampBound = 5.0;
};

struct CompositorTrainConfig {
  int steps = 1500;
  int batchSize = 16;
  nn::AdamConfig adam{.learningRate = 1e-3};
  double gradClip = 1.0;
  uint64_t seed = 0;
  std::function<void(int, double)> log;
  int logEvery = 100;
};

/// Denoiser input for one item.
struct DenoiserInput {
  /// 256 × (2C + 2): [z_t | z_p | alpha | gray].
  Eigen::MatrixXd channels;
  /// kContextTokens × kTextWidth: text tokens, pooled text, projected w embedding.
  Eigen::MatrixXd context;
};

struct CompositorBatch {
  std::vector<int> timesteps;
  std::vector<double> w;
  /// Stacked per item: (B·256) × (2C + 2).
  Eigen::MatrixXd channels;
  /// Stacked per item: (B·17) × 64, text tokens then pooled.
  Eigen::MatrixXd text;
  Eigen::MatrixXd noise;
};

/// ε-prediction latent denoiser: a 16×16 conv stage, a 8×8 bottleneck with two
/// cross-attention blocks over the context tokens, and a skip-connected 16×16 output stage.
class CompositorModel {
 public:
  explicit CompositorModel(const CompositorConfig& config = {}, uint64_t seed = 0);

  static CompositorModel load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  [[nodiscard]] int inputChannels() const {
    return 2 * config_.latentChannels + 2;
  }
  [[nodiscard]] DenoiserInput assemble(const Eigen::MatrixXd& zt, const ConditioningBundle& bundle) const;
  /// Channel stack alone, with conditioning columns zeroed for the unconditioned ablation.
  [[nodiscard]] Eigen::MatrixXd channelStack(const Eigen::MatrixXd& zt, const ConditioningBundle& bundle) const;

  /// Predicted noise, (B·256) × C.
  nn::Var predict(nn::Tape& tape, const Eigen::MatrixXd& channels, const Eigen::MatrixXd& text,
                  std::span<const double> w, std::span<const int> timesteps) const;
  nn::Var loss(nn::Tape& tape, const CompositorBatch& batch) const;

  /// Items draw t, then w, then the noise; z_t comes from q_sample of the clean latents.
  CompositorBatch prepareBatch(const SceneAutoencoder& autoencoder, const std::vector<SyntheticScene>& scenes,
                               const std::vector<LatentGrid>& latents, const std::vector<TextEmbedding>& texts,
                               std::span<const int> indices, Rng& rng) const;

  std::vector<double> train(const SceneAutoencoder& autoencoder, const std::vector<SyntheticScene>& scenes,
                            const CompositorTrainConfig& config, const TextEncoder& encoder = TextEncoder::standard());

  /// Ancestral sampling over `steps` respaced timesteps (0 = all), decoded and clamped to [0, 1].
  [[nodiscard]] std::vector<RgbImage> generate(const SceneAutoencoder& autoencoder,
                                               const std::vector<ConditioningBundle>& bundles, int steps,
                                               Rng& rng) const;
  [[nodiscard]] RgbImage generate(const SceneAutoencoder& autoencoder, const ConditioningBundle& bundle, int steps,
                                  Rng& rng) const;

  void markTrained() {
    trained_ = true;
  }
  [[nodiscard]] bool trained() const {
    return trained_;
  }
  nn::ParamStore& params() {
    return *store_;
  }
  [[nodiscard]] const CompositorConfig& config() const {
    return config_;
  }
  [[nodiscard]] const DiffusionSchedule& schedule() const {
    return schedule_;
  }

 private:
  struct Block {
    nn::LayerNormLayer attnNorm;
    nn::AttentionLayer attn;
    nn::LayerNormLayer convNorm;
    nn::Dense conv;
  };

  nn::Var context(nn::Tape& tape, const Eigen::MatrixXd& text, std::span<const double> w) const;

  CompositorConfig config_;
  DiffusionSchedule schedule_;
  std::unique_ptr<nn::ParamStore> store_;
  nn::Dense time1_, time2_, timeHigh_, timeLow_, wProj_;
  nn::Dense convIn_, convA_, down_, up_, merge_, convC_, out_;
  nn::LayerNormLayer normA_, normC_, normOut_;
  std::vector<Block> blocks_;
  bool trained_ = false;
};

/// α·avatar + (1 − α)·generated per pixel; α = 1 pixels copy the avatar exactly.
RgbImage pasteBack(const RgbImage& generated, const Raster& avatar);

/// Mean absolute RGB error over pixels with α = 1, or 0 when there are none.
double avatarRegionError(const RgbImage& image, const Raster& avatar);

} // namespace pas
