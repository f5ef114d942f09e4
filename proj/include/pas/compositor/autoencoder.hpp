#pragma once

#include "pas/nn/layers.hpp"
#include "pas/nn/optim.hpp"
#include "pas/render/raster.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <vector>

namespace pas {

inline constexpr int kSceneSize = 64;
inline constexpr int kLatentGrid = 16;
inline constexpr int kPatchSize = kSceneSize / kLatentGrid;
inline constexpr int kGridCells = kLatentGrid * kLatentGrid;
inline constexpr int kPatchValues = kPatchSize * kPatchSize * 3;

/// 64×64 RGB image; row y·64 + x of `pixels` holds (r, g, b).
struct RgbImage {
  Eigen::MatrixXd pixels = Eigen::MatrixXd::Zero(kSceneSize * kSceneSize, 3);

  static RgbImage fromRaster(const Raster& raster);
  /// RGBA raster with alpha 1.
  [[nodiscard]] Raster toRaster() const;
  bool operator==(const RgbImage& other) const {
    return pixels == other.pixels;
  }
};

/// 16×16 grid of C channels; row y·16 + x.
struct LatentGrid {
  Eigen::MatrixXd values;

  [[nodiscard]] int channels() const {
    return static_cast<int>(values.cols());
  }
};

struct AutoencoderConfig {
  int channels = 4;
  int hidden = 128;
  double leakySlope = 0.2;
};

struct AutoencoderTrainConfig {
  int steps = 1500;
  int batchImages = 8;
  nn::AdamConfig adam{.learningRate = 2e-3};
  uint64_t seed = 0;
  std::function<void(int, double)> log;
  int logEvery = 100;
};

/// 4×4-patch MLP autoencoder: each patch of 48 RGB values maps to C latent values.
/// Latents are standardized per channel with statistics measured after training.
class SceneAutoencoder {
 public:
  explicit SceneAutoencoder(const AutoencoderConfig& config = {}, uint64_t seed = 0);

  static SceneAutoencoder load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  /// Rows are patches (image-major, then grid order), 48 columns.
  static Eigen::MatrixXd toPatches(const RgbImage& image);
  static RgbImage fromPatches(const Eigen::MatrixXd& patches);

  [[nodiscard]] LatentGrid encode(const RgbImage& image) const;
  /// Decoded image clamped to [0, 1].
  [[nodiscard]] RgbImage decode(const LatentGrid& latent) const;
  /// Stacked encode over many images: (n·256)×C.
  [[nodiscard]] Eigen::MatrixXd encodeMany(const std::vector<RgbImage>& images) const;

  nn::Var encodeVar(nn::Var patches) const;
  nn::Var decodeVar(nn::Var codes) const;

  std::vector<double> train(const std::vector<RgbImage>& images, const AutoencoderTrainConfig& config);
  /// Mean absolute error of decode(encode(x)) over all pixels and channels.
  [[nodiscard]] double reconstructionError(const std::vector<RgbImage>& images) const;

  [[nodiscard]] bool trained() const {
    return trained_;
  }
  [[nodiscard]] const AutoencoderConfig& config() const {
    return config_;
  }
  nn::ParamStore& params() {
    return *store_;
  }

 private:
  void requireTrained() const;

  AutoencoderConfig config_;
  std::unique_ptr<nn::ParamStore> store_;
  nn::Dense enc1_, enc2_, dec1_, dec2_;
  nn::Parameter* latentMean_ = nullptr;
  nn::Parameter* latentStd_ = nullptr;
  bool trained_ = false;
};

} // namespace pas
