#include "pas/compositor/autoencoder.hpp"

#include "pas/core/errors.hpp"
#include "pas/core/random.hpp"
#include "pas/nn/checkpoint.hpp"

#include <fstream>

namespace pas {

using nn::Tape;
using nn::Var;

RgbImage RgbImage::fromRaster(const Raster& raster) {
  if (raster.width() != kSceneSize || raster.height() != kSceneSize) {
    throwInput("scene images must be 64x64");
  }
  RgbImage img;
  for (int y = 0; y < kSceneSize; ++y) {
    for (int x = 0; x < kSceneSize; ++x) {
      for (int c = 0; c < 3; ++c) {
        img.pixels(y * kSceneSize + x, c) = raster.at(x, y, c);
      }
    }
  }
  return img;
}

Raster RgbImage::toRaster() const {
  Raster r(kSceneSize, kSceneSize);
  for (int y = 0; y < kSceneSize; ++y) {
    for (int x = 0; x < kSceneSize; ++x) {
      for (int c = 0; c < 3; ++c) {
        r.at(x, y, c) = pixels(y * kSceneSize + x, c);
      }
      r.at(x, y, 3) = 1.0;
    }
  }
  return r;
}

SceneAutoencoder::SceneAutoencoder(const AutoencoderConfig& config, uint64_t seed)
    : config_(config), store_(std::make_unique<nn::ParamStore>()) {
  if (config.channels < 1 || config.hidden < 1) {
    throwConfig("autoencoder channels and hidden width must be positive");
  }
  Rng rng(mixSeed(seed, 0xae));
  enc1_ = nn::addDense(*store_, "ae.enc1", kPatchValues, config.hidden, rng);
  enc2_ = nn::addDense(*store_, "ae.enc2", config.hidden, config.channels, rng);
  dec1_ = nn::addDense(*store_, "ae.dec1", config.channels, config.hidden, rng);
  dec2_ = nn::addDense(*store_, "ae.dec2", config.hidden, kPatchValues, rng);
  latentMean_ = &store_->add("ae.latent_mean", {1, config.channels});
  latentStd_ = &store_->add("ae.latent_std", {1, config.channels});
  latentStd_->value.setOnes();
}

SceneAutoencoder SceneAutoencoder::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw ModelStateError("cannot open autoencoder checkpoint: " + path.string());
  }
  const auto entries = nn::readCheckpoint(in);
  AutoencoderConfig cfg;
  bool found = false;
  for (const auto& e : entries) {
    if (e.name == "ae.enc1.weight" && e.dims.size() == 2) {
      cfg.hidden = e.dims[1];
      found = true;
    }
    if (e.name == "ae.enc2.weight" && e.dims.size() == 2) {
      cfg.channels = e.dims[1];
    }
  }
  if (!found) {
    throw ModelStateError("checkpoint has no autoencoder parameters: " + path.string());
  }
  SceneAutoencoder ae(cfg);
  nn::loadCheckpoint(*ae.store_, entries, "ae.");
  ae.trained_ = true;
  return ae;
}

void SceneAutoencoder::save(const std::filesystem::path& path) const {
  requireTrained();
  nn::saveCheckpoint(*store_, path);
}

void SceneAutoencoder::requireTrained() const {
  if (!trained_) {
    throw ModelStateError("scene autoencoder is untrained; train it or load a checkpoint");
  }
}

Eigen::MatrixXd SceneAutoencoder::toPatches(const RgbImage& image) {
  Eigen::MatrixXd p(kGridCells, kPatchValues);
  for (int gy = 0; gy < kLatentGrid; ++gy) {
    for (int gx = 0; gx < kLatentGrid; ++gx) {
      int k = 0;
      for (int dy = 0; dy < kPatchSize; ++dy) {
        for (int dx = 0; dx < kPatchSize; ++dx) {
          const int pix = (gy * kPatchSize + dy) * kSceneSize + gx * kPatchSize + dx;
          for (int c = 0; c < 3; ++c) {
            p(gy * kLatentGrid + gx, k++) = image.pixels(pix, c);
          }
        }
      }
    }
  }
  return p;
}

RgbImage SceneAutoencoder::fromPatches(const Eigen::MatrixXd& patches) {
  if (patches.rows() != kGridCells || patches.cols() != kPatchValues) {
    throwInput("patch matrix must be 256x48");
  }
  RgbImage img;
  for (int gy = 0; gy < kLatentGrid; ++gy) {
    for (int gx = 0; gx < kLatentGrid; ++gx) {
      int k = 0;
      for (int dy = 0; dy < kPatchSize; ++dy) {
        for (int dx = 0; dx < kPatchSize; ++dx) {
          const int pix = (gy * kPatchSize + dy) * kSceneSize + gx * kPatchSize + dx;
          for (int c = 0; c < 3; ++c) {
            img.pixels(pix, c) = patches(gy * kLatentGrid + gx, k++);
          }
        }
      }
    }
  }
  return img;
}

Var SceneAutoencoder::encodeVar(Var patches) const {
  return enc2_(nn::leakyRelu(enc1_(patches), config_.leakySlope));
}

Var SceneAutoencoder::decodeVar(Var codes) const {
  return dec2_(nn::leakyRelu(dec1_(codes), config_.leakySlope));
}

Eigen::MatrixXd SceneAutoencoder::encodeMany(const std::vector<RgbImage>& images) const {
  requireTrained();
  Eigen::MatrixXd patches(static_cast<Eigen::Index>(images.size()) * kGridCells, kPatchValues);
  for (size_t i = 0; i < images.size(); ++i) {
    patches.middleRows(static_cast<Eigen::Index>(i) * kGridCells, kGridCells) = toPatches(images[i]);
  }
  Tape tape(false);
  Eigen::MatrixXd z = encodeVar(tape.constant(patches)).value();
  z.rowwise() -= latentMean_->value.row(0);
  return z.array().rowwise() / latentStd_->value.row(0).array();
}

LatentGrid SceneAutoencoder::encode(const RgbImage& image) const {
  return {encodeMany({image})};
}

RgbImage SceneAutoencoder::decode(const LatentGrid& latent) const {
  requireTrained();
  if (latent.values.rows() != kGridCells || latent.channels() != config_.channels) {
    throwInput("latent grid has the wrong shape for this autoencoder");
  }
  Eigen::MatrixXd codes = latent.values.array().rowwise() * latentStd_->value.row(0).array();
  codes.rowwise() += latentMean_->value.row(0);
  Tape tape(false);
  const Eigen::MatrixXd patches = decodeVar(tape.constant(codes)).value().cwiseMax(0.0).cwiseMin(1.0);
  return fromPatches(patches);
}

std::vector<double> SceneAutoencoder::train(const std::vector<RgbImage>& images, const AutoencoderTrainConfig& config) {
  if (images.empty()) {
    throwInput("autoencoder training needs images");
  }
  if (config.batchImages < 1 || config.steps < 0) {
    throwConfig("autoencoder training needs a positive batch and non-negative steps");
  }
  std::vector<Eigen::MatrixXd> patches;
  patches.reserve(images.size());
  for (const auto& img : images) {
    patches.push_back(toPatches(img));
  }
  Rng rng(config.seed);
  std::vector<double> losses;
  Eigen::MatrixXd batch(static_cast<Eigen::Index>(config.batchImages) * kGridCells, kPatchValues);
  for (int step = 0; step < config.steps; ++step) {
    for (int i = 0; i < config.batchImages; ++i) {
      batch.middleRows(Eigen::Index(i) * kGridCells, kGridCells) =
          patches[static_cast<size_t>(rng.uniformInt(0, static_cast<int>(images.size()) - 1))];
    }
    Tape tape;
    Var x = tape.constant(batch);
    Var loss = nn::mseLoss(decodeVar(encodeVar(x)), x);
    tape.backward(loss);
    nn::adamStep(*store_, config.adam);
    const double value = loss.value()(0, 0);
    if (!std::isfinite(value)) {
      throw NumericError("autoencoder loss became non-finite at step " + std::to_string(step + 1));
    }
    losses.push_back(value);
    if (config.log && config.logEvery > 0 && (step + 1) % config.logEvery == 0) {
      config.log(step + 1, value);
    }
  }
  // Per-channel standardization of the raw codes.
  Eigen::MatrixXd all(static_cast<Eigen::Index>(images.size()) * kGridCells, kPatchValues);
  for (size_t i = 0; i < images.size(); ++i) {
    all.middleRows(static_cast<Eigen::Index>(i) * kGridCells, kGridCells) = patches[i];
  }
  Tape tape(false);
  const Eigen::MatrixXd z = encodeVar(tape.constant(all)).value();
  const Eigen::RowVectorXd mean = z.colwise().mean();
  const Eigen::RowVectorXd sd = ((z.rowwise() - mean).array().square().colwise().mean()).sqrt().max(1e-6);
  latentMean_->value = mean;
  latentStd_->value = sd;
  latentMean_->grad.setZero();
  latentStd_->grad.setZero();
  trained_ = true;
  return losses;
}

double SceneAutoencoder::reconstructionError(const std::vector<RgbImage>& images) const {
  requireTrained();
  if (images.empty()) {
    throwInput("reconstruction error needs images");
  }
  double total = 0.0;
  for (const auto& img : images) {
    total += (decode(encode(img)).pixels - img.pixels).cwiseAbs().mean();
  }
  return total / static_cast<double>(images.size());
}

} // namespace pas
