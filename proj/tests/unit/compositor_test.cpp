#include "pas/compositor/compositor.hpp"
#include "pas/core/random.hpp"
#include "pas/data/archetypes.hpp"
#include "pas/nn/grad_check.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <numeric>

using namespace pas;

namespace {

Raster constantRaster(double r, double g, double b, double a) {
  Raster out(kSceneSize, kSceneSize);
  for (int y = 0; y < kSceneSize; ++y) {
    for (int x = 0; x < kSceneSize; ++x) {
      out.at(x, y, 0) = r;
      out.at(x, y, 1) = g;
      out.at(x, y, 2) = b;
      out.at(x, y, 3) = a;
    }
  }
  return out;
}

Raster randomRaster(Rng& rng, bool binaryAlpha) {
  Raster out(kSceneSize, kSceneSize);
  for (auto& v : out.data()) {
    v = rng.uniform(0.0, 1.0);
  }
  if (binaryAlpha) {
    for (int y = 0; y < kSceneSize; ++y) {
      for (int x = 0; x < kSceneSize; ++x) {
        out.at(x, y, 3) = rng.bernoulli(0.5) ? 1.0 : rng.uniform(0.0, 1.0);
      }
    }
  }
  return out;
}

RgbImage randomImage(Rng& rng) {
  RgbImage img;
  img.pixels = (rng.normalMatrix(kSceneSize * kSceneSize, 3).array() * 0.3 + 0.5).cwiseMax(0.0).cwiseMin(1.0);
  return img;
}

const SceneAutoencoder& quickAutoencoder() {
  static const SceneAutoencoder* ae = [] {
    auto* a = new SceneAutoencoder({}, 1);
    std::vector<RgbImage> imgs;
    for (const auto& s : generateScenes(40, 3)) {
      imgs.push_back(s.image);
    }
    AutoencoderTrainConfig cfg;
    cfg.steps = 400;
    a->train(imgs, cfg);
    return a;
  }();
  return *ae;
}

CompositorConfig tinyConfig() {
  CompositorConfig c;
  c.latentChannels = 4;
  c.base = 4;
  c.bottleneck = 8;
  c.heads = 2;
  c.timesteps = 20;
  return c;
}

ConditioningBundle bundleFor(const SyntheticScene& scene, double w) {
  return makeBundle(quickAutoencoder(), scene.avatar, scene.gray, w, TextEncoder::standard().encode(scene.caption));
}

} // namespace

TEST(Augment, ZeroRateIsIdentity) {
  Rng rng(1);
  const Raster r = randomRaster(rng, false);
  EXPECT_EQ(augmentDownsample(r, 0.0), r);
}

TEST(Augment, ConstantRasterUnchangedAtFullRate) {
  const Raster r = constantRaster(0.2, 0.7, 0.4, 0.9);
  EXPECT_EQ(augmentDownsample(r, 1.0), r);
  EXPECT_EQ(augmentDownsample(r, 0.37), r);
}

TEST(Augment, CheckerboardSamplesOnePerBlock) {
  Raster cb(kSceneSize, kSceneSize);
  for (int y = 0; y < kSceneSize; ++y) {
    for (int x = 0; x < kSceneSize; ++x) {
      for (int c = 0; c < 4; ++c) {
        cb.at(x, y, c) = (x + y) % 2 == 0 ? 1.0 : 0.0;
      }
    }
  }
  const Raster small = downsampleNearest(cb, kMaxDownsampleFactor);
  ASSERT_EQ(small.width(), 8);
  ASSERT_EQ(small.height(), 8);
  // Block (i, j) samples source pixel (8i + 4, 8j + 4): even parity in every block.
  for (int y = 0; y < 8; ++y) {
    for (int x = 0; x < 8; ++x) {
      EXPECT_EQ(small.at(x, y, 0), cb.at(8 * x + 4, 8 * y + 4, 0));
    }
  }
  const Raster up = augmentDownsample(cb, 1.0);
  EXPECT_EQ(up, constantRaster(1.0, 1.0, 1.0, 1.0));
}

TEST(Augment, RejectsRateOutsideUnitInterval) {
  const Raster r = constantRaster(0, 0, 0, 0);
  EXPECT_THROW(augmentDownsample(r, -0.1), InputError);
  EXPECT_THROW(augmentDownsample(r, 1.5), InputError);
}

TEST(Autoencoder, PatchesRoundTrip) {
  Rng rng(2);
  const RgbImage img = randomImage(rng);
  EXPECT_EQ(SceneAutoencoder::fromPatches(SceneAutoencoder::toPatches(img)), img);
}

TEST(Autoencoder, ReconstructsValidationScenes) {
  const SceneAutoencoder& ae = quickAutoencoder();
  std::vector<RgbImage> val;
  for (const auto& s : generateScenes(10, 99)) {
    val.push_back(s.image);
  }
  const double mae = ae.reconstructionError(val);
  EXPECT_LT(mae, 0.06);
  EXPECT_GT(mae, 0.0);
  EXPECT_EQ(ae.decode(ae.encode(val[0])), ae.decode(ae.encode(val[0])));
  const RgbImage d = ae.decode(ae.encode(val[1]));
  EXPECT_GE(d.pixels.minCoeff(), 0.0);
  EXPECT_LE(d.pixels.maxCoeff(), 1.0);
}

TEST(Autoencoder, StandardizedLatents) {
  const SceneAutoencoder& ae = quickAutoencoder();
  std::vector<RgbImage> imgs;
  for (const auto& s : generateScenes(40, 3)) {
    imgs.push_back(s.image);
  }
  const Eigen::MatrixXd z = ae.encodeMany(imgs);
  EXPECT_LT(z.colwise().mean().cwiseAbs().maxCoeff(), 1e-6);
}

TEST(Autoencoder, UntrainedAndCheckpoint) {
  SceneAutoencoder fresh({}, 4);
  Rng rng(3);
  EXPECT_THROW((void)fresh.encode(randomImage(rng)), ModelStateError);
  const auto path = std::filesystem::temp_directory_path() / "pas_ae_test.ckpt";
  quickAutoencoder().save(path);
  const SceneAutoencoder back = SceneAutoencoder::load(path);
  const RgbImage img = randomImage(rng);
  EXPECT_LT((back.encode(img).values - quickAutoencoder().encode(img).values).cwiseAbs().maxCoeff(), 1e-4);
  std::filesystem::remove(path);
}

TEST(Scene, AvatarRegionMatchesSprite) {
  const auto scenes = generateScenes(5, 8);
  for (const auto& s : scenes) {
    int opaque = 0;
    for (int y = 0; y < kSceneSize; ++y) {
      for (int x = 0; x < kSceneSize; ++x) {
        if (s.avatar.at(x, y, 3) == 1.0) {
          ++opaque;
          for (int c = 0; c < 3; ++c) {
            EXPECT_EQ(s.image.pixels(y * kSceneSize + x, c), s.avatar.at(x, y, c));
          }
        }
      }
    }
    EXPECT_GT(opaque, 50);
    EXPECT_EQ(s.gray.channel(3), s.avatar.channel(3));
  }
}

TEST(Scene, CaptionCarriesScenePhrase) {
  const auto s = generateScenes(20, 2);
  for (const auto& scene : s) {
    bool found = false;
    for (const auto& p : scenePhrases()) {
      found = found || scene.caption.ends_with(p);
    }
    EXPECT_TRUE(found) << scene.caption;
  }
  EXPECT_THROW(
      [] {
        Rng rng(0);
        (void)sceneBackground("on the moon", rng);
      }(),
      InputError);
}

TEST(Scene, CorpusRoundTrip) {
  const auto scenes = generateScenes(3, 4);
  const auto dir = std::filesystem::temp_directory_path() / "pas_scene_corpus_test";
  std::filesystem::remove_all(dir);
  writeSceneCorpus(dir, scenes);
  EXPECT_TRUE(std::filesystem::exists(dir / "scene_000000.rgba"));
  EXPECT_TRUE(std::filesystem::exists(dir / "scene_000002.txt"));
  const auto back = readSceneCorpus(dir);
  ASSERT_EQ(back.size(), 3u);
  for (size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(back[i].caption, scenes[i].caption);
    EXPECT_EQ(back[i].avatar, quantized(scenes[i].avatar));
    EXPECT_LE((back[i].image.pixels - scenes[i].image.pixels).cwiseAbs().maxCoeff(), 0.5 / 255 + 1e-12);
  }
  std::filesystem::remove_all(dir);
  EXPECT_THROW(readSceneCorpus(dir), InputError);
}

TEST(Assemble, LayoutCounts) {
  const CompositorModel model({}, 1);
  const auto scene = generateScenes(1, 6)[0];
  const ConditioningBundle b = bundleFor(scene, 0.3);
  Rng rng(1);
  const DenoiserInput in = model.assemble(rng.normalMatrix(kGridCells, 4), b);
  EXPECT_EQ(in.channels.rows(), kGridCells);
  EXPECT_EQ(in.channels.cols(), 10);
  EXPECT_EQ(in.context.rows(), kMaxTokens + 2);
  EXPECT_EQ(in.context.cols(), kTextWidth);
  EXPECT_EQ(in.context.topRows(kMaxTokens), b.text.tokens);
  EXPECT_EQ(Eigen::VectorXd(in.context.row(kMaxTokens).transpose()), b.text.pooled);
  EXPECT_EQ(in.channels.middleCols(4, 4), b.avatar.values);
  EXPECT_EQ(Eigen::VectorXd(in.channels.col(8)), b.alpha);
  EXPECT_EQ(Eigen::VectorXd(in.channels.col(9)), b.gray);
}

TEST(Assemble, OpaqueAvatarGivesUnitAlpha) {
  const Raster opaque = constantRaster(0.3, 0.3, 0.3, 1.0);
  const ConditioningBundle b =
      makeBundle(quickAutoencoder(), opaque, opaque, 0.6, TextEncoder::standard().encode("a person waves"));
  EXPECT_EQ(b.alpha, Eigen::VectorXd::Ones(kGridCells));
}

TEST(Assemble, InjectiveInNoisyLatentAndRejectsMismatch) {
  const CompositorModel model({}, 1);
  const ConditioningBundle b = bundleFor(generateScenes(1, 7)[0], 0.0);
  Rng rng(2);
  const Eigen::MatrixXd z1 = rng.normalMatrix(kGridCells, 4);
  Eigen::MatrixXd z2 = z1;
  z2(17, 2) += 1e-9;
  EXPECT_NE(model.assemble(z1, b).channels, model.assemble(z2, b).channels);
  EXPECT_THROW((void)model.assemble(rng.normalMatrix(64, 4), b), InputError);
  EXPECT_THROW((void)model.assemble(rng.normalMatrix(kGridCells, 3), b), InputError);
}

TEST(Assemble, AblationZeroesConditioning) {
  CompositorConfig cfg;
  cfg.conditioned = false;
  const CompositorModel model(cfg, 1);
  const ConditioningBundle b = bundleFor(generateScenes(1, 7)[0], 0.0);
  Rng rng(2);
  const Eigen::MatrixXd stack = model.channelStack(rng.normalMatrix(kGridCells, 4), b);
  EXPECT_EQ(stack.rightCols(6), Eigen::MatrixXd::Zero(kGridCells, 6));
}

TEST(CompositorLoss, ZeroWhenPredictionEqualsNoise) {
  const CompositorModel model(tinyConfig(), 2);
  const auto scenes = generateScenes(3, 5);
  std::vector<LatentGrid> latents;
  std::vector<TextEmbedding> texts;
  for (const auto& s : scenes) {
    latents.push_back(quickAutoencoder().encode(s.image));
    texts.push_back(TextEncoder::standard().encode(s.caption));
  }
  Rng rng(3);
  const std::vector<int> idx{0, 1, 2};
  CompositorBatch batch = model.prepareBatch(quickAutoencoder(), scenes, latents, texts, idx, rng);
  nn::Tape tape(false);
  const Eigen::MatrixXd pred = model.predict(tape, batch.channels, batch.text, batch.w, batch.timesteps).value();
  const double expected = (pred - batch.noise).squaredNorm() / static_cast<double>(pred.size());
  EXPECT_NEAR(model.loss(tape, batch).value()(0, 0), expected, 1e-12);
  batch.noise = pred;
  EXPECT_EQ(model.loss(tape, batch).value()(0, 0), 0.0);
  batch.timesteps.clear();
  EXPECT_THROW(model.loss(tape, batch), InputError);
}

TEST(CompositorLoss, InitialLossNearOne) {
  const CompositorModel model({}, 3);
  const auto scenes = generateScenes(16, 12);
  std::vector<LatentGrid> latents;
  std::vector<TextEmbedding> texts;
  for (const auto& s : scenes) {
    latents.push_back(quickAutoencoder().encode(s.image));
    texts.push_back(TextEncoder::standard().encode(s.caption));
  }
  Rng rng(4);
  std::vector<int> idx(16);
  std::iota(idx.begin(), idx.end(), 0);
  const CompositorBatch batch = model.prepareBatch(quickAutoencoder(), scenes, latents, texts, idx, rng);
  nn::Tape tape(false);
  EXPECT_NEAR(model.loss(tape, batch).value()(0, 0), 1.0, 0.1);
}

TEST(CompositorLoss, GradientMatchesFiniteDifferences) {
  CompositorModel model(tinyConfig(), 4);
  Rng rng(5);
  // Random instance: the near-zero output initialization would leave every gradient tiny.
  auto& outWeight = model.params().get("compositor.out.weight").value;
  outWeight = rng.normalMatrix(outWeight.rows(), outWeight.cols()) * 0.5;
  CompositorBatch batch;
  batch.timesteps = {3, 17};
  batch.w = {0.25, 0.9};
  batch.channels = rng.normalMatrix(2 * kGridCells, model.inputChannels());
  batch.text = rng.normalMatrix(2 * (kMaxTokens + 1), kTextWidth) * 0.2;
  batch.noise = rng.normalMatrix(2 * kGridCells, 4);
  const auto r = nn::gradCheckDetailed([&](nn::Tape& t) { return model.loss(t, batch); }, model.params(),
                                       {.eps = 1e-4, .maxEntriesPerParameter = 12, .seed = 6});
  EXPECT_LT(r.maxRelativeError, 1e-3) << r.worstParameter;
}

TEST(CompositorSample, UntrainedIsModelStateError) {
  const CompositorModel model(tinyConfig(), 1);
  Rng rng(1);
  EXPECT_THROW((void)model.generate(quickAutoencoder(), bundleFor(generateScenes(1, 2)[0], 0.0), 5, rng),
               ModelStateError);
}

TEST(CompositorSample, DeterministicAndClamped) {
  CompositorModel model(tinyConfig(), 1);
  model.markTrained();
  const ConditioningBundle b = bundleFor(generateScenes(1, 2)[0], 0.0);
  Rng r1(5);
  Rng r2(5);
  const RgbImage a = model.generate(quickAutoencoder(), b, 5, r1);
  const RgbImage c = model.generate(quickAutoencoder(), b, 5, r2);
  EXPECT_EQ(a, c);
  EXPECT_GE(a.pixels.minCoeff(), 0.0);
  EXPECT_LE(a.pixels.maxCoeff(), 1.0);
}

TEST(CompositorCheckpoint, RoundTrip) {
  CompositorModel model(tinyConfig(), 9);
  model.markTrained();
  const auto path = std::filesystem::temp_directory_path() / "pas_compositor_test.ckpt";
  model.save(path);
  const CompositorModel back = CompositorModel::load(path);
  EXPECT_EQ(back.config().base, 4);
  EXPECT_EQ(back.config().timesteps, 20);
  EXPECT_TRUE(back.config().conditioned);
  std::filesystem::remove(path);
}

TEST(PasteBack, ConvexBlendCases) {
  Rng rng(7);
  const RgbImage gen = randomImage(rng);
  const Raster full = constantRaster(0.1, 0.6, 0.9, 1.0);
  EXPECT_EQ(pasteBack(gen, full).pixels, RgbImage::fromRaster(full).pixels);
  const Raster none = constantRaster(0.1, 0.6, 0.9, 0.0);
  EXPECT_EQ(pasteBack(gen, none), gen);
  RgbImage black;
  const Raster half = constantRaster(1.0, 1.0, 1.0, 0.5);
  EXPECT_EQ(pasteBack(black, half).pixels, Eigen::MatrixXd::Constant(kSceneSize * kSceneSize, 3, 0.5));
  EXPECT_THROW(pasteBack(gen, Raster(8, 8)), InputError);
}

TEST(PasteBack, OpaquePixelsAreBitwiseFaithful) {
  Rng rng(8);
  for (int trial = 0; trial < 100; ++trial) {
    const RgbImage gen = randomImage(rng);
    const Raster avatar = randomRaster(rng, true);
    const RgbImage out = pasteBack(gen, avatar);
    for (int y = 0; y < kSceneSize; ++y) {
      for (int x = 0; x < kSceneSize; ++x) {
        if (avatar.at(x, y, 3) == 1.0) {
          for (int c = 0; c < 3; ++c) {
            ASSERT_EQ(out.pixels(y * kSceneSize + x, c), avatar.at(x, y, c));
          }
        }
      }
    }
    EXPECT_EQ(avatarRegionError(out, avatar), 0.0);
  }
}
