#include "pas/core/random.hpp"
#include "pas/diffusion/pose_diffusion.hpp"
#include "pas/nn/grad_check.hpp"
#include "pas/poseprior/pose_prior.hpp"

#include <gtest/gtest.h>

#include <chrono>
#include <cstdio>
#include <filesystem>

using namespace pas;

namespace {

PoseDiffusionConfig tinyConfig() {
  PoseDiffusionConfig c;
  c.layers = 1;
  c.width = 8;
  c.heads = 2;
  c.mlpRatio = 2;
  c.timesteps = 50;
  c.poseDim = 3;
  c.rootDim = 2;
  return c;
}

PoseTrainingSet randomSet(int n, int poseDim, int rootDim, Rng& rng) {
  const auto& enc = TextEncoder::standard();
  const char* captions[] = {"a person waves", "someone sits on a chair", "a person kicks a ball"};
  PoseTrainingSet set;
  for (int i = 0; i < n; ++i) {
    set.append(rng.normalMatrix(poseDim, 1), rng.normalMatrix(rootDim, 1), enc.encode(captions[i % 3]));
  }
  return set;
}

std::vector<int> allRows(int n) {
  std::vector<int> rows(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    rows[static_cast<size_t>(i)] = i;
  }
  return rows;
}

Eigen::MatrixXd stack(const std::vector<PoseState>& states) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(states.size()), states[0].pose.size() + states[0].root.size());
  for (size_t i = 0; i < states.size(); ++i) {
    m.row(static_cast<Eigen::Index>(i)) << states[i].pose.transpose(), states[i].root.transpose();
  }
  return m;
}

} // namespace

TEST(Schedule, CosineEndpoints) {
  const auto s = makeSchedule(1000, ScheduleKind::Cosine);
  EXPECT_EQ(s.steps(), 1000);
  EXPECT_GT(s.alphaBar(1), 0.999);
  EXPECT_LT(s.alphaBar(1000), 1e-4);
  EXPECT_LT(std::sqrt(s.alphaBar(1000)), 0.011);
  EXPECT_LE(s.beta(1000), 0.999);
}

TEST(Schedule, LinearEndpoints) {
  const auto s = makeSchedule(1000, ScheduleKind::Linear);
  EXPECT_DOUBLE_EQ(s.beta(1), 1e-4);
  EXPECT_DOUBLE_EQ(s.beta(1000), 0.02);
  EXPECT_GT(s.alphaBar(1), 0.999);
  EXPECT_LT(s.alphaBar(1000), 1e-4);
}

TEST(Schedule, StrictlyDecreasing) {
  for (auto kind : {ScheduleKind::Cosine, ScheduleKind::Linear}) {
    const auto s = makeSchedule(1000, kind);
    EXPECT_EQ(s.alphaBar(0), 1.0);
    for (int t = 1; t <= s.steps(); ++t) {
      EXPECT_LT(s.alphaBar(t), s.alphaBar(t - 1)) << scheduleKindName(kind) << " t=" << t;
    }
  }
}

TEST(Schedule, Errors) {
  EXPECT_THROW(parseScheduleKind("quadratic"), ConfigError);
  EXPECT_EQ(parseScheduleKind("linear"), ScheduleKind::Linear);
  EXPECT_THROW(makeSchedule(1), ConfigError);
}

TEST(Schedule, Respacing) {
  const auto s = makeSchedule(1000);
  const auto r = s.respaced(50);
  ASSERT_EQ(r.size(), 50U);
  EXPECT_EQ(r.front(), 20);
  EXPECT_EQ(r.back(), 1000);
  const auto full = s.respaced(1000);
  for (int t = 1; t <= 1000; ++t) {
    EXPECT_EQ(full[static_cast<size_t>(t - 1)], t);
  }
  EXPECT_THROW((void)s.respaced(0), ConfigError);
}

TEST(Schedule, PosteriorFinalStepIsDeterministic) {
  const auto s = makeSchedule(100);
  const auto p = posteriorStep(s.alphaBar(1), 1.0);
  EXPECT_EQ(p.variance, 0.0);
  EXPECT_NEAR(p.c0, 1.0, 1e-12);
  EXPECT_EQ(p.ct, 0.0);
}

TEST(QSample, ZeroNoiseScalesSignal) {
  const auto s = makeSchedule(1000);
  Eigen::MatrixXd x0(1, 3);
  x0 << 1, -2, 3;
  const auto xt = qSample(s, x0, 400, Eigen::MatrixXd::Zero(1, 3));
  EXPECT_LT((xt - std::sqrt(s.alphaBar(400)) * x0).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_THROW(qSample(s, x0, 400, Eigen::MatrixXd::Zero(1, 2)), InputError);
  EXPECT_THROW(qSample(s, x0, 0, Eigen::MatrixXd::Zero(1, 3)), InputError);
}

TEST(QSample, VarianceMatchesSchedule) {
  const auto s = makeSchedule(1000);
  Rng rng(12);
  const int n = 100000;
  for (int t : {1, 500, 1000}) {
    const Eigen::MatrixXd xt = qSample(s, Eigen::MatrixXd::Zero(n, 2), t, rng.normalMatrix(n, 2));
    for (int c = 0; c < 2; ++c) {
      const double mean = xt.col(c).mean();
      const double var = (xt.col(c).array() - mean).square().sum() / (n - 1);
      EXPECT_NEAR(var / (1.0 - s.alphaBar(t)), 1.0, 0.03) << "t=" << t;
    }
  }
}

TEST(QSample, MarginalMatchesMarkovChain) {
  const auto s = makeSchedule(200);
  Rng rng(13);
  const int n = 100000;
  const int t = 100;
  Eigen::VectorXd x = Eigen::VectorXd::Constant(n, 1.5);
  for (int k = 1; k <= t; ++k) {
    x = std::sqrt(1.0 - s.beta(k)) * x + std::sqrt(s.beta(k)) * rng.normalMatrix(n, 1);
  }
  const double mean = x.mean();
  const double var = (x.array() - mean).square().sum() / (n - 1);
  EXPECT_NEAR(mean / (1.5 * std::sqrt(s.alphaBar(t))), 1.0, 0.03);
  EXPECT_NEAR(var / (1.0 - s.alphaBar(t)), 1.0, 0.03);
}

TEST(PoseDiffusionModel, OutputShape) {
  PoseDiffusion model(tinyConfig(), 1);
  Rng rng(2);
  const auto data = randomSet(4, 3, 2, rng);
  nn::Tape tape(false);
  const auto batch = model.prepareBatch(data, allRows(4), rng);
  const auto out = model.predict(tape, batch.noisyPose, batch.noisyRoot, batch.timesteps, batch.tokens, batch.pooled);
  EXPECT_EQ(out.rows(), 4);
  EXPECT_EQ(out.cols(), 5);
  EXPECT_THROW(PoseDiffusion({.width = 10, .heads = 4}), ConfigError);
}

TEST(PoseDiffusionModel, ItemsAreIndependentInABatch) {
  PoseDiffusion model(tinyConfig(), 1);
  Rng rng(2);
  const auto data = randomSet(3, 3, 2, rng);
  const auto batch = model.prepareBatch(data, allRows(3), rng);
  nn::Tape t1(false);
  const Eigen::MatrixXd all =
      model.predict(t1, batch.noisyPose, batch.noisyRoot, batch.timesteps, batch.tokens, batch.pooled).value();
  nn::Tape t2(false);
  const Eigen::MatrixXd one = model
                                  .predict(
                                      t2,
                                      batch.noisyPose.row(1),
                                      batch.noisyRoot.row(1),
                                      {batch.timesteps[1]},
                                      batch.tokens.middleRows(kMaxTokens, kMaxTokens),
                                      batch.pooled.row(1))
                                  .value();
  EXPECT_LT((all.row(1) - one).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(PoseDiffusionModel, ForcedExactPredictionGivesZeroLoss) {
  PoseDiffusion model(tinyConfig(), 1);
  Rng rng(2);
  PoseTrainingSet data;
  Eigen::VectorXd p(3), r(2);
  p << 0.5, -1, 2;
  r << 0.25, 0;
  data.append(p, r, TextEncoder::standard().encode("a person waves"));
  model.params().get("posediff.pose_out.weight").value.setZero();
  model.params().get("posediff.root_out.weight").value.setZero();
  model.params().get("posediff.pose_out.bias").value = p.transpose();
  model.params().get("posediff.root_out.bias").value = r.transpose();
  nn::Tape tape(false);
  EXPECT_EQ(model.loss(tape, model.prepareBatch(data, {0, 0}, rng)).value()(0, 0), 0.0);
}

TEST(PoseDiffusionModel, GradCheck) {
  PoseDiffusion model(tinyConfig(), 3);
  Rng rng(4);
  const auto data = randomSet(3, 3, 2, rng);
  const auto batch = model.prepareBatch(data, allRows(3), rng);
  const auto result = nn::gradCheckDetailed(
      [&](nn::Tape& t) { return model.loss(t, batch); },
      model.params(),
      {.eps = 1e-4, .maxEntriesPerParameter = 12, .seed = 5});
  EXPECT_LT(result.maxRelativeError, 1e-3) << result.worstParameter;
}

TEST(PoseDiffusionModel, FullDropoutUsesNullText) {
  auto cfg = tinyConfig();
  cfg.dropProbability = 1.0;
  PoseDiffusion model(cfg, 1);
  Rng rng(2);
  const auto data = randomSet(8, 3, 2, rng);
  const auto batch = model.prepareBatch(data, allRows(8), rng);
  EXPECT_EQ(batch.tokens.cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(batch.pooled.cwiseAbs().maxCoeff(), 0.0);
  for (bool d : batch.dropped) {
    EXPECT_TRUE(d);
  }
  cfg.dropProbability = 0.0;
  PoseDiffusion keep(cfg, 1);
  EXPECT_GT(keep.prepareBatch(data, allRows(8), rng).pooled.cwiseAbs().maxCoeff(), 0.0);
}

TEST(PoseDiffusionModel, EmptyBatchRejected) {
  PoseDiffusion model(tinyConfig(), 1);
  Rng rng(2);
  const auto data = randomSet(2, 3, 2, rng);
  EXPECT_THROW(model.prepareBatch(data, {}, rng), InputError);
}

TEST(PoseDiffusionSampling, UntrainedIsModelStateError) {
  PoseDiffusion model(tinyConfig(), 1);
  Rng rng(1);
  EXPECT_THROW(model.sample(TextEncoder::standard().encode("a person waves"), {}, 2, rng), ModelStateError);
}

TEST(PoseDiffusionSampling, GuidanceAlgebraIsBitwise) {
  PoseDiffusion model(tinyConfig(), 7);
  model.markTrained();
  const auto& enc = TextEncoder::standard();
  const auto waves = enc.encode("a person waves");
  const auto sits = enc.encode("someone sits on a chair");
  Rng a(5), b(5);
  const auto guided = stack(model.sample(waves, {.scale = 1.0}, 6, a));
  const auto conditional = stack(model.sampleConditional(waves, 0, 6, b));
  EXPECT_TRUE((guided.array() == conditional.array()).all());

  Rng c(6), d(6);
  const auto u1 = stack(model.sample(waves, {.scale = 0.0}, 6, c));
  const auto u2 = stack(model.sample(sits, {.scale = 0.0}, 6, d));
  EXPECT_TRUE((u1.array() == u2.array()).all());

  Rng e(5), f(5);
  EXPECT_TRUE((stack(model.sample(waves, {.scale = 3.0}, 6, e)).array() ==
               stack(model.sample(waves, {.scale = 3.0}, 6, f)).array())
                  .all());
  Rng g(5);
  const auto strong = stack(model.sample(waves, {.scale = 3.0}, 6, g));
  EXPECT_FALSE((strong.array() == guided.array()).all());

}

TEST(PoseDiffusionSampling, Checkpoint) {
  PoseDiffusion model(tinyConfig(), 7);
  EXPECT_THROW(model.save("/tmp/unused.ckpt"), ModelStateError);
  model.markTrained();
  const auto path = std::filesystem::temp_directory_path() / "pas_posediff_test.ckpt";
  model.save(path);
  const auto back = PoseDiffusion::load(path);
  std::filesystem::remove(path);
  EXPECT_EQ(back.config().layers, 1);
  EXPECT_EQ(back.config().resolvedPoseDim(), 3);
  EXPECT_EQ(back.config().resolvedRootDim(), 2);
  EXPECT_EQ(back.config().timesteps, 50);
  const auto text = TextEncoder::standard().encode("a person waves");
  Rng a(3), b(3);
  const auto x = stack(model.sample(text, {.scale = 2.0}, 4, a));
  const auto y = stack(back.sample(text, {.scale = 2.0}, 4, b));
  EXPECT_LT((x - y).cwiseAbs().maxCoeff(), 1e-3);
}

TEST(PoseDiffusionToy, TwoPointMassesFollowTheCaption) {
  const TextEncoder enc({"left", "right"});
  PoseDiffusionConfig cfg;
  cfg.layers = 1;
  cfg.width = 32;
  cfg.heads = 2;
  cfg.mlpRatio = 2;
  cfg.timesteps = 200;
  cfg.poseDim = 1;
  cfg.rootDim = 1;
  cfg.clampBound = 6.0;
  PoseDiffusion model(cfg, 11);
  PoseTrainingSet data;
  for (int i = 0; i < 64; ++i) {
    const bool left = i % 2 == 0;
    data.append(Eigen::VectorXd::Constant(1, left ? -2.0 : 2.0), Eigen::VectorXd::Zero(1), enc.encode(left ? "left" : "right"));
  }
  PoseDiffusionTrainConfig tc;
  tc.steps = 1500;
  tc.batchSize = 32;
  tc.seed = 3;
  const auto start = std::chrono::steady_clock::now();
  model.train(data, tc);
  Rng rng(4);
  const auto samples = model.sample(enc.encode("left"), {.scale = 3.0}, 200, rng);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  double mean = 0.0;
  for (const auto& s : samples) {
    mean += s.pose[0];
  }
  mean /= static_cast<double>(samples.size());
  std::printf("toy: %.1f s, left mean %.3f\n", secs, mean);
  EXPECT_LT(mean, -1.5);
  Rng rng2(4);
  double right = 0.0;
  for (const auto& s : model.sample(enc.encode("right"), {.scale = 3.0}, 200, rng2)) {
    right += s.pose[0];
  }
  EXPECT_GT(right / 200.0, 1.5);
}

TEST(DecodeToPose, Modes) {
  PosePrior prior({.hidden = 16}, 2);
  prior.markTrained();
  PoseState latent{PoseMode::Latent, Eigen::VectorXd::Zero(kLatentDim), Pose().rootRot6d()};
  latent.root << 0, 1, 0, -1, 0, 0;
  const Pose a = decodeToPose(latent, &prior, false);
  const Pose expected = Pose::fromRot6d(prior.decode(Eigen::VectorXd::Zero(kLatentDim)), latent.root);
  EXPECT_EQ(a, expected);
  EXPECT_LT((axisAngleToMatrix(a.root) - rotationZ(std::numbers::pi / 2)).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_THROW(decodeToPose(latent, nullptr, false), ModelStateError);

  Pose src;
  src.body[4] = AxisAngle(0.2, 0.1, -0.3);
  src.root = AxisAngle(0, 0.4, 0);
  PoseState six{PoseMode::SixD, src.bodyRot6d(), src.rootRot6d()};
  EXPECT_EQ(decodeToPose(six, nullptr, false), Pose::fromRot6d(src.bodyRot6d(), src.rootRot6d()));
  EXPECT_EQ(decodeToPose(six, &prior, true), prior.regularize(Pose::fromRot6d(src.bodyRot6d(), src.rootRot6d())));
  six.pose.segment<6>(0).setZero();
  EXPECT_THROW(decodeToPose(six, nullptr, false), DegenerateRotationError);
}
