#include "pas/app/pipeline.hpp"

#include "pas/core/errors.hpp"
#include "pas/core/random.hpp"
#include "pas/data/archetypes.hpp"
#include "pas/scoring/archetype_oracle.hpp"
#include "pas/scoring/fpd.hpp"

#include <fstream>
#include <functional>
#include <iomanip>
#include <ostream>

namespace pas {

namespace {

/// Writes "step\tloss" lines and periodic checkpoints for one training stage.
class StageMonitor {
 public:
  StageMonitor(const Config& config, const Artifacts& artifacts, std::string stage,
               std::function<void(const std::filesystem::path&)> checkpoint)
      : artifacts_(artifacts),
        stage_(std::move(stage)),
        logEvery_(config.getInt("train.log_every")),
        checkpointEvery_(config.getInt("train.checkpoint_every")),
        checkpoint_(std::move(checkpoint)),
        log_(artifacts.log(stage_)) {
    if (!log_) {
      throwInput("cannot write training log " + artifacts.log(stage_).string());
    }
    log_ << std::setprecision(8);
  }

  /// Callback for a module trainer configured with logEvery = 1.
  std::function<void(int, double)> callback() {
    return [this](int step, double loss) {
      if (logEvery_ > 0 && step % logEvery_ == 0) {
        log_ << step << '\t' << loss << '\n';
        log_.flush();
      }
      if (checkpoint_ && checkpointEvery_ > 0 && step % checkpointEvery_ == 0) {
        checkpoint_(artifacts_.intermediate(stage_, step));
      }
    };
  }

 private:
  const Artifacts& artifacts_;
  std::string stage_;
  int logEvery_;
  int checkpointEvery_;
  std::function<void(const std::filesystem::path&)> checkpoint_;
  std::ofstream log_;
};

void requirePositive(const Config& config, const std::string& key) {
  if (config.getInt(key) <= 0) {
    throwConfig("config key " + key + " must be positive");
  }
}

std::vector<Pose> posesOf(const std::vector<DatasetRecord>& records) {
  std::vector<Pose> out;
  out.reserve(records.size());
  for (const auto& r : records) {
    out.push_back(r.pose);
  }
  return out;
}

std::string trimSpaces(const std::string& s) {
  const auto b = s.find_first_not_of(' ');
  if (b == std::string::npos) {
    return "";
  }
  return s.substr(b, s.find_last_not_of(' ') - b + 1);
}

} // namespace

PosePriorConfig priorConfig(const Config& config) {
  PosePriorConfig c;
  c.hidden = config.getInt("prior.hidden");
  c.betaKl = config.getDouble("prior.beta_kl");
  c.lambdaRot = config.getDouble("prior.lambda_rot");
  if (c.hidden <= 0 || c.betaKl < 0.0 || c.lambdaRot < 0.0) {
    throwConfig("prior: hidden must be positive and loss weights non-negative");
  }
  return c;
}

PoseDiffusionConfig poseDiffusionConfig(const Config& config) {
  PoseDiffusionConfig c;
  c.mode = parsePoseMode(config.get("posediff.mode"));
  c.layers = config.getInt("posediff.layers");
  c.width = config.getInt("posediff.width");
  c.heads = config.getInt("posediff.heads");
  c.mlpRatio = config.getInt("posediff.mlp_ratio");
  c.timesteps = config.getInt("posediff.timesteps");
  c.schedule = parseScheduleKind(config.get("posediff.schedule"));
  c.dropProbability = config.getDouble("posediff.drop_prob");
  return c;
}

AlignerConfig alignerConfig(const Config& config) {
  AlignerConfig c;
  c.hidden = config.getInt("aligner.hidden");
  c.temperature = config.getDouble("aligner.temperature");
  if (c.hidden <= 0 || c.temperature <= 0.0) {
    throwConfig("aligner: hidden and temperature must be positive");
  }
  return c;
}

AutoencoderConfig autoencoderConfig(const Config& config) {
  AutoencoderConfig c;
  c.channels = config.getInt("compositor.channels");
  c.hidden = config.getInt("compositor.ae_hidden");
  if (c.channels <= 0 || c.hidden <= 0) {
    throwConfig("autoencoder: channels and hidden width must be positive");
  }
  return c;
}

CompositorConfig compositorConfig(const Config& config) {
  CompositorConfig c;
  c.latentChannels = config.getInt("compositor.channels");
  c.base = config.getInt("compositor.base");
  c.bottleneck = config.getInt("compositor.bottleneck");
  c.heads = config.getInt("compositor.heads");
  c.timesteps = config.getInt("compositor.timesteps");
  c.conditioned = config.getBool("compositor.conditioned");
  return c;
}

GuidanceConfig guidanceConfig(const Config& config) {
  GuidanceConfig g;
  g.scale = config.getDouble("sample.guidance");
  g.steps = config.getInt("sample.steps");
  if (g.steps < 0) {
    throwConfig("sample.steps must be non-negative");
  }
  return g;
}

Camera cameraConfig(const Config& config) {
  Camera cam;
  cam.width = config.getInt("render.width");
  cam.height = config.getInt("render.height");
  cam.scale = config.getDouble("render.scale");
  if (cam.width <= 0 || cam.height <= 0 || cam.scale <= 0.0) {
    throwConfig("render: width, height and scale must be positive");
  }
  return cam;
}

std::array<double, 3> splitFractions(const Config& config) {
  return {config.getDouble("data.train_fraction"), config.getDouble("data.validation_fraction"),
          config.getDouble("data.test_fraction")};
}

void applyRetargetConfig(const Config& config, RetargetProblem& problem) {
  problem.wPos = config.getDouble("retarget.w_pos");
  problem.wRot = config.getDouble("retarget.w_rot");
  problem.maxIterations = config.getInt("retarget.max_iterations");
  problem.tolerance = config.getDouble("retarget.tolerance");
}

PosePrior trainPriorStage(const Config& config, const std::vector<DatasetRecord>& records, uint64_t seed,
                          const Artifacts& artifacts) {
  requirePositive(config, "prior.steps");
  requirePositive(config, "prior.batch");
  if (records.empty()) {
    throwInput("train-prior: no training records");
  }
  artifacts.create();
  PosePrior prior(priorConfig(config), mixSeed(seed, 1));
  StageMonitor monitor(config, artifacts, "prior", [&prior](const std::filesystem::path& p) {
    prior.markTrained();
    prior.save(p);
  });
  PosePriorTrainConfig tc;
  tc.steps = config.getInt("prior.steps");
  tc.batchSize = config.getInt("prior.batch");
  tc.adam.learningRate = config.getDouble("prior.lr");
  tc.seed = mixSeed(seed, 2);
  tc.logEvery = 1;
  tc.log = monitor.callback();
  prior.train(bodyMatrix(posesOf(records)), tc);
  prior.save(artifacts.prior());
  return prior;
}

PoseDiffusion trainPoseDiffusionStage(const Config& config, const std::vector<DatasetRecord>& records,
                                      const PosePrior* prior, uint64_t seed, const Artifacts& artifacts) {
  requirePositive(config, "posediff.steps");
  requirePositive(config, "posediff.batch");
  if (records.empty()) {
    throwInput("train-posediff: no training records");
  }
  const PoseDiffusionConfig dc = poseDiffusionConfig(config);
  if (dc.mode == PoseMode::Latent && (prior == nullptr || !prior->trained())) {
    throw ModelStateError("train-posediff: latent mode needs a trained pose prior");
  }
  artifacts.create();
  std::vector<std::string> captions;
  captions.reserve(records.size());
  for (const auto& r : records) {
    captions.push_back(r.caption);
  }
  const PoseTrainingSet set =
      buildTrainingSet(posesOf(records), captions, dc.mode, dc.mode == PoseMode::Latent ? prior : nullptr,
                       TextEncoder::standard());
  PoseDiffusion model(dc, mixSeed(seed, 3));
  StageMonitor monitor(config, artifacts, "posediff", [&model](const std::filesystem::path& p) {
    model.markTrained();
    model.save(p);
  });
  PoseDiffusionTrainConfig tc;
  tc.steps = config.getInt("posediff.steps");
  tc.batchSize = config.getInt("posediff.batch");
  tc.adam.learningRate = config.getDouble("posediff.lr");
  tc.gradClip = config.getDouble("posediff.grad_clip");
  tc.seed = mixSeed(seed, 4);
  tc.logEvery = 1;
  tc.log = monitor.callback();
  model.train(set, tc);
  model.save(artifacts.poseDiffusion());
  return model;
}

AlignerModel trainAlignerStage(const Config& config, const std::vector<DatasetRecord>& records, uint64_t seed,
                               const Artifacts& artifacts) {
  requirePositive(config, "aligner.steps");
  requirePositive(config, "aligner.batch");
  artifacts.create();
  AlignerModel model(alignerConfig(config), mixSeed(seed, 5));
  StageMonitor monitor(config, artifacts, "aligner", [&model](const std::filesystem::path& p) {
    model.markTrained();
    model.save(p);
  });
  AlignerTrainConfig tc;
  tc.steps = config.getInt("aligner.steps");
  tc.batchSize = config.getInt("aligner.batch");
  tc.adam.learningRate = config.getDouble("aligner.lr");
  tc.seed = mixSeed(seed, 6);
  tc.logEvery = 1;
  tc.log = monitor.callback();
  model.train(records, tc);
  model.save(artifacts.aligner());
  return model;
}

CompositorStage trainCompositorStage(const Config& config, const std::vector<SyntheticScene>& scenes, uint64_t seed,
                                     const Artifacts& artifacts) {
  requirePositive(config, "compositor.ae_steps");
  requirePositive(config, "compositor.steps");
  requirePositive(config, "compositor.batch");
  if (scenes.empty()) {
    throwInput("train-compositor: no scenes");
  }
  artifacts.create();
  std::vector<RgbImage> images;
  images.reserve(scenes.size());
  for (const auto& s : scenes) {
    images.push_back(s.image);
  }

  // The autoencoder sets its latent statistics at the end of training, so it only logs.
  SceneAutoencoder autoencoder(autoencoderConfig(config), mixSeed(seed, 7));
  {
    StageMonitor monitor(config, artifacts, "autoencoder", nullptr);
    AutoencoderTrainConfig ac;
    ac.steps = config.getInt("compositor.ae_steps");
    ac.seed = mixSeed(seed, 8);
    ac.logEvery = 1;
    ac.log = monitor.callback();
    autoencoder.train(images, ac);
  }
  autoencoder.save(artifacts.autoencoder());

  CompositorModel model(compositorConfig(config), mixSeed(seed, 9));
  StageMonitor monitor(config, artifacts, "compositor", [&model](const std::filesystem::path& p) {
    model.markTrained();
    model.save(p);
  });
  CompositorTrainConfig tc;
  tc.steps = config.getInt("compositor.steps");
  tc.batchSize = config.getInt("compositor.batch");
  tc.adam.learningRate = config.getDouble("compositor.lr");
  tc.seed = mixSeed(seed, 10);
  tc.logEvery = 1;
  tc.log = monitor.callback();
  model.train(autoencoder, scenes, tc);
  model.save(artifacts.compositor());
  return {std::move(autoencoder), std::move(model)};
}

DecodeMode DecodeMode::parse(const std::string& name) {
  if (name == "latent") {
    return {PoseMode::Latent, false};
  }
  if (name == "6d") {
    return {PoseMode::SixD, false};
  }
  if (name == "6d+vposer") {
    return {PoseMode::SixD, true};
  }
  throwConfig("unknown sampling mode '" + name + "' (expected latent, 6d or 6d+vposer)");
}

std::string DecodeMode::name() const {
  if (mode == PoseMode::Latent) {
    return "latent";
  }
  return regularize ? "6d+vposer" : "6d";
}

PoseSamples samplePoses(const PoseDiffusion& diffusion, const PosePrior* prior, const AlignerModel* aligner,
                        const std::string& caption, int n, const GuidanceConfig& guidance, DecodeMode mode,
                        uint64_t seed) {
  if (n <= 0) {
    throwConfig("sample: n must be positive");
  }
  if (diffusion.config().mode != mode.mode) {
    throwConfig("sample: mode " + mode.name() + " does not match the " + poseModeName(diffusion.config().mode) +
                " diffusion checkpoint");
  }
  if ((mode.mode == PoseMode::Latent || mode.regularize) && prior == nullptr) {
    throw ModelStateError("sample: mode " + mode.name() + " needs a pose prior");
  }
  const TextEmbedding text = TextEncoder::standard().encode(caption);
  Rng rng(seed);
  PoseSamples out;
  for (const auto& s : diffusion.sample(text, guidance, n, rng)) {
    out.poses.push_back(decodeToPose(s, prior, mode.regularize));
  }
  if (aligner != nullptr) {
    const RerankResult r = rerank(*aligner, text, out.poses);
    out.scores = r.scores;
    out.best = r.best;
  }
  return out;
}

Eigen::MatrixXd generatedLatents(const std::vector<PoseState>& states, const PosePrior& prior) {
  if (states.empty()) {
    throwInput("generatedLatents: no states");
  }
  if (states.front().mode == PoseMode::Latent) {
    Eigen::MatrixXd out(static_cast<Eigen::Index>(states.size()), states.front().pose.size());
    for (size_t i = 0; i < states.size(); ++i) {
      out.row(static_cast<Eigen::Index>(i)) = states[i].pose.transpose();
    }
    return out;
  }
  std::vector<Pose> poses;
  poses.reserve(states.size());
  for (const auto& s : states) {
    poses.push_back(decodeToPose(s, nullptr, false));
  }
  return prior.encodeMeans(bodyMatrix(poses));
}

EvalReport evaluate(const Config& config, const PoseDiffusion& diffusion, const PosePrior& prior,
                    const AlignerModel* aligner, const std::vector<DatasetRecord>& test, uint64_t seed) {
  if (test.size() < 2) {
    throwInput("eval: the test set needs at least 2 records");
  }
  requirePositive(config, "eval.samples_per_archetype");
  requirePositive(config, "eval.fpd_samples");
  const GuidanceConfig guidance = guidanceConfig(config);
  const TextEncoder& encoder = TextEncoder::standard();
  EvalReport report;

  // FPD: one guided sample per test caption, batched over identical captions.
  const size_t count = std::min(test.size(), static_cast<size_t>(config.getInt("eval.fpd_samples")));
  std::map<std::string, int> perCaption;
  for (size_t i = 0; i < count; ++i) {
    ++perCaption[test[i].caption];
  }
  Rng fpdRng = Rng::derive(seed, 1);
  std::vector<PoseState> generated;
  for (const auto& [caption, n] : perCaption) {
    auto states = diffusion.sample(encoder.encode(caption), guidance, n, fpdRng);
    generated.insert(generated.end(), states.begin(), states.end());
  }
  std::vector<DatasetRecord> held(test.begin(), test.begin() + static_cast<std::ptrdiff_t>(count));
  const Eigen::MatrixXd heldLatents = prior.encodeMeans(bodyMatrix(posesOf(held)));
  report.fpd = fpd(fitStats(generatedLatents(generated, prior)), fitStats(heldLatents));
  report.fpdSamples = static_cast<int>(count);

  if (aligner != nullptr) {
    report.retrievalAccuracy = archetypeRetrievalAccuracy(*aligner, test);
  }

  const ArchetypeOracle oracle;
  const auto captions = referenceCaptions();
  const int perArchetype = config.getInt("eval.samples_per_archetype");
  const PosePrior* decodePrior = diffusion.config().mode == PoseMode::Latent ? &prior : nullptr;
  Rng consistencyRng = Rng::derive(seed, 2);
  double total = 0.0;
  for (size_t a = 0; a < captions.size(); ++a) {
    const std::string& name = defaultArchetypes()[a].name;
    int hits = 0;
    for (const auto& s : diffusion.sample(encoder.encode(captions[a]), guidance, perArchetype, consistencyRng)) {
      hits += oracle.classify(decodeToPose(s, decodePrior, false)) == name ? 1 : 0;
    }
    report.consistency[name] = static_cast<double>(hits) / perArchetype;
    total += report.consistency[name];
  }
  report.meanConsistency = total / static_cast<double>(captions.size());
  return report;
}

void writeEvalReport(std::ostream& out, const EvalReport& report) {
  out << std::setprecision(6);
  out << "fpd\t" << report.fpd << '\n';
  out << "fpd_samples\t" << report.fpdSamples << '\n';
  if (report.retrievalAccuracy) {
    out << "retrieval_accuracy\t" << *report.retrievalAccuracy << '\n';
  } else {
    out << "retrieval_accuracy\tn/a\n";
  }
  for (const auto& [name, value] : report.consistency) {
    out << "consistency." << name << '\t' << value << '\n';
  }
  out << "consistency.mean\t" << report.meanConsistency << '\n';
}

std::pair<std::string, std::string> splitSceneCaption(const std::string& caption) {
  const std::string text = trimSpaces(caption);
  for (const auto& phrase : scenePhrases()) {
    if (text.size() > phrase.size() && text.compare(text.size() - phrase.size(), phrase.size(), phrase) == 0 &&
        text[text.size() - phrase.size() - 1] == ' ') {
      return {trimSpaces(text.substr(0, text.size() - phrase.size())), phrase};
    }
  }
  return {text, ""};
}

RgbImage composeScene(const Config& config, const Artifacts& artifacts, const Raster& avatar, const Raster& gray,
                      const std::string& caption, uint64_t seed, RgbImage* generated) {
  Artifacts::require(artifacts.autoencoder(), "compositor");
  Artifacts::require(artifacts.compositor(), "compositor");
  const SceneAutoencoder autoencoder = SceneAutoencoder::load(artifacts.autoencoder());
  const CompositorModel model = CompositorModel::load(artifacts.compositor());
  const ConditioningBundle bundle =
      makeBundle(autoencoder, avatar, gray, 0.0, TextEncoder::standard().encode(caption));
  Rng rng(seed);
  const RgbImage image = model.generate(autoencoder, bundle, config.getInt("compositor.sample_steps"), rng);
  if (generated != nullptr) {
    *generated = image;
  }
  return pasteBack(image, avatar);
}

PasResult runPas(const Config& config, const Artifacts& artifacts, const std::string& caption,
                 const AvatarStyle& style, const Skeleton& avatarSkeleton, uint64_t seed) {
  Artifacts::require(artifacts.poseDiffusion(), "posediff");
  const PoseDiffusion diffusion = PoseDiffusion::load(artifacts.poseDiffusion());
  std::optional<PosePrior> prior;
  if (std::filesystem::exists(artifacts.prior()) || diffusion.config().mode == PoseMode::Latent) {
    Artifacts::require(artifacts.prior(), "prior");
    prior = PosePrior::load(artifacts.prior());
  }
  std::optional<AlignerModel> aligner;
  if (config.getBool("sample.rerank")) {
    Artifacts::require(artifacts.aligner(), "aligner");
    aligner = AlignerModel::load(artifacts.aligner());
  }
  const Camera camera = cameraConfig(config);
  style.validate(avatarSkeleton.jointCount());

  // Pose stage: the scene phrase only conditions the compositor.
  const std::string poseCaption = splitSceneCaption(caption).first;
  const DecodeMode mode{diffusion.config().mode, diffusion.config().mode == PoseMode::SixD && prior.has_value()};
  const PoseSamples samples =
      samplePoses(diffusion, prior ? &*prior : nullptr, aligner ? &*aligner : nullptr, poseCaption,
                  config.getInt("sample.n"), guidanceConfig(config), mode, mixSeed(seed, 1));

  PasResult result;
  result.sourcePose = samples.poses[samples.best];
  result.scores = samples.scores;

  RetargetProblem problem = makeRetargetProblem(Skeleton::canonical(), result.sourcePose, avatarSkeleton);
  applyRetargetConfig(config, problem);
  result.retarget = solveRetarget(problem, result.sourcePose);

  const JointStates states = forwardKinematics(avatarSkeleton, result.retarget.pose);
  result.avatar = renderAvatar(avatarSkeleton, states, style, camera);
  result.gray = renderGrayBody(avatarSkeleton, states, camera, style);
  result.final = composeScene(config, artifacts, result.avatar, result.gray, caption, mixSeed(seed, 2),
                              &result.generated);
  return result;
}

} // namespace pas
