// Command-line entry point: data generation, training stages, sampling, retargeting,
// rendering, compositing, evaluation and the end-to-end pipeline.

#include "pas/app/artifacts.hpp"
#include "pas/app/config.hpp"
#include "pas/app/pipeline.hpp"
#include "pas/compositor/scene.hpp"
#include "pas/core/errors.hpp"
#include "pas/core/random.hpp"
#include "pas/data/dataset.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

namespace {

using namespace pas;
namespace fs = std::filesystem;

struct Common {
  std::string config;
  uint64_t seed = 0;
};

Config loadConfig(const Common& common) {
  return common.config.empty() ? Config{} : Config::load(common.config);
}

std::vector<DatasetRecord> readCorpus(const std::string& path) {
  IngestReport report = ingestRecords(fs::path(path));
  for (const auto& d : report.diagnostics) {
    std::cerr << path << ": " << d << '\n';
  }
  if (report.records.empty()) {
    throwInput("no usable records in " + path);
  }
  return std::move(report.records);
}

Skeleton skeletonOrCanonical(const std::string& path) {
  return path.empty() ? Skeleton::canonical() : loadSkeleton(path);
}

std::array<double, 3> parseFractions(const std::string& text) {
  std::array<double, 3> f{};
  std::stringstream ss(text);
  std::string item;
  for (size_t i = 0; i < 3; ++i) {
    if (!std::getline(ss, item, ',')) {
      throwConfig("--fractions expects three comma-separated values");
    }
    try {
      f[i] = std::stod(item);
    } catch (const std::exception&) {
      throwConfig("--fractions: invalid value '" + item + "'");
    }
  }
  if (std::getline(ss, item, ',')) {
    throwConfig("--fractions expects three comma-separated values");
  }
  return f;
}

void writePoseFile(const fs::path& path, const std::vector<Pose>& poses, const std::string& caption) {
  std::vector<DatasetRecord> records;
  for (size_t i = 0; i < poses.size(); ++i) {
    records.push_back({static_cast<int64_t>(i), "sampled", caption, poses[i], RecordSource::Synthetic});
  }
  writeRecords(path, records);
}

std::ofstream openOutput(const fs::path& path) {
  std::ofstream out(path);
  if (!out) {
    throwInput("cannot write " + path.string());
  }
  out << std::setprecision(9);
  return out;
}

void addCommon(CLI::App* cmd, Common& common) {
  cmd->add_option("--config", common.config, "configuration file (defaults when absent)");
  cmd->add_option("--seed", common.seed, "seed for every random draw of this command");
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Text-to-pose, retargeting and avatar scene generation"};
  app.require_subcommand(1);
  Common common;

  // write-config
  std::string configOut;
  auto* writeConfig = app.add_subcommand("write-config", "write the default configuration");
  writeConfig->add_option("--out", configOut, "output file")->required();

  // gen-data
  int genN = 0;
  std::string genOut, genFractions;
  int genScenes = 0;
  auto* genData = app.add_subcommand("gen-data", "generate and split a synthetic pose corpus");
  addCommon(genData, common);
  auto* genNOpt = genData->add_option("--n", genN, "number of records (data.n)");
  genData->add_option("--out", genOut, "output directory for train/validation/test .pasv1 files")->required();
  genData->add_option("--fractions", genFractions, "train,validation,test fractions");
  genData->add_option("--scenes", genScenes, "also write this many compositor scenes to <out>/scenes");

  // training
  std::string trainData, trainOut = "artifacts", trainPrior;
  auto addTrain = [&](const std::string& name, const std::string& help, bool dataRequired) {
    auto* cmd = app.add_subcommand(name, help);
    addCommon(cmd, common);
    auto* data = cmd->add_option("--data", trainData, "training data");
    if (dataRequired) {
      data->required();
    }
    cmd->add_option("--out", trainOut, "artifacts directory");
    return cmd;
  };
  auto* trainPriorCmd = addTrain("train-prior", "train the pose prior", true);
  auto* trainPosediff = addTrain("train-posediff", "train the text-to-pose diffusion model", true);
  trainPosediff->add_option("--prior", trainPrior, "pose prior checkpoint (default <out>/prior.ckpt)");
  auto* trainAligner = addTrain("train-aligner", "train the text-pose aligner", true);
  auto* trainCompositor =
      addTrain("train-compositor", "train the scene autoencoder and compositor (--data: scene directory)", false);

  // sample-pose
  std::string caption, ckpt = "artifacts", mode, poseOut;
  int sampleN = 0;
  double guidance = 0.0;
  bool doRerank = false;
  auto* samplePose = app.add_subcommand("sample-pose", "sample poses for a caption");
  addCommon(samplePose, common);
  samplePose->add_option("--caption", caption, "text prompt")->required();
  auto* sampleNOpt = samplePose->add_option("--n", sampleN, "candidates (sample.n)");
  auto* guidanceOpt = samplePose->add_option("--guidance", guidance, "guidance scale (sample.guidance)");
  samplePose->add_option("--ckpt", ckpt, "artifacts directory");
  samplePose->add_option("--mode", mode, "latent, 6d or 6d+vposer (default: the checkpoint's mode)");
  samplePose->add_flag("--rerank", doRerank, "keep only the best candidate; scores go to <out>.scores");
  samplePose->add_option("--out", poseOut, "pose file")->required();

  // retarget
  std::string posePath, srcSkel, tgtSkel, retargetOut, reportOut;
  auto* retarget = app.add_subcommand("retarget", "retarget poses onto another skeleton");
  addCommon(retarget, common);
  retarget->add_option("--pose", posePath, "input pose file")->required();
  retarget->add_option("--src-skel", srcSkel, "source skeleton (default canonical)");
  retarget->add_option("--tgt-skel", tgtSkel, "target skeleton")->required();
  retarget->add_option("--out", retargetOut, "output pose file")->required();
  retarget->add_option("--report", reportOut, "convergence report (default <out>.report)");

  // render
  std::string renderSkel, stylePath, renderOut;
  bool renderGray = false;
  size_t renderIndex = 0;
  auto* render = app.add_subcommand("render", "render one pose as a PASRGBA1 sprite");
  addCommon(render, common);
  render->add_option("--pose", posePath, "pose file")->required();
  render->add_option("--index", renderIndex, "record index in the pose file");
  render->add_option("--skel", renderSkel, "skeleton (default canonical)");
  render->add_option("--style", stylePath, "avatar style file (default gray)");
  render->add_flag("--gray", renderGray, "render the gray body instead of the styled avatar");
  render->add_option("--out", renderOut, "output image")->required();

  // compose
  std::string avatarPath, grayPath, composeOut, artifactsDir = "artifacts", generatedOut;
  auto* compose = app.add_subcommand("compose", "generate a scene around an avatar render");
  addCommon(compose, common);
  compose->add_option("--avatar", avatarPath, "avatar render")->required();
  compose->add_option("--gray", grayPath, "gray body render")->required();
  compose->add_option("--caption", caption, "scene prompt")->required();
  compose->add_option("--artifacts", artifactsDir, "artifacts directory");
  compose->add_option("--generated", generatedOut, "also write the image before paste-back");
  compose->add_option("--out", composeOut, "output image")->required();

  // eval
  std::string testData, evalOut;
  auto* eval = app.add_subcommand("eval", "FPD, retrieval accuracy and per-archetype consistency");
  addCommon(eval, common);
  eval->add_option("--test-data", testData, "held-out pose file")->required();
  eval->add_option("--ckpt", ckpt, "artifacts directory");
  eval->add_option("--out", evalOut, "report file (default stdout)");

  // pas
  std::string pasOut, avatarSkel;
  auto* pasCmd = app.add_subcommand("pas", "caption to composed avatar scene");
  addCommon(pasCmd, common);
  pasCmd->add_option("--caption", caption, "text prompt")->required();
  pasCmd->add_option("--style", stylePath, "avatar style file (default: random style from --seed)");
  pasCmd->add_option("--avatar-skel", avatarSkel, "avatar skeleton (default canonical)");
  pasCmd->add_option("--artifacts", artifactsDir, "artifacts directory");
  pasCmd->add_option("--out", pasOut, "output image")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return static_cast<int>(ErrorKind::Usage);
  }

  try {
    if (writeConfig->parsed()) {
      Config{}.save(configOut);
    } else if (genData->parsed()) {
      const Config config = loadConfig(common);
      const int n = genNOpt->count() > 0 ? genN : config.getInt("data.n");
      if (n <= 0) {
        throwConfig("--n must be positive");
      }
      const auto fractions = genFractions.empty() ? splitFractions(config) : parseFractions(genFractions);
      const auto records = generateRecords(n, common.seed);
      const DatasetSplit split = splitRecords(records, fractions, mixSeed(common.seed, 1));
      fs::create_directories(genOut);
      writeRecords(fs::path(genOut) / "train.pasv1", split.train);
      writeRecords(fs::path(genOut) / "validation.pasv1", split.validation);
      writeRecords(fs::path(genOut) / "test.pasv1", split.test);
      if (genScenes > 0) {
        writeSceneCorpus(fs::path(genOut) / "scenes", generateScenes(genScenes, mixSeed(common.seed, 2)));
      }
    } else if (trainPriorCmd->parsed()) {
      trainPriorStage(loadConfig(common), readCorpus(trainData), common.seed, Artifacts{trainOut});
    } else if (trainPosediff->parsed()) {
      const Config config = loadConfig(common);
      const Artifacts artifacts{trainOut};
      std::optional<PosePrior> prior;
      if (poseDiffusionConfig(config).mode == PoseMode::Latent) {
        const fs::path priorPath = trainPrior.empty() ? artifacts.prior() : fs::path(trainPrior);
        Artifacts::require(priorPath, "prior");
        prior = PosePrior::load(priorPath);
      }
      trainPoseDiffusionStage(config, readCorpus(trainData), prior ? &*prior : nullptr, common.seed, artifacts);
    } else if (trainAligner->parsed()) {
      trainAlignerStage(loadConfig(common), readCorpus(trainData), common.seed, Artifacts{trainOut});
    } else if (trainCompositor->parsed()) {
      const Config config = loadConfig(common);
      const auto scenes = trainData.empty()
                              ? generateScenes(config.getInt("compositor.scenes"), mixSeed(common.seed, 11))
                              : readSceneCorpus(trainData);
      trainCompositorStage(config, scenes, common.seed, Artifacts{trainOut});
    } else if (samplePose->parsed()) {
      const Config config = loadConfig(common);
      const Artifacts artifacts{ckpt};
      Artifacts::require(artifacts.poseDiffusion(), "posediff");
      const PoseDiffusion diffusion = PoseDiffusion::load(artifacts.poseDiffusion());
      const DecodeMode decode =
          mode.empty() ? DecodeMode{diffusion.config().mode, false} : DecodeMode::parse(mode);
      std::optional<PosePrior> prior;
      if (decode.mode == PoseMode::Latent || decode.regularize) {
        Artifacts::require(artifacts.prior(), "prior");
        prior = PosePrior::load(artifacts.prior());
      }
      std::optional<AlignerModel> aligner;
      if (doRerank) {
        Artifacts::require(artifacts.aligner(), "aligner");
        aligner = AlignerModel::load(artifacts.aligner());
      }
      GuidanceConfig g = guidanceConfig(config);
      if (guidanceOpt->count() > 0) {
        g.scale = guidance;
      }
      const int n = sampleNOpt->count() > 0 ? sampleN : config.getInt("sample.n");
      const PoseSamples samples = samplePoses(diffusion, prior ? &*prior : nullptr, aligner ? &*aligner : nullptr,
                                              caption, n, g, decode, common.seed);
      if (doRerank) {
        writePoseFile(poseOut, {samples.poses[samples.best]}, caption);
        auto scores = openOutput(poseOut + ".scores");
        for (double s : samples.scores) {
          scores << s << '\n';
        }
      } else {
        writePoseFile(poseOut, samples.poses, caption);
      }
    } else if (retarget->parsed()) {
      const Config config = loadConfig(common);
      const Skeleton source = skeletonOrCanonical(srcSkel);
      const Skeleton target = loadSkeleton(tgtSkel);
      auto records = readCorpus(posePath);
      auto report = openOutput(reportOut.empty() ? retargetOut + ".report" : reportOut);
      for (auto& record : records) {
        RetargetProblem problem = makeRetargetProblem(source, record.pose, target);
        applyRetargetConfig(config, problem);
        const RetargetResult result = solveRetarget(problem, record.pose);
        report << "id\t" << record.id << '\n';
        writeRetargetReport(report, result);
        record.pose = result.pose;
      }
      writeRecords(fs::path(retargetOut), records);
    } else if (render->parsed()) {
      const Config config = loadConfig(common);
      const Skeleton skeleton = skeletonOrCanonical(renderSkel);
      const auto records = readCorpus(posePath);
      if (renderIndex >= records.size()) {
        throwInput("--index " + std::to_string(renderIndex) + " is past the " + std::to_string(records.size()) +
                   " records of " + posePath);
      }
      const AvatarStyle style = stylePath.empty() ? AvatarStyle{} : loadStyle(stylePath, skeleton);
      const JointStates states = forwardKinematics(skeleton, records[renderIndex].pose);
      const Camera camera = cameraConfig(config);
      writeRgba(fs::path(renderOut), renderGray ? renderGrayBody(skeleton, states, camera, style)
                                                : renderAvatar(skeleton, states, style, camera));
    } else if (compose->parsed()) {
      RgbImage generated;
      const RgbImage final = composeScene(loadConfig(common), Artifacts{artifactsDir}, readRgba(fs::path(avatarPath)),
                                          readRgba(fs::path(grayPath)), caption, common.seed, &generated);
      writeRgba(fs::path(composeOut), final.toRaster());
      if (!generatedOut.empty()) {
        writeRgba(fs::path(generatedOut), generated.toRaster());
      }
    } else if (eval->parsed()) {
      const Config config = loadConfig(common);
      const Artifacts artifacts{ckpt};
      Artifacts::require(artifacts.poseDiffusion(), "posediff");
      Artifacts::require(artifacts.prior(), "prior");
      const PoseDiffusion diffusion = PoseDiffusion::load(artifacts.poseDiffusion());
      const PosePrior prior = PosePrior::load(artifacts.prior());
      std::optional<AlignerModel> aligner;
      if (fs::exists(artifacts.aligner())) {
        aligner = AlignerModel::load(artifacts.aligner());
      }
      const EvalReport report =
          evaluate(config, diffusion, prior, aligner ? &*aligner : nullptr, readCorpus(testData), common.seed);
      if (evalOut.empty()) {
        writeEvalReport(std::cout, report);
      } else {
        auto out = openOutput(evalOut);
        writeEvalReport(out, report);
      }
    } else if (pasCmd->parsed()) {
      const Skeleton skeleton = skeletonOrCanonical(avatarSkel);
      const AvatarStyle style =
          stylePath.empty() ? AvatarStyle::random(mixSeed(common.seed, 3)) : loadStyle(stylePath, skeleton);
      const PasResult result =
          runPas(loadConfig(common), Artifacts{artifactsDir}, caption, style, skeleton, common.seed);
      writeRgba(fs::path(pasOut), result.final.toRaster());
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.exitCode();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return static_cast<int>(ErrorKind::Input);
  }
  return 0;
}
