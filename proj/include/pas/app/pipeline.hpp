#pragma once

#include "pas/app/artifacts.hpp"
#include "pas/app/config.hpp"
#include "pas/compositor/compositor.hpp"
#include "pas/diffusion/pose_diffusion.hpp"
#include "pas/poseprior/pose_prior.hpp"
#include "pas/render/renderer.hpp"
#include "pas/retarget/retarget.hpp"
#include "pas/scoring/aligner.hpp"

#include <array>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace pas {

// Module settings drawn from the configuration.
PosePriorConfig priorConfig(const Config& config);
PoseDiffusionConfig poseDiffusionConfig(const Config& config);
AlignerConfig alignerConfig(const Config& config);
AutoencoderConfig autoencoderConfig(const Config& config);
CompositorConfig compositorConfig(const Config& config);
GuidanceConfig guidanceConfig(const Config& config);
Camera cameraConfig(const Config& config);
std::array<double, 3> splitFractions(const Config& config);
void applyRetargetConfig(const Config& config, RetargetProblem& problem);

// Training stages. Each writes its final checkpoint and a "step\tloss" log into `artifacts`,
// plus an intermediate checkpoint every train.checkpoint_every steps.
PosePrior trainPriorStage(const Config& config, const std::vector<DatasetRecord>& records, uint64_t seed,
                          const Artifacts& artifacts);
/// `prior` is required in LATENT mode and ignored in SIX_D mode.
PoseDiffusion trainPoseDiffusionStage(const Config& config, const std::vector<DatasetRecord>& records,
                                      const PosePrior* prior, uint64_t seed, const Artifacts& artifacts);
AlignerModel trainAlignerStage(const Config& config, const std::vector<DatasetRecord>& records, uint64_t seed,
                               const Artifacts& artifacts);

struct CompositorStage {
  SceneAutoencoder autoencoder;
  CompositorModel model;
};

/// Trains the scene autoencoder, then the denoiser on its latents.
CompositorStage trainCompositorStage(const Config& config, const std::vector<SyntheticScene>& scenes, uint64_t seed,
                                     const Artifacts& artifacts);

/// How sampled states become poses: "latent", "6d" or "6d+vposer".
struct DecodeMode {
  PoseMode mode = PoseMode::Latent;
  bool regularize = false;

  static DecodeMode parse(const std::string& name);
  [[nodiscard]] std::string name() const;
};

struct PoseSamples {
  std::vector<Pose> poses;
  /// Aligner similarity per candidate; empty without reranking.
  std::vector<double> scores;
  size_t best = 0;
};

/// Draws n candidates for `caption`; with an aligner, `best` is the highest-scoring one.
PoseSamples samplePoses(const PoseDiffusion& diffusion, const PosePrior* prior, const AlignerModel* aligner,
                        const std::string& caption, int n, const GuidanceConfig& guidance, DecodeMode mode,
                        uint64_t seed);

struct EvalReport {
  double fpd = 0.0;
  int fpdSamples = 0;
  /// Absent when no aligner checkpoint was available.
  std::optional<double> retrievalAccuracy;
  /// Share of guided samples the archetype oracle assigns to the prompted archetype.
  std::map<std::string, double> consistency;
  double meanConsistency = 0.0;
};

/// FPD against the prior means of `test`, aligner retrieval accuracy on `test`, and per-archetype
/// consistency on the reference captions.
EvalReport evaluate(const Config& config, const PoseDiffusion& diffusion, const PosePrior& prior,
                    const AlignerModel* aligner, const std::vector<DatasetRecord>& test, uint64_t seed);
void writeEvalReport(std::ostream& out, const EvalReport& report);

/// Prior latents of generated poses: LATENT states are used as is, SIX_D ones are re-encoded.
Eigen::MatrixXd generatedLatents(const std::vector<PoseState>& states, const PosePrior& prior);

/// Splits a trailing scene phrase ("on the beach") off a caption: {pose caption, scene words}.
std::pair<std::string, std::string> splitSceneCaption(const std::string& caption);

struct PasResult {
  Pose sourcePose;
  std::vector<double> scores;
  RetargetResult retarget;
  Raster avatar;
  Raster gray;
  RgbImage generated;
  /// `generated` with the avatar pasted back over its α = 1 pixels.
  RgbImage final;
};

/// Full pipeline: sample and rerank poses, retarget onto `avatarSkeleton`, render, then
/// compose a scene at w = 0 and paste the avatar back.
PasResult runPas(const Config& config, const Artifacts& artifacts, const std::string& caption,
                 const AvatarStyle& style, const Skeleton& avatarSkeleton, uint64_t seed);

/// Compositor stage alone for given avatar and gray renders.
RgbImage composeScene(const Config& config, const Artifacts& artifacts, const Raster& avatar, const Raster& gray,
                      const std::string& caption, uint64_t seed, RgbImage* generated = nullptr);

} // namespace pas
