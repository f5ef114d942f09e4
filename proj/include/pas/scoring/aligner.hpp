#pragma once

#include "pas/data/dataset.hpp"
#include "pas/kinematics/skeleton.hpp"
#include "pas/nn/layers.hpp"
#include "pas/nn/optim.hpp"
#include "pas/text/text_encoder.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace pas {

inline constexpr int kAlignDim = 64;

struct AlignerConfig {
  int hidden = 128;
  double temperature = 0.07;
  double leakySlope = 0.2;
};

struct AlignerTrainConfig {
  int steps = 1500;
  int batchSize = 64;
  nn::AdamConfig adam{.learningRate = 1e-3};
  uint64_t seed = 0;
  std::function<void(int, double)> log;
  int logEvery = 100;
};

/// Contrastive text-pose model: a pose tower over the 126-d body and a text head over the
/// pooled caption embedding, both ending in a unit vector.
class AlignerModel {
 public:
  explicit AlignerModel(const AlignerConfig& config = {}, uint64_t seed = 0);

  static AlignerModel load(const std::filesystem::path& path, const AlignerConfig& config = {});
  void save(const std::filesystem::path& path) const;

  /// Rows are 126-d bodies / 64-d pooled embeddings; outputs have unit-norm rows.
  nn::Var poseTower(nn::Var bodies) const;
  nn::Var textTower(nn::Var pooled) const;
  [[nodiscard]] Eigen::MatrixXd embedPoses(const Eigen::MatrixXd& bodies) const;
  [[nodiscard]] Eigen::MatrixXd embedTexts(const Eigen::MatrixXd& pooled) const;

  /// Symmetric InfoNCE over in-batch negatives; row i of both inputs forms a positive pair.
  nn::Var loss(nn::Tape& tape, const Eigen::MatrixXd& bodies, const Eigen::MatrixXd& pooled) const;

  /// Cosine of the two embeddings.
  [[nodiscard]] double similarity(const TextEmbedding& text, const Pose& pose) const;
  [[nodiscard]] double similarity(const std::string& caption, const Pose& pose,
                                  const TextEncoder& encoder = TextEncoder::standard()) const;
  /// One score per pose.
  [[nodiscard]] std::vector<double> scores(const TextEmbedding& text, const std::vector<Pose>& poses) const;

  std::vector<double> train(const std::vector<DatasetRecord>& corpus, const AlignerTrainConfig& config,
                            const TextEncoder& encoder = TextEncoder::standard());

  void markTrained() {
    trained_ = true;
  }
  [[nodiscard]] bool trained() const {
    return trained_;
  }
  nn::ParamStore& params() {
    return *store_;
  }
  [[nodiscard]] const AlignerConfig& config() const {
    return config_;
  }

 private:
  AlignerConfig config_;
  std::unique_ptr<nn::ParamStore> store_;
  nn::Dense pose1_, pose2_, poseOut_;
  nn::Dense text1_, textOut_;
  bool trained_ = false;
};

struct RerankResult {
  size_t best = 0;
  std::vector<double> scores;
};

/// Argmax of similarity; ties go to the lowest index. Throws InputError for no candidates.
RerankResult rerank(const AlignerModel& model, const TextEmbedding& text, const std::vector<Pose>& candidates);
/// Index of the largest score, lowest index on ties.
size_t argmaxFirst(const std::vector<double>& scores);

/// Fraction of held-out records whose own caption scores its pose higher than the pose of a
/// randomly chosen record from another archetype.
double pairwiseMatchAccuracy(const AlignerModel& model, const std::vector<DatasetRecord>& records, uint64_t seed,
                             const TextEncoder& encoder = TextEncoder::standard());
/// Fraction of records whose pose scores highest against the caption of its own archetype
/// among one reference caption per archetype.
double archetypeRetrievalAccuracy(const AlignerModel& model, const std::vector<DatasetRecord>& records,
                                  const TextEncoder& encoder = TextEncoder::standard());
/// First surface form of the first template of each built-in archetype, in archetype order.
std::vector<std::string> referenceCaptions();

} // namespace pas
