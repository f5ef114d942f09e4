#include "pas/scoring/aligner.hpp"

#include "pas/core/errors.hpp"
#include "pas/core/random.hpp"
#include "pas/data/archetypes.hpp"
#include "pas/nn/checkpoint.hpp"
#include "pas/poseprior/pose_prior.hpp"

#include <fstream>

namespace pas {

using nn::Tape;
using nn::Var;

AlignerModel::AlignerModel(const AlignerConfig& config, uint64_t seed)
    : config_(config), store_(std::make_unique<nn::ParamStore>()) {
  if (config.hidden < 1 || !(config.temperature > 0.0)) {
    throwConfig("aligner needs a positive hidden width and temperature");
  }
  Rng rng(mixSeed(seed, 0xa119));
  pose1_ = nn::addDense(*store_, "aligner.pose1", kBody6dDim, config.hidden, rng);
  pose2_ = nn::addDense(*store_, "aligner.pose2", config.hidden, config.hidden, rng);
  poseOut_ = nn::addDense(*store_, "aligner.pose_out", config.hidden, kAlignDim, rng);
  text1_ = nn::addDense(*store_, "aligner.text1", kTextWidth, config.hidden, rng);
  textOut_ = nn::addDense(*store_, "aligner.text_out", config.hidden, kAlignDim, rng);
}

AlignerModel AlignerModel::load(const std::filesystem::path& path, const AlignerConfig& config) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw ModelStateError("cannot open aligner checkpoint: " + path.string());
  }
  const auto entries = nn::readCheckpoint(in);
  AlignerConfig cfg = config;
  bool found = false;
  for (const auto& e : entries) {
    if (e.name == "aligner.pose1.weight" && e.dims.size() == 2) {
      cfg.hidden = e.dims[1];
      found = true;
    }
  }
  if (!found) {
    throw ModelStateError("checkpoint has no aligner parameters: " + path.string());
  }
  AlignerModel model(cfg);
  nn::loadCheckpoint(*model.store_, entries, "aligner.");
  model.trained_ = true;
  return model;
}

void AlignerModel::save(const std::filesystem::path& path) const {
  if (!trained_) {
    throw ModelStateError("aligner is untrained");
  }
  nn::saveCheckpoint(*store_, path);
}

Var AlignerModel::poseTower(Var bodies) const {
  const double a = config_.leakySlope;
  Var h = nn::leakyRelu(pose1_(bodies), a);
  h = nn::leakyRelu(pose2_(h), a);
  return nn::rowNormalize(poseOut_(h));
}

Var AlignerModel::textTower(Var pooled) const {
  Var h = nn::leakyRelu(text1_(pooled), config_.leakySlope);
  return nn::rowNormalize(textOut_(h));
}

Eigen::MatrixXd AlignerModel::embedPoses(const Eigen::MatrixXd& bodies) const {
  if (bodies.cols() != kBody6dDim) {
    throwInput("aligner pose input must have 126 columns");
  }
  Tape tape(false);
  return poseTower(tape.constant(bodies)).value();
}

Eigen::MatrixXd AlignerModel::embedTexts(const Eigen::MatrixXd& pooled) const {
  if (pooled.cols() != kTextWidth) {
    throwInput("aligner text input must have 64 columns");
  }
  Tape tape(false);
  return textTower(tape.constant(pooled)).value();
}

Var AlignerModel::loss(Tape& tape, const Eigen::MatrixXd& bodies, const Eigen::MatrixXd& pooled) const {
  const Eigen::Index n = bodies.rows();
  if (n < 2) {
    throwConfig("contrastive loss needs a batch of at least two pairs");
  }
  if (pooled.rows() != n) {
    throwInput("aligner batch halves differ in size");
  }
  Var p = poseTower(tape.constant(bodies));
  Var t = textTower(tape.constant(pooled));
  const double inv = 1.0 / config_.temperature;
  Var logits = nn::scale(nn::matmul(p, nn::transpose(t)), inv);
  // The diagonal holds the positive pairs; a constant identity mask selects it.
  Var mask = tape.constant(Eigen::MatrixXd::Identity(n, n));
  Var rows = nn::sum(nn::mul(nn::logSoftmaxRows(logits), mask));
  Var cols = nn::sum(nn::mul(nn::logSoftmaxRows(nn::transpose(logits)), mask));
  return nn::scale(nn::add(rows, cols), -0.5 / static_cast<double>(n));
}

double AlignerModel::similarity(const TextEmbedding& text, const Pose& pose) const {
  return scores(text, {pose})[0];
}

double AlignerModel::similarity(const std::string& caption, const Pose& pose, const TextEncoder& encoder) const {
  return similarity(encoder.encode(caption), pose);
}

std::vector<double> AlignerModel::scores(const TextEmbedding& text, const std::vector<Pose>& poses) const {
  if (text.pooled.size() != kTextWidth) {
    throwInput("aligner text embedding must have 64 values");
  }
  const Eigen::MatrixXd pe = embedPoses(bodyMatrix(poses));
  const Eigen::VectorXd te = embedTexts(text.pooled.transpose()).row(0).transpose();
  std::vector<double> out(poses.size());
  for (size_t i = 0; i < poses.size(); ++i) {
    out[i] = std::clamp(pe.row(static_cast<Eigen::Index>(i)).dot(te), -1.0, 1.0);
  }
  return out;
}

std::vector<double> AlignerModel::train(const std::vector<DatasetRecord>& corpus, const AlignerTrainConfig& config,
                                        const TextEncoder& encoder) {
  if (config.batchSize < 2) {
    throwConfig("aligner batch size must be at least 2");
  }
  if (config.steps < 0) {
    throwConfig("aligner steps must be non-negative");
  }
  if (corpus.size() < 2) {
    throwInput("aligner training needs at least two records");
  }
  std::vector<Pose> poses;
  poses.reserve(corpus.size());
  Eigen::MatrixXd pooled(static_cast<Eigen::Index>(corpus.size()), kTextWidth);
  for (size_t i = 0; i < corpus.size(); ++i) {
    poses.push_back(corpus[i].pose);
    pooled.row(static_cast<Eigen::Index>(i)) = encoder.encode(corpus[i].caption).pooled.transpose();
  }
  const Eigen::MatrixXd bodies = bodyMatrix(poses);
  Rng rng(config.seed);
  std::vector<double> losses;
  losses.reserve(static_cast<size_t>(config.steps));
  Eigen::MatrixXd bb(config.batchSize, kBody6dDim);
  Eigen::MatrixXd tb(config.batchSize, kTextWidth);
  const int rows = static_cast<int>(corpus.size());
  for (int step = 0; step < config.steps; ++step) {
    for (int i = 0; i < config.batchSize; ++i) {
      const int r = rng.uniformInt(0, rows - 1);
      bb.row(i) = bodies.row(r);
      tb.row(i) = pooled.row(r);
    }
    Tape tape;
    Var l = loss(tape, bb, tb);
    tape.backward(l);
    nn::adamStep(*store_, config.adam);
    const double value = l.value()(0, 0);
    if (!std::isfinite(value)) {
      throw NumericError("aligner loss became non-finite at step " + std::to_string(step + 1));
    }
    losses.push_back(value);
    if (config.log && config.logEvery > 0 && (step + 1) % config.logEvery == 0) {
      config.log(step + 1, value);
    }
  }
  trained_ = true;
  return losses;
}

size_t argmaxFirst(const std::vector<double>& scores) {
  size_t best = 0;
  for (size_t i = 1; i < scores.size(); ++i) {
    if (scores[i] > scores[best]) {
      best = i;
    }
  }
  return best;
}

RerankResult rerank(const AlignerModel& model, const TextEmbedding& text, const std::vector<Pose>& candidates) {
  if (candidates.empty()) {
    throwInput("rerank needs at least one candidate");
  }
  RerankResult r;
  r.scores = model.scores(text, candidates);
  r.best = argmaxFirst(r.scores);
  return r;
}

double pairwiseMatchAccuracy(const AlignerModel& model, const std::vector<DatasetRecord>& records, uint64_t seed,
                             const TextEncoder& encoder) {
  if (records.size() < 2) {
    throwInput("pairwise accuracy needs at least two records");
  }
  Rng rng(seed);
  std::vector<Pose> poses;
  for (const auto& r : records) {
    poses.push_back(r.pose);
  }
  const Eigen::MatrixXd pe = model.embedPoses(bodyMatrix(poses));
  size_t wins = 0;
  size_t trials = 0;
  const int n = static_cast<int>(records.size());
  for (int i = 0; i < n; ++i) {
    int j = -1;
    for (int attempt = 0; attempt < 64 && j < 0; ++attempt) {
      const int c = rng.uniformInt(0, n - 1);
      if (records[static_cast<size_t>(c)].archetype != records[static_cast<size_t>(i)].archetype) {
        j = c;
      }
    }
    if (j < 0) {
      continue;
    }
    const Eigen::VectorXd te =
        model.embedTexts(encoder.encode(records[static_cast<size_t>(i)].caption).pooled.transpose()).row(0).transpose();
    ++trials;
    if (pe.row(i).dot(te) > pe.row(j).dot(te)) {
      ++wins;
    }
  }
  if (trials == 0) {
    throwInput("pairwise accuracy needs records from at least two archetypes");
  }
  return static_cast<double>(wins) / static_cast<double>(trials);
}

std::vector<std::string> referenceCaptions() {
  std::vector<std::string> out;
  for (const auto& a : defaultArchetypes()) {
    out.push_back(allExpansions(a.templates.front()).front());
  }
  return out;
}

double archetypeRetrievalAccuracy(const AlignerModel& model, const std::vector<DatasetRecord>& records,
                                  const TextEncoder& encoder) {
  if (records.empty()) {
    throwInput("retrieval accuracy needs records");
  }
  const auto captions = referenceCaptions();
  Eigen::MatrixXd pooled(static_cast<Eigen::Index>(captions.size()), kTextWidth);
  for (size_t c = 0; c < captions.size(); ++c) {
    pooled.row(static_cast<Eigen::Index>(c)) = encoder.encode(captions[c]).pooled.transpose();
  }
  const Eigen::MatrixXd te = model.embedTexts(pooled);
  std::vector<Pose> poses;
  for (const auto& r : records) {
    poses.push_back(r.pose);
  }
  const Eigen::MatrixXd sims = model.embedPoses(bodyMatrix(poses)) * te.transpose();
  size_t hits = 0;
  for (size_t i = 0; i < records.size(); ++i) {
    const Eigen::VectorXd row = sims.row(static_cast<Eigen::Index>(i)).transpose();
    const std::vector<double> s(row.data(), row.data() + row.size());
    if (static_cast<int>(argmaxFirst(s)) == archetypeIndex(records[i].archetype)) {
      ++hits;
    }
  }
  return static_cast<double>(hits) / static_cast<double>(records.size());
}

} // namespace pas
