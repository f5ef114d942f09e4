#include "pas/diffusion/pose_diffusion.hpp"

#include "pas/core/errors.hpp"
#include "pas/core/random.hpp"
#include "pas/nn/checkpoint.hpp"
#include "pas/poseprior/pose_prior.hpp"

#include <cmath>
#include <fstream>

namespace pas {

using nn::Tape;
using nn::Var;

namespace {

constexpr const char* kMetaName = "posediff.meta.config";
constexpr int kMetaSize = 11;

} // namespace

PoseMode parsePoseMode(const std::string& name) {
  if (name == "latent") {
    return PoseMode::Latent;
  }
  if (name == "6d") {
    return PoseMode::SixD;
  }
  throwConfig("unknown pose mode '" + name + "' (expected latent or 6d)");
}

std::string poseModeName(PoseMode mode) {
  return mode == PoseMode::Latent ? "latent" : "6d";
}

int PoseDiffusionConfig::resolvedPoseDim() const {
  if (poseDim > 0) {
    return poseDim;
  }
  return mode == PoseMode::Latent ? kLatentDim : kBody6dDim;
}

int PoseDiffusionConfig::resolvedRootDim() const {
  return rootDim > 0 ? rootDim : 6;
}

double PoseDiffusionConfig::resolvedClamp() const {
  if (clampBound > 0.0) {
    return clampBound;
  }
  return mode == PoseMode::Latent ? 6.0 : 3.0;
}

void PoseTrainingSet::append(const Eigen::VectorXd& p, const Eigen::VectorXd& r, const TextEmbedding& text) {
  if (pose.rows() > 0 && (p.size() != pose.cols() || r.size() != root.cols())) {
    throwInput("training set: vector widths differ between examples");
  }
  const Eigen::Index n = pose.rows();
  pose.conservativeResize(n + 1, p.size());
  root.conservativeResize(n + 1, r.size());
  tokens.conservativeResize((n + 1) * kMaxTokens, kTextWidth);
  pooled.conservativeResize(n + 1, kTextWidth);
  pose.row(n) = p.transpose();
  root.row(n) = r.transpose();
  tokens.middleRows(n * kMaxTokens, kMaxTokens) = text.tokens;
  pooled.row(n) = text.pooled.transpose();
}

PoseDiffusion::PoseDiffusion(const PoseDiffusionConfig& config, uint64_t seed)
    : config_(config), schedule_(makeSchedule(config.timesteps, config.schedule)),
      store_(std::make_unique<nn::ParamStore>()) {
  if (config.layers < 1 || config.width < 2 || config.mlpRatio < 1) {
    throwConfig("posediff: layers, width and mlp_ratio must be positive");
  }
  if (config.width % 2 != 0) {
    throwConfig("posediff.width must be even for the timestep embedding");
  }
  if (config.dropProbability < 0.0 || config.dropProbability > 1.0) {
    throwConfig("posediff.drop_prob must be in [0, 1]");
  }
  Rng rng(seed);
  auto& s = *store_;
  const int d = config.width;
  tokenIn_ = nn::addDense(s, "posediff.token_in", kTextWidth, d, rng);
  pooledIn_ = nn::addDense(s, "posediff.pooled_in", kTextWidth, d, rng);
  timeIn1_ = nn::addDense(s, "posediff.time_in1", d, d, rng);
  timeIn2_ = nn::addDense(s, "posediff.time_in2", d, d, rng);
  poseIn_ = nn::addDense(s, "posediff.pose_in", config.resolvedPoseDim(), d, rng);
  rootIn_ = nn::addDense(s, "posediff.root_in", config.resolvedRootDim(), d, rng);
  poseQuery_ = &s.addUniform("posediff.pose_query", {d}, 1.0, rng);
  orientQuery_ = &s.addUniform("posediff.orient_query", {d}, 1.0, rng);
  positions_ = &s.addUniform("posediff.positions", {kDenoiserSlots, d}, 0.1, rng);
  for (int l = 0; l < config.layers; ++l) {
    const std::string p = "posediff.block" + std::to_string(l);
    Block b;
    b.norm1 = nn::addLayerNorm(s, p + ".norm1", d);
    b.attention = nn::addAttention(s, p + ".attn", d, config.heads, rng);
    b.norm2 = nn::addLayerNorm(s, p + ".norm2", d);
    b.mlpIn = nn::addDense(s, p + ".mlp_in", d, d * config.mlpRatio, rng);
    b.mlpOut = nn::addDense(s, p + ".mlp_out", d * config.mlpRatio, d, rng);
    blocks_.push_back(b);
  }
  finalNorm_ = nn::addLayerNorm(s, "posediff.final_norm", d);
  poseOut_ = nn::addDense(s, "posediff.pose_out", d, config.resolvedPoseDim(), rng);
  rootOut_ = nn::addDense(s, "posediff.root_out", d, config.resolvedRootDim(), rng);
}

void PoseDiffusion::save(const std::filesystem::path& path) const {
  if (!trained_) {
    throw ModelStateError("pose diffusion model is untrained");
  }
  auto entries = nn::toCheckpoint(*store_);
  const auto& c = config_;
  entries.push_back(
      {kMetaName,
       {kMetaSize},
       {static_cast<float>(c.mode == PoseMode::Latent ? 0 : 1), static_cast<float>(c.layers),
        static_cast<float>(c.width), static_cast<float>(c.heads), static_cast<float>(c.mlpRatio),
        static_cast<float>(c.timesteps), static_cast<float>(c.schedule == ScheduleKind::Cosine ? 0 : 1),
        static_cast<float>(c.resolvedPoseDim()), static_cast<float>(c.resolvedRootDim()),
        static_cast<float>(c.resolvedClamp()), static_cast<float>(c.dropProbability)}});
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throwInput("cannot write checkpoint: " + path.string());
  }
  nn::writeCheckpoint(out, entries);
}

PoseDiffusion PoseDiffusion::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw ModelStateError("cannot open pose diffusion checkpoint: " + path.string());
  }
  const auto entries = nn::readCheckpoint(in);
  const nn::CheckpointEntry* meta = nullptr;
  for (const auto& e : entries) {
    if (e.name == kMetaName) {
      meta = &e;
    }
  }
  if (meta == nullptr || meta->values.size() != kMetaSize) {
    throw ModelStateError("checkpoint has no pose diffusion configuration: " + path.string());
  }
  const auto& v = meta->values;
  PoseDiffusionConfig c;
  c.mode = v[0] == 0.0f ? PoseMode::Latent : PoseMode::SixD;
  c.layers = static_cast<int>(v[1]);
  c.width = static_cast<int>(v[2]);
  c.heads = static_cast<int>(v[3]);
  c.mlpRatio = static_cast<int>(v[4]);
  c.timesteps = static_cast<int>(v[5]);
  c.schedule = v[6] == 0.0f ? ScheduleKind::Cosine : ScheduleKind::Linear;
  c.poseDim = static_cast<int>(v[7]);
  c.rootDim = static_cast<int>(v[8]);
  c.clampBound = static_cast<double>(v[9]);
  c.dropProbability = static_cast<double>(v[10]);
  PoseDiffusion model(c);
  nn::loadCheckpoint(*model.store_, entries, "posediff.");
  model.trained_ = true;
  return model;
}

Var PoseDiffusion::predict(
    Tape& tape,
    const Eigen::MatrixXd& noisyPose,
    const Eigen::MatrixXd& noisyRoot,
    const std::vector<int>& timesteps,
    const Eigen::MatrixXd& tokens,
    const Eigen::MatrixXd& pooled) const {
  const auto B = static_cast<int>(noisyPose.rows());
  const int P = config_.resolvedPoseDim();
  const int R = config_.resolvedRootDim();
  if (B == 0 || noisyPose.cols() != P || noisyRoot.cols() != R || noisyRoot.rows() != B ||
      static_cast<int>(timesteps.size()) != B || tokens.rows() != static_cast<Eigen::Index>(B) * kMaxTokens ||
      tokens.cols() != kTextWidth || pooled.rows() != B || pooled.cols() != kTextWidth) {
    throwInput("posediff: denoiser input dims are inconsistent");
  }
  const int d = config_.width;
  std::vector<double> tvals(timesteps.begin(), timesteps.end());
  Var time = timeIn2_(nn::gelu(timeIn1_(tape.constant(nn::sinusoidalRows(tvals, d)))));
  std::vector<int> repeat(static_cast<size_t>(B), 0);
  Var blocks[] = {
      tokenIn_(tape.constant(tokens)),
      pooledIn_(tape.constant(pooled)),
      time,
      poseIn_(tape.constant(noisyPose)),
      rootIn_(tape.constant(noisyRoot)),
      nn::gatherRows(tape.param(*poseQuery_), repeat),
      nn::gatherRows(tape.param(*orientQuery_), repeat),
  };
  // Blocks are stacked slot-major; reorder to item-major sequences of kDenoiserSlots rows.
  Var stacked = nn::concatRows(std::span<const Var>(blocks));
  std::vector<int> order(static_cast<size_t>(B) * kDenoiserSlots);
  std::vector<int> slot(order.size());
  for (int b = 0; b < B; ++b) {
    for (int s = 0; s < kDenoiserSlots; ++s) {
      const auto r = static_cast<size_t>(b * kDenoiserSlots + s);
      order[r] = s < kMaxTokens ? b * kMaxTokens + s : s * B + b;
      slot[r] = s;
    }
  }
  Var x = nn::gatherRows(stacked, std::move(order)) + nn::gatherRows(tape.param(*positions_), std::move(slot));
  for (const auto& blk : blocks_) {
    x = x + blk.attention.selfAttention(blk.norm1(x), B, true);
    x = x + blk.mlpOut(nn::gelu(blk.mlpIn(blk.norm2(x))));
  }
  x = finalNorm_(x);
  std::vector<int> poseRows(static_cast<size_t>(B));
  std::vector<int> rootRows(static_cast<size_t>(B));
  for (int b = 0; b < B; ++b) {
    poseRows[static_cast<size_t>(b)] = b * kDenoiserSlots + kPoseQuerySlot;
    rootRows[static_cast<size_t>(b)] = b * kDenoiserSlots + kOrientQuerySlot;
  }
  return nn::concatCols({poseOut_(nn::gatherRows(x, poseRows)), rootOut_(nn::gatherRows(x, rootRows))});
}

NoisedBatch PoseDiffusion::prepareBatch(const PoseTrainingSet& data, const std::vector<int>& rows, Rng& rng) const {
  if (rows.empty()) {
    throwInput("posediff: empty training batch");
  }
  const auto B = static_cast<Eigen::Index>(rows.size());
  NoisedBatch nb;
  nb.timesteps.resize(rows.size());
  nb.dropped.resize(rows.size());
  nb.cleanPose.resize(B, data.pose.cols());
  nb.cleanRoot.resize(B, data.root.cols());
  nb.tokens = Eigen::MatrixXd::Zero(B * kMaxTokens, kTextWidth);
  nb.pooled = Eigen::MatrixXd::Zero(B, kTextWidth);
  for (Eigen::Index i = 0; i < B; ++i) {
    const int r = rows[static_cast<size_t>(i)];
    nb.cleanPose.row(i) = data.pose.row(r);
    nb.cleanRoot.row(i) = data.root.row(r);
    nb.timesteps[static_cast<size_t>(i)] = rng.uniformInt(1, schedule_.steps());
    nb.dropped[static_cast<size_t>(i)] = rng.bernoulli(config_.dropProbability);
    if (!nb.dropped[static_cast<size_t>(i)]) {
      nb.tokens.middleRows(i * kMaxTokens, kMaxTokens) = data.tokens.middleRows(Eigen::Index(r) * kMaxTokens, kMaxTokens);
      nb.pooled.row(i) = data.pooled.row(r);
    }
  }
  const Eigen::MatrixXd noisePose = rng.normalMatrix(B, data.pose.cols());
  const Eigen::MatrixXd noiseRoot = rng.normalMatrix(B, data.root.cols());
  nb.noisyPose.resize(B, data.pose.cols());
  nb.noisyRoot.resize(B, data.root.cols());
  for (Eigen::Index i = 0; i < B; ++i) {
    const double ab = schedule_.alphaBar(nb.timesteps[static_cast<size_t>(i)]);
    nb.noisyPose.row(i) = std::sqrt(ab) * nb.cleanPose.row(i) + std::sqrt(1.0 - ab) * noisePose.row(i);
    nb.noisyRoot.row(i) = std::sqrt(ab) * nb.cleanRoot.row(i) + std::sqrt(1.0 - ab) * noiseRoot.row(i);
  }
  return nb;
}

Var PoseDiffusion::loss(Tape& tape, const NoisedBatch& batch) const {
  Var pred = predict(tape, batch.noisyPose, batch.noisyRoot, batch.timesteps, batch.tokens, batch.pooled);
  Eigen::MatrixXd target(batch.cleanPose.rows(), batch.cleanPose.cols() + batch.cleanRoot.cols());
  target << batch.cleanPose, batch.cleanRoot;
  return nn::mseLoss(pred, tape.constant(std::move(target)));
}

double PoseDiffusion::trainStep(const PoseTrainingSet& data, int batchSize, Rng& rng, const nn::AdamConfig& adam, double gradClip) {
  if (data.size() == 0 || batchSize < 1) {
    throwInput("posediff: empty training batch");
  }
  if (data.pose.cols() != config_.resolvedPoseDim() || data.root.cols() != config_.resolvedRootDim()) {
    throwInput("posediff: training data width does not match the model");
  }
  std::vector<int> rows(static_cast<size_t>(batchSize));
  for (auto& r : rows) {
    r = rng.uniformInt(0, static_cast<int>(data.size()) - 1);
  }
  const NoisedBatch batch = prepareBatch(data, rows, rng);
  Tape tape;
  Var l = loss(tape, batch);
  tape.backward(l);
  if (gradClip > 0.0) {
    nn::clipGradNorm(*store_, gradClip);
  }
  nn::adamStep(*store_, adam);
  return l.value()(0, 0);
}

std::vector<double> PoseDiffusion::train(const PoseTrainingSet& data, const PoseDiffusionTrainConfig& config) {
  if (config.steps < 0) {
    throwConfig("posediff training steps must be non-negative");
  }
  Rng rng(config.seed);
  std::vector<double> losses;
  losses.reserve(static_cast<size_t>(config.steps));
  for (int step = 0; step < config.steps; ++step) {
    losses.push_back(trainStep(data, config.batchSize, rng, config.adam, config.gradClip));
    if (config.log && config.logEvery > 0 && (step + 1) % config.logEvery == 0) {
      config.log(step + 1, losses.back());
    }
  }
  trained_ = true;
  return losses;
}

Eigen::MatrixXd PoseDiffusion::predictValue(
    const Eigen::MatrixXd& x,
    int t,
    const Eigen::MatrixXd& tokens,
    const Eigen::MatrixXd& pooled) const {
  const int P = config_.resolvedPoseDim();
  Tape tape(false);
  const std::vector<int> ts(static_cast<size_t>(x.rows()), t);
  return predict(tape, x.leftCols(P), x.rightCols(x.cols() - P), ts, tokens, pooled).value();
}

std::vector<PoseState> PoseDiffusion::sample(const TextEmbedding& text, const GuidanceConfig& guidance, int n, Rng& rng) const {
  if (!(guidance.scale >= 0.0)) {
    throwConfig("guidance scale must be non-negative");
  }
  return runSampler(text, guidance.scale, guidance.steps, n, rng);
}

std::vector<PoseState> PoseDiffusion::sampleConditional(const TextEmbedding& text, int steps, int n, Rng& rng) const {
  return runSampler(text, std::nullopt, steps, n, rng);
}

std::vector<PoseState> PoseDiffusion::runSampler(
    const TextEmbedding& text,
    std::optional<double> scale,
    int steps,
    int n,
    Rng& rng) const {
  if (!trained_) {
    throw ModelStateError("pose diffusion model is untrained; train it or load a checkpoint");
  }
  if (n < 1) {
    throwInput("sample count must be at least 1");
  }
  if (text.tokens.rows() != kMaxTokens || text.tokens.cols() != kTextWidth || text.pooled.size() != kTextWidth) {
    throwInput("sample: text embedding has the wrong shape");
  }
  const std::vector<int> ts = schedule_.respaced(steps == 0 ? schedule_.steps() : steps);
  const int P = config_.resolvedPoseDim();
  const int D = P + config_.resolvedRootDim();
  const double C = config_.resolvedClamp();

  Eigen::MatrixXd condTokens(static_cast<Eigen::Index>(n) * kMaxTokens, kTextWidth);
  Eigen::MatrixXd condPooled(n, kTextWidth);
  for (int i = 0; i < n; ++i) {
    condTokens.middleRows(Eigen::Index(i) * kMaxTokens, kMaxTokens) = text.tokens;
    condPooled.row(i) = text.pooled.transpose();
  }
  const Eigen::MatrixXd nullTokens = Eigen::MatrixXd::Zero(condTokens.rows(), kTextWidth);
  const Eigen::MatrixXd nullPooled = Eigen::MatrixXd::Zero(n, kTextWidth);

  Eigen::MatrixXd x = rng.normalMatrix(n, D);
  for (auto k = static_cast<int>(ts.size()) - 1; k >= 0; --k) {
    const int t = ts[static_cast<size_t>(k)];
    const double ab = schedule_.alphaBar(t);
    const double abPrev = k > 0 ? schedule_.alphaBar(ts[static_cast<size_t>(k - 1)]) : 1.0;
    const double sa = std::sqrt(ab);
    const double sn = std::sqrt(1.0 - ab);
    auto toEps = [&](const Eigen::MatrixXd& x0) -> Eigen::MatrixXd { return (x - sa * x0) / sn; };
    Eigen::MatrixXd eps;
    if (scale) {
      const double s = *scale;
      const Eigen::MatrixXd epsC = toEps(predictValue(x, t, condTokens, condPooled));
      const Eigen::MatrixXd epsU = toEps(predictValue(x, t, nullTokens, nullPooled));
      // ε̂_u + s(ε̂_c − ε̂_u), written so that s = 1 and s = 0 select one prediction exactly.
      eps = s * epsC + (1.0 - s) * epsU;
    } else {
      eps = toEps(predictValue(x, t, condTokens, condPooled));
    }
    const Eigen::MatrixXd x0 = ((x - sn * eps) / sa).cwiseMax(-C).cwiseMin(C);
    const PosteriorStep post = posteriorStep(ab, abPrev);
    const Eigen::MatrixXd z = rng.normalMatrix(n, D);
    x = post.c0 * x0 + post.ct * x + std::sqrt(post.variance) * z;
    if (!x.allFinite()) {
      throw NumericError("pose sampler produced non-finite values at t = " + std::to_string(t));
    }
  }
  std::vector<PoseState> out(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    auto& st = out[static_cast<size_t>(i)];
    st.mode = config_.mode;
    st.pose = x.row(i).head(P).transpose();
    st.root = x.row(i).tail(D - P).transpose();
  }
  return out;
}

Pose decodeToPose(const PoseState& state, const PosePrior* prior, bool regularize) {
  if (state.root.size() != 6) {
    throwInput("pose state root must have 6 values");
  }
  const Rotation6D root = state.root;
  if (state.mode == PoseMode::Latent) {
    if (prior == nullptr) {
      throw ModelStateError("latent pose decoding needs a trained pose prior");
    }
    if (state.pose.size() != kLatentDim) {
      throwInput("latent pose state must have 32 values");
    }
    return Pose::fromRot6d(prior->decode(state.pose), root);
  }
  if (state.pose.size() != kBody6dDim) {
    throwInput("6D pose state must have 126 values");
  }
  Pose pose = Pose::fromRot6d(state.pose, root);
  if (regularize) {
    if (prior == nullptr) {
      throw ModelStateError("6d+vposer decoding needs a trained pose prior");
    }
    pose = prior->regularize(pose);
  }
  return pose;
}

PoseTrainingSet buildTrainingSet(
    const std::vector<Pose>& poses,
    const std::vector<std::string>& captions,
    PoseMode mode,
    const PosePrior* prior,
    const TextEncoder& encoder) {
  if (poses.size() != captions.size() || poses.empty()) {
    throwInput("training set needs one caption per pose");
  }
  Eigen::MatrixXd body = bodyMatrix(poses);
  if (mode == PoseMode::Latent) {
    if (prior == nullptr) {
      throw ModelStateError("latent training targets need a trained pose prior");
    }
    body = prior->encodeMeans(body);
  }
  const auto n = static_cast<Eigen::Index>(poses.size());
  PoseTrainingSet set;
  set.pose = std::move(body);
  set.root.resize(n, 6);
  set.tokens.resize(n * kMaxTokens, kTextWidth);
  set.pooled.resize(n, kTextWidth);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto idx = static_cast<size_t>(i);
    set.root.row(i) = poses[idx].rootRot6d().transpose();
    const TextEmbedding e = encoder.encode(captions[idx]);
    set.tokens.middleRows(i * kMaxTokens, kMaxTokens) = e.tokens;
    set.pooled.row(i) = e.pooled.transpose();
  }
  return set;
}

} // namespace pas
