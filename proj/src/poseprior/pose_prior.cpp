#include "pas/poseprior/pose_prior.hpp"

#include "pas/core/errors.hpp"
#include "pas/core/random.hpp"
#include "pas/nn/checkpoint.hpp"

#include <fstream>

namespace pas {

using nn::Tape;
using nn::Var;

namespace {

constexpr double kLogStdMin = -10.0;
constexpr double kLogStdMax = 5.0;

// Constant matrices that pick the a1 / a2 components of each joint and sum per joint.
struct ValiditySelectors {
  Eigen::MatrixXd pickA1; // 126 × 63
  Eigen::MatrixXd pickA2; // 126 × 63
  Eigen::MatrixXd group;  // 63 × 21
};

const ValiditySelectors& validitySelectors() {
  static const ValiditySelectors s = [] {
    ValiditySelectors v;
    v.pickA1 = Eigen::MatrixXd::Zero(kBody6dDim, 3 * kBodyJointCount);
    v.pickA2 = Eigen::MatrixXd::Zero(kBody6dDim, 3 * kBodyJointCount);
    v.group = Eigen::MatrixXd::Zero(3 * kBodyJointCount, kBodyJointCount);
    for (int j = 0; j < kBodyJointCount; ++j) {
      for (int k = 0; k < 3; ++k) {
        v.pickA1(6 * j + k, 3 * j + k) = 1.0;
        v.pickA2(6 * j + 3 + k, 3 * j + k) = 1.0;
        v.group(3 * j + k, j) = 1.0;
      }
    }
    return v;
  }();
  return s;
}

} // namespace

double gaussianKl(const LatentGaussian& q) {
  const Eigen::ArrayXd var = (2.0 * q.logStd.array()).exp();
  return 0.5 * (q.mean.array().square() + var - 1.0 - 2.0 * q.logStd.array()).sum();
}

PosePrior::PosePrior(const PosePriorConfig& config, uint64_t seed)
    : config_(config), store_(std::make_unique<nn::ParamStore>()) {
  if (config.hidden < 1) {
    throwConfig("poseprior.hidden must be positive");
  }
  Rng rng(seed);
  auto& s = *store_;
  const int h = config.hidden;
  enc1_ = nn::addDense(s, "poseprior.enc1", kBody6dDim, h, rng);
  enc2_ = nn::addDense(s, "poseprior.enc2", h, h, rng);
  encMean_ = nn::addDense(s, "poseprior.enc_mean", h, kLatentDim, rng);
  encLogStd_ = nn::addDense(s, "poseprior.enc_logstd", h, kLatentDim, rng);
  dec1_ = nn::addDense(s, "poseprior.dec1", kLatentDim, h, rng);
  dec2_ = nn::addDense(s, "poseprior.dec2", h, h, rng);
  decOut_ = nn::addDense(s, "poseprior.dec_out", h, kBody6dDim, rng);
}

PosePrior PosePrior::load(const std::filesystem::path& path, const PosePriorConfig& config) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw ModelStateError("cannot open pose prior checkpoint: " + path.string());
  }
  const auto entries = nn::readCheckpoint(in);
  PosePriorConfig cfg = config;
  bool found = false;
  for (const auto& e : entries) {
    if (e.name == "poseprior.enc1.weight" && e.dims.size() == 2) {
      cfg.hidden = e.dims[1];
      found = true;
    }
  }
  if (!found) {
    throw ModelStateError("checkpoint has no pose prior parameters: " + path.string());
  }
  PosePrior prior(cfg);
  nn::loadCheckpoint(*prior.store_, entries, "poseprior.");
  prior.trained_ = true;
  return prior;
}

void PosePrior::save(const std::filesystem::path& path) const {
  requireTrained();
  nn::saveCheckpoint(*store_, path);
}

void PosePrior::requireTrained() const {
  if (!trained_) {
    throw ModelStateError("pose prior is untrained; train it or load a checkpoint");
  }
}

Var PosePrior::encodeVar(Tape& tape, Var x, Var* logStd) const {
  (void)tape;
  const double a = config_.leakySlope;
  Var h = nn::leakyRelu(enc1_(x), a);
  h = nn::leakyRelu(enc2_(h), a);
  if (logStd != nullptr) {
    *logStd = nn::clamp(encLogStd_(h), kLogStdMin, kLogStdMax);
  }
  return encMean_(h);
}

Var PosePrior::decodeVar(Tape& tape, Var z) const {
  (void)tape;
  const double a = config_.leakySlope;
  Var h = nn::leakyRelu(dec1_(z), a);
  h = nn::leakyRelu(dec2_(h), a);
  return decOut_(h);
}

VaeLossTerms PosePrior::loss(Tape& tape, const Eigen::MatrixXd& batch, const Eigen::MatrixXd& noise) const {
  if (batch.rows() == 0 || batch.cols() != kBody6dDim) {
    throwInput("vae loss: batch must be non-empty with 126 columns");
  }
  if (noise.rows() != batch.rows() || noise.cols() != kLatentDim) {
    throwInput("vae loss: noise must be batch × 32");
  }
  const auto n = static_cast<double>(batch.rows());
  Var x = tape.constant(batch);
  Var logStd;
  Var mu = encodeVar(tape, x, &logStd);
  Var sigma = nn::exp(logStd);
  Var z = mu + nn::mul(sigma, tape.constant(noise));
  Var out = decodeVar(tape, z);

  VaeLossTerms t;
  // Squared 6D distance per joint, averaged over joints and batch.
  t.recon = nn::scale(nn::mseLoss(out, x), 6.0);
  // Σ_d ½(μ² + σ² − 1 − 2 log σ), averaged over the batch.
  Var klTerms = nn::addScalar(nn::square(mu) + nn::square(sigma) - nn::scale(logStd, 2.0), -1.0);
  t.kl = nn::scale(nn::sum(klTerms), 0.5 / n);

  // ‖AᵀA − I‖²_F for A = [a1 a2] of every decoded joint.
  const auto& sel = validitySelectors();
  Var a1 = nn::matmul(out, tape.constant(sel.pickA1));
  Var a2 = nn::matmul(out, tape.constant(sel.pickA2));
  Var group = tape.constant(sel.group);
  Var n1 = nn::addScalar(nn::matmul(nn::square(a1), group), -1.0);
  Var n2 = nn::addScalar(nn::matmul(nn::square(a2), group), -1.0);
  Var dot = nn::matmul(nn::mul(a1, a2), group);
  t.validity = nn::mean(nn::square(n1) + nn::square(n2) + nn::scale(nn::square(dot), 2.0));

  t.total = t.recon + nn::scale(t.kl, config_.betaKl) + nn::scale(t.validity, config_.lambdaRot);
  return t;
}

std::vector<double> PosePrior::train(const Eigen::MatrixXd& data, const PosePriorTrainConfig& config) {
  if (data.rows() == 0 || data.cols() != kBody6dDim) {
    throwInput("pose prior training data must be non-empty with 126 columns");
  }
  if (config.batchSize < 1 || config.steps < 0) {
    throwConfig("pose prior training needs a positive batch size and non-negative steps");
  }
  Rng rng(config.seed);
  std::vector<double> losses;
  losses.reserve(static_cast<size_t>(config.steps));
  const int rows = static_cast<int>(data.rows());
  Eigen::MatrixXd batch(config.batchSize, kBody6dDim);
  for (int step = 0; step < config.steps; ++step) {
    for (int i = 0; i < config.batchSize; ++i) {
      batch.row(i) = data.row(rng.uniformInt(0, rows - 1));
    }
    const Eigen::MatrixXd noise = rng.normalMatrix(config.batchSize, kLatentDim);
    Tape tape;
    const auto terms = loss(tape, batch, noise);
    tape.backward(terms.total);
    nn::adamStep(*store_, config.adam);
    const double value = terms.total.value()(0, 0);
    losses.push_back(value);
    if (config.log && config.logEvery > 0 && (step + 1) % config.logEvery == 0) {
      config.log(step + 1, value);
    }
  }
  trained_ = true;
  return losses;
}

LatentGaussian PosePrior::encode(const Eigen::VectorXd& body6d) const {
  requireTrained();
  if (body6d.size() != kBody6dDim) {
    throwInput("encode expects 126 values");
  }
  Tape tape(false);
  Var logStd;
  Var mu = encodeVar(tape, tape.constant(body6d.transpose()), &logStd);
  return {mu.value().row(0).transpose(), logStd.value().row(0).transpose()};
}

Eigen::MatrixXd PosePrior::encodeMeans(const Eigen::MatrixXd& body6d) const {
  requireTrained();
  if (body6d.cols() != kBody6dDim) {
    throwInput("encode expects 126 columns");
  }
  Tape tape(false);
  return encodeVar(tape, tape.constant(body6d), nullptr).value();
}

Eigen::VectorXd PosePrior::decode(const Eigen::VectorXd& z) const {
  return decodeBatch(z.transpose()).row(0).transpose();
}

Eigen::MatrixXd PosePrior::decodeBatch(const Eigen::MatrixXd& z) const {
  requireTrained();
  if (z.cols() != kLatentDim) {
    throwInput("decode expects 32 latent values");
  }
  if (!z.allFinite()) {
    throwInput("decode: latent is not finite");
  }
  Tape tape(false);
  return decodeVar(tape, tape.constant(z)).value();
}

Pose PosePrior::regularize(const Pose& pose) const {
  const Eigen::VectorXd body = decode(encode(pose.bodyRot6d()).mean);
  Pose out = Pose::fromRot6d(body, pose.rootRot6d());
  out.root = pose.root;
  return out;
}

Eigen::MatrixXd bodyMatrix(const std::vector<Pose>& poses) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(poses.size()), kBody6dDim);
  for (size_t i = 0; i < poses.size(); ++i) {
    m.row(static_cast<Eigen::Index>(i)) = poses[i].bodyRot6d().transpose();
  }
  return m;
}

} // namespace pas
