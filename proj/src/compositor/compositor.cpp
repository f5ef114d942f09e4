#include "pas/compositor/compositor.hpp"

#include "pas/core/errors.hpp"
#include "pas/core/random.hpp"
#include "pas/nn/checkpoint.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

namespace pas {

using nn::SparseMatrix;
using nn::Tape;
using nn::Var;

namespace {

constexpr const char* kMetaName = "compositor.meta.config";
constexpr int kMetaSize = 8;
constexpr int kTimeWidth = 64;
// w ∈ [0, 1] is spread over the same range as timesteps before the sinusoidal embedding.
constexpr double kRateEmbedScale = 1000.0;

/// Sparse operators for a batch of square grids stored item-major, row-major within an item.
struct GridOps {
  int batch = 0;
  int size = 0;
  std::vector<std::shared_ptr<const SparseMatrix>> shifts; // 8 off-center 3×3 taps
  std::vector<int> itemOfRow;
};

GridOps makeGridOps(int batch, int size) {
  GridOps g;
  g.batch = batch;
  g.size = size;
  const int cells = size * size;
  const int n = batch * cells;
  for (int dy = -1; dy <= 1; ++dy) {
    for (int dx = -1; dx <= 1; ++dx) {
      if (dx == 0 && dy == 0) {
        continue;
      }
      std::vector<Eigen::Triplet<double>> trips;
      trips.reserve(static_cast<size_t>(n));
      for (int b = 0; b < batch; ++b) {
        for (int y = 0; y < size; ++y) {
          for (int x = 0; x < size; ++x) {
            const int sx = x + dx;
            const int sy = y + dy;
            if (sx >= 0 && sy >= 0 && sx < size && sy < size) {
              trips.emplace_back(b * cells + y * size + x, b * cells + sy * size + sx, 1.0);
            }
          }
        }
      }
      auto m = std::make_shared<SparseMatrix>(n, n);
      m->setFromTriplets(trips.begin(), trips.end());
      g.shifts.push_back(std::move(m));
    }
  }
  g.itemOfRow.resize(static_cast<size_t>(n));
  for (int r = 0; r < n; ++r) {
    g.itemOfRow[static_cast<size_t>(r)] = r / cells;
  }
  return g;
}

/// 2×2 average pooling from size to size/2.
std::shared_ptr<const SparseMatrix> poolOperator(int batch, int size) {
  const int half = size / 2;
  std::vector<Eigen::Triplet<double>> trips;
  for (int b = 0; b < batch; ++b) {
    for (int y = 0; y < size; ++y) {
      for (int x = 0; x < size; ++x) {
        trips.emplace_back(b * half * half + (y / 2) * half + x / 2, b * size * size + y * size + x, 0.25);
      }
    }
  }
  auto m = std::make_shared<SparseMatrix>(batch * half * half, batch * size * size);
  m->setFromTriplets(trips.begin(), trips.end());
  return m;
}

/// Nearest-neighbor upsampling from size/2 to size.
std::shared_ptr<const SparseMatrix> upsampleOperator(int batch, int size) {
  const int half = size / 2;
  std::vector<Eigen::Triplet<double>> trips;
  for (int b = 0; b < batch; ++b) {
    for (int y = 0; y < size; ++y) {
      for (int x = 0; x < size; ++x) {
        trips.emplace_back(b * size * size + y * size + x, b * half * half + (y / 2) * half + x / 2, 1.0);
      }
    }
  }
  auto m = std::make_shared<SparseMatrix>(batch * size * size, batch * half * half);
  m->setFromTriplets(trips.begin(), trips.end());
  return m;
}

/// 3×3 same-padding convolution as a dense layer over the nine shifted copies.
Var conv3x3(const nn::Dense& layer, Var x, const GridOps& g) {
  std::vector<Var> taps;
  taps.reserve(9);
  size_t k = 0;
  for (int i = 0; i < 9; ++i) {
    taps.push_back(i == 4 ? x : nn::sparseMatmul(g.shifts[k++], x));
  }
  return layer(nn::concatCols(taps));
}

double lerp(double a, double b, double t) {
  return a + t * (b - a);
}

} // namespace

Raster downsampleNearest(const Raster& raster, double factor) {
  if (!(factor >= 1.0)) {
    throwInput("downsample factor must be at least 1");
  }
  const int w = std::max(1, static_cast<int>(std::lround(raster.width() / factor)));
  const int h = std::max(1, static_cast<int>(std::lround(raster.height() / factor)));
  Raster out(w, h);
  for (int y = 0; y < h; ++y) {
    const int sy = std::min(raster.height() - 1, static_cast<int>((y + 0.5) * raster.height() / h));
    for (int x = 0; x < w; ++x) {
      const int sx = std::min(raster.width() - 1, static_cast<int>((x + 0.5) * raster.width() / w));
      for (int c = 0; c < 4; ++c) {
        out.at(x, y, c) = raster.at(sx, sy, c);
      }
    }
  }
  return out;
}

Raster resizeBilinear(const Raster& raster, int width, int height) {
  if (width == raster.width() && height == raster.height()) {
    return raster;
  }
  Raster out(width, height);
  const double sxScale = static_cast<double>(raster.width()) / width;
  const double syScale = static_cast<double>(raster.height()) / height;
  for (int y = 0; y < height; ++y) {
    const double fy = std::clamp((y + 0.5) * syScale - 0.5, 0.0, raster.height() - 1.0);
    const int y0 = static_cast<int>(fy);
    const int y1 = std::min(y0 + 1, raster.height() - 1);
    const double ty = fy - y0;
    for (int x = 0; x < width; ++x) {
      const double fx = std::clamp((x + 0.5) * sxScale - 0.5, 0.0, raster.width() - 1.0);
      const int x0 = static_cast<int>(fx);
      const int x1 = std::min(x0 + 1, raster.width() - 1);
      const double tx = fx - x0;
      for (int c = 0; c < 4; ++c) {
        const double top = lerp(raster.at(x0, y0, c), raster.at(x1, y0, c), tx);
        const double bottom = lerp(raster.at(x0, y1, c), raster.at(x1, y1, c), tx);
        out.at(x, y, c) = lerp(top, bottom, ty);
      }
    }
  }
  return out;
}

Raster augmentDownsample(const Raster& raster, double w) {
  if (!(w >= 0.0 && w <= 1.0)) {
    throwInput("downsample rate w must lie in [0, 1]");
  }
  const double factor = 1.0 + w * (kMaxDownsampleFactor - 1.0);
  return resizeBilinear(downsampleNearest(raster, factor), raster.width(), raster.height());
}

Eigen::VectorXd poolToGrid(const Raster& raster, int channel) {
  if (raster.width() != kSceneSize || raster.height() != kSceneSize) {
    throwInput("conditioning renders must be 64x64");
  }
  Eigen::VectorXd out = Eigen::VectorXd::Zero(kGridCells);
  for (int y = 0; y < kSceneSize; ++y) {
    for (int x = 0; x < kSceneSize; ++x) {
      out[(y / kPatchSize) * kLatentGrid + x / kPatchSize] += raster.at(x, y, channel);
    }
  }
  return out / static_cast<double>(kPatchSize * kPatchSize);
}

ConditioningBundle makeBundle(const SceneAutoencoder& autoencoder, const Raster& avatar, const Raster& gray, double w,
                              const TextEmbedding& text) {
  const Raster aug = augmentDownsample(avatar, w);
  ConditioningBundle b;
  b.avatar = autoencoder.encode(RgbImage::fromRaster(aug));
  b.alpha = poolToGrid(aug, 3);
  Raster premul(gray.width(), gray.height());
  for (int y = 0; y < gray.height(); ++y) {
    for (int x = 0; x < gray.width(); ++x) {
      premul.at(x, y, 0) = gray.at(x, y, 0) * gray.at(x, y, 3);
    }
  }
  b.gray = poolToGrid(premul, 0);
  b.w = w;
  b.text = text;
  return b;
}

CompositorModel::CompositorModel(const CompositorConfig& config, uint64_t seed)
    : config_(config), schedule_(makeSchedule(config.timesteps, config.schedule)),
      store_(std::make_unique<nn::ParamStore>()) {
  if (config.latentChannels < 1 || config.base < 1 || config.bottleneck < 1) {
    throwConfig("compositor widths must be positive");
  }
  if (config.bottleneck % config.heads != 0) {
    throwConfig("compositor bottleneck width must be divisible by the head count");
  }
  const int C = config.latentChannels;
  const int b = config.base;
  const int d = config.bottleneck;
  Rng rng(mixSeed(seed, 0xc0de));
  time1_ = nn::addDense(*store_, "compositor.time1", kTimeWidth, kTimeWidth, rng);
  time2_ = nn::addDense(*store_, "compositor.time2", kTimeWidth, kTimeWidth, rng);
  timeHigh_ = nn::addDense(*store_, "compositor.time_high", kTimeWidth, b, rng);
  timeLow_ = nn::addDense(*store_, "compositor.time_low", kTimeWidth, d, rng);
  wProj_ = nn::addDense(*store_, "compositor.w_proj", kTextWidth, kTextWidth, rng);
  convIn_ = nn::addDense(*store_, "compositor.conv_in", 9 * (2 * C + 2), b, rng);
  normA_ = nn::addLayerNorm(*store_, "compositor.norm_a", b);
  convA_ = nn::addDense(*store_, "compositor.conv_a", 9 * b, b, rng);
  down_ = nn::addDense(*store_, "compositor.down", b, d, rng);
  for (int i = 0; i < 2; ++i) {
    const std::string p = "compositor.block" + std::to_string(i);
    Block blk;
    blk.attnNorm = nn::addLayerNorm(*store_, p + ".attn_norm", d);
    blk.attn = nn::addCrossAttention(*store_, p + ".attn", d, kTextWidth, config.heads, rng);
    blk.convNorm = nn::addLayerNorm(*store_, p + ".conv_norm", d);
    blk.conv = nn::addDense(*store_, p + ".conv", 9 * d, d, rng);
    blocks_.push_back(blk);
  }
  up_ = nn::addDense(*store_, "compositor.up", d, b, rng);
  merge_ = nn::addDense(*store_, "compositor.merge", 2 * b, b, rng);
  normC_ = nn::addLayerNorm(*store_, "compositor.norm_c", b);
  convC_ = nn::addDense(*store_, "compositor.conv_c", 9 * b, b, rng);
  normOut_ = nn::addLayerNorm(*store_, "compositor.norm_out", b);
  out_ = nn::addDense(*store_, "compositor.out", b, C, rng, 0.01);
}

CompositorModel CompositorModel::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw ModelStateError("cannot open compositor checkpoint: " + path.string());
  }
  const auto entries = nn::readCheckpoint(in);
  const nn::CheckpointEntry* meta = nullptr;
  for (const auto& e : entries) {
    if (e.name == kMetaName) {
      meta = &e;
    }
  }
  if (meta == nullptr || meta->values.size() != kMetaSize) {
    throw ModelStateError("checkpoint has no compositor configuration: " + path.string());
  }
  const auto& v = meta->values;
  CompositorConfig c;
  c.latentChannels = static_cast<int>(v[0]);
  c.base = static_cast<int>(v[1]);
  c.bottleneck = static_cast<int>(v[2]);
  c.heads = static_cast<int>(v[3]);
  c.timesteps = static_cast<int>(v[4]);
  c.schedule = v[5] == 0.0f ? ScheduleKind::Cosine : ScheduleKind::Linear;
  c.conditioned = v[6] != 0.0f;
  c.clampBound = static_cast<double>(v[7]);
  CompositorModel model(c);
  nn::loadCheckpoint(*model.store_, entries, "compositor.");
  model.trained_ = true;
  return model;
}

void CompositorModel::save(const std::filesystem::path& path) const {
  if (!trained_) {
    throw ModelStateError("compositor is untrained");
  }
  auto entries = nn::toCheckpoint(*store_);
  const auto& c = config_;
  entries.push_back({kMetaName,
                     {kMetaSize},
                     {static_cast<float>(c.latentChannels), static_cast<float>(c.base),
                      static_cast<float>(c.bottleneck), static_cast<float>(c.heads), static_cast<float>(c.timesteps),
                      static_cast<float>(c.schedule == ScheduleKind::Cosine ? 0 : 1),
                      static_cast<float>(c.conditioned ? 1 : 0), static_cast<float>(c.clampBound)}});
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throwInput("cannot write checkpoint: " + path.string());
  }
  nn::writeCheckpoint(out, entries);
}

Eigen::MatrixXd CompositorModel::channelStack(const Eigen::MatrixXd& zt, const ConditioningBundle& bundle) const {
  const int C = config_.latentChannels;
  if (zt.rows() != kGridCells || zt.cols() != C || bundle.avatar.values.rows() != kGridCells ||
      bundle.avatar.channels() != C || bundle.alpha.size() != kGridCells || bundle.gray.size() != kGridCells) {
    throwInput("assemble: latent and conditioning grids must all be 16x16 with matching channels");
  }
  if (!(bundle.w >= 0.0 && bundle.w <= 1.0)) {
    throwInput("assemble: w must lie in [0, 1]");
  }
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(kGridCells, 2 * C + 2);
  out.leftCols(C) = zt;
  if (config_.conditioned) {
    out.middleCols(C, C) = bundle.avatar.values;
    out.col(2 * C) = bundle.alpha;
    out.col(2 * C + 1) = bundle.gray;
  }
  return out;
}

Var CompositorModel::context(Tape& tape, const Eigen::MatrixXd& text, std::span<const double> w) const {
  const auto B = static_cast<Eigen::Index>(w.size());
  if (text.rows() != B * (kMaxTokens + 1) || text.cols() != kTextWidth) {
    throwInput("compositor text context must be (B*17)x64");
  }
  std::vector<double> scaled(w.begin(), w.end());
  for (auto& v : scaled) {
    v *= kRateEmbedScale;
  }
  Var wTok = wProj_(tape.constant(nn::sinusoidalRows(scaled, kTextWidth)));
  // Interleave per item: 17 text rows then the item's w token.
  std::vector<int> order;
  order.reserve(static_cast<size_t>(B * kContextTokens));
  for (Eigen::Index b = 0; b < B; ++b) {
    for (int k = 0; k <= kMaxTokens; ++k) {
      order.push_back(static_cast<int>(b * (kMaxTokens + 1) + k));
    }
    order.push_back(static_cast<int>(B * (kMaxTokens + 1) + b));
  }
  return nn::gatherRows(nn::concatRows({tape.constant(text), wTok}), std::move(order));
}

DenoiserInput CompositorModel::assemble(const Eigen::MatrixXd& zt, const ConditioningBundle& bundle) const {
  if (bundle.text.tokens.rows() != kMaxTokens || bundle.text.tokens.cols() != kTextWidth ||
      bundle.text.pooled.size() != kTextWidth) {
    throwInput("assemble: text embedding has the wrong shape");
  }
  DenoiserInput in;
  in.channels = channelStack(zt, bundle);
  Eigen::MatrixXd text(kMaxTokens + 1, kTextWidth);
  text.topRows(kMaxTokens) = bundle.text.tokens;
  text.row(kMaxTokens) = bundle.text.pooled.transpose();
  Tape tape(false);
  const double w = bundle.w;
  in.context = context(tape, text, std::span<const double>(&w, 1)).value();
  return in;
}

Var CompositorModel::predict(Tape& tape, const Eigen::MatrixXd& channels, const Eigen::MatrixXd& text,
                             std::span<const double> w, std::span<const int> timesteps) const {
  const int B = static_cast<int>(timesteps.size());
  if (B < 1 || static_cast<int>(w.size()) != B) {
    throwInput("compositor predict needs one timestep and one w per item");
  }
  if (channels.rows() != Eigen::Index(B) * kGridCells || channels.cols() != inputChannels()) {
    throwInput("compositor input must be (B*256)x(2C+2)");
  }
  const GridOps high = makeGridOps(B, kLatentGrid);
  const GridOps low = makeGridOps(B, kLatentGrid / 2);

  std::vector<double> tv(timesteps.begin(), timesteps.end());
  Var temb = time2_(nn::gelu(time1_(tape.constant(nn::sinusoidalRows(tv, kTimeWidth)))));
  Var ctx = context(tape, text, w);

  Var h = nn::add(conv3x3(convIn_, tape.constant(channels), high), nn::gatherRows(timeHigh_(temb), high.itemOfRow));
  h = nn::add(h, conv3x3(convA_, nn::gelu(normA_(h)), high));
  const Var skip = h;

  Var d = nn::add(down_(nn::sparseMatmul(poolOperator(B, kLatentGrid), h)), nn::gatherRows(timeLow_(temb), low.itemOfRow));
  for (const auto& blk : blocks_) {
    d = nn::add(d, blk.attn.crossAttention(blk.attnNorm(d), ctx, B));
    d = nn::add(d, conv3x3(blk.conv, nn::gelu(blk.convNorm(d)), low));
  }

  Var u = up_(nn::sparseMatmul(upsampleOperator(B, kLatentGrid), d));
  h = merge_(nn::concatCols({u, skip}));
  h = nn::add(h, conv3x3(convC_, nn::gelu(normC_(h)), high));
  return out_(nn::gelu(normOut_(h)));
}

Var CompositorModel::loss(Tape& tape, const CompositorBatch& batch) const {
  if (batch.timesteps.empty()) {
    throwInput("compositor loss needs a non-empty batch");
  }
  Var pred = predict(tape, batch.channels, batch.text, batch.w, batch.timesteps);
  return nn::mseLoss(pred, tape.constant(batch.noise));
}

CompositorBatch CompositorModel::prepareBatch(const SceneAutoencoder& autoencoder,
                                              const std::vector<SyntheticScene>& scenes,
                                              const std::vector<LatentGrid>& latents,
                                              const std::vector<TextEmbedding>& texts, std::span<const int> indices,
                                              Rng& rng) const {
  if (indices.empty()) {
    throwInput("compositor batch must not be empty");
  }
  const auto B = static_cast<Eigen::Index>(indices.size());
  const int C = config_.latentChannels;
  CompositorBatch batch;
  batch.channels.resize(B * kGridCells, inputChannels());
  batch.text.resize(B * (kMaxTokens + 1), kTextWidth);
  batch.noise.resize(B * kGridCells, C);
  for (Eigen::Index i = 0; i < B; ++i) {
    const auto idx = static_cast<size_t>(indices[static_cast<size_t>(i)]);
    const int t = rng.uniformInt(1, schedule_.steps());
    const double w = rng.uniform(0.0, 1.0);
    const Eigen::MatrixXd eps = rng.normalMatrix(kGridCells, C);
    batch.timesteps.push_back(t);
    batch.w.push_back(w);
    const Eigen::MatrixXd zt = qSample(schedule_, latents[idx].values, t, eps);
    const ConditioningBundle bundle = makeBundle(autoencoder, scenes[idx].avatar, scenes[idx].gray, w, texts[idx]);
    batch.channels.middleRows(i * kGridCells, kGridCells) = channelStack(zt, bundle);
    batch.text.middleRows(i * (kMaxTokens + 1), kMaxTokens) = texts[idx].tokens;
    batch.text.row(i * (kMaxTokens + 1) + kMaxTokens) = texts[idx].pooled.transpose();
    batch.noise.middleRows(i * kGridCells, kGridCells) = eps;
  }
  return batch;
}

std::vector<double> CompositorModel::train(const SceneAutoencoder& autoencoder,
                                           const std::vector<SyntheticScene>& scenes,
                                           const CompositorTrainConfig& config, const TextEncoder& encoder) {
  if (!autoencoder.trained()) {
    throw ModelStateError("compositor training needs a trained autoencoder");
  }
  if (autoencoder.config().channels != config_.latentChannels) {
    throwConfig("autoencoder and compositor latent channels differ");
  }
  if (scenes.empty()) {
    throwInput("compositor training needs scenes");
  }
  if (config.batchSize < 1 || config.steps < 0) {
    throwConfig("compositor training needs a positive batch and non-negative steps");
  }
  std::vector<RgbImage> images;
  std::vector<TextEmbedding> texts;
  for (const auto& s : scenes) {
    images.push_back(s.image);
    texts.push_back(encoder.encode(s.caption));
  }
  const Eigen::MatrixXd all = autoencoder.encodeMany(images);
  std::vector<LatentGrid> latents;
  for (size_t i = 0; i < scenes.size(); ++i) {
    latents.push_back({all.middleRows(static_cast<Eigen::Index>(i) * kGridCells, kGridCells)});
  }
  Rng rng(config.seed);
  std::vector<double> losses;
  std::vector<int> indices(static_cast<size_t>(config.batchSize));
  for (int step = 0; step < config.steps; ++step) {
    for (auto& i : indices) {
      i = rng.uniformInt(0, static_cast<int>(scenes.size()) - 1);
    }
    const CompositorBatch batch = prepareBatch(autoencoder, scenes, latents, texts, indices, rng);
    Tape tape;
    Var l = loss(tape, batch);
    tape.backward(l);
    if (config.gradClip > 0.0) {
      nn::clipGradNorm(*store_, config.gradClip);
    }
    nn::adamStep(*store_, config.adam);
    const double value = l.value()(0, 0);
    if (!std::isfinite(value)) {
      throw NumericError("compositor loss became non-finite at step " + std::to_string(step + 1));
    }
    losses.push_back(value);
    if (config.log && config.logEvery > 0 && (step + 1) % config.logEvery == 0) {
      config.log(step + 1, value);
    }
  }
  trained_ = true;
  return losses;
}

std::vector<RgbImage> CompositorModel::generate(const SceneAutoencoder& autoencoder,
                                                const std::vector<ConditioningBundle>& bundles, int steps,
                                                Rng& rng) const {
  if (!trained_) {
    throw ModelStateError("compositor is untrained; train it or load a checkpoint");
  }
  if (bundles.empty()) {
    throwInput("generate needs at least one conditioning bundle");
  }
  const auto B = static_cast<Eigen::Index>(bundles.size());
  const int C = config_.latentChannels;
  std::vector<double> w;
  Eigen::MatrixXd text(B * (kMaxTokens + 1), kTextWidth);
  for (Eigen::Index i = 0; i < B; ++i) {
    const auto& b = bundles[static_cast<size_t>(i)];
    if (b.text.tokens.rows() != kMaxTokens || b.text.pooled.size() != kTextWidth) {
      throwInput("generate: text embedding has the wrong shape");
    }
    w.push_back(b.w);
    text.middleRows(i * (kMaxTokens + 1), kMaxTokens) = b.text.tokens;
    text.row(i * (kMaxTokens + 1) + kMaxTokens) = b.text.pooled.transpose();
  }
  const std::vector<int> ts = schedule_.respaced(steps == 0 ? schedule_.steps() : steps);
  Eigen::MatrixXd x = rng.normalMatrix(B * kGridCells, C);
  Eigen::MatrixXd channels(B * kGridCells, inputChannels());
  for (auto k = static_cast<int>(ts.size()) - 1; k >= 0; --k) {
    const int t = ts[static_cast<size_t>(k)];
    const double ab = schedule_.alphaBar(t);
    const double abPrev = k > 0 ? schedule_.alphaBar(ts[static_cast<size_t>(k - 1)]) : 1.0;
    for (Eigen::Index i = 0; i < B; ++i) {
      channels.middleRows(i * kGridCells, kGridCells) =
          channelStack(x.middleRows(i * kGridCells, kGridCells), bundles[static_cast<size_t>(i)]);
    }
    const std::vector<int> tvec(static_cast<size_t>(B), t);
    Tape tape(false);
    const Eigen::MatrixXd eps = predict(tape, channels, text, w, tvec).value();
    const Eigen::MatrixXd x0 =
        ((x - std::sqrt(1.0 - ab) * eps) / std::sqrt(ab)).cwiseMax(-config_.clampBound).cwiseMin(config_.clampBound);
    const PosteriorStep post = posteriorStep(ab, abPrev);
    const Eigen::MatrixXd z = rng.normalMatrix(B * kGridCells, C);
    x = post.c0 * x0 + post.ct * x + std::sqrt(post.variance) * z;
    if (!x.allFinite()) {
      throw NumericError("compositor sampler produced non-finite values at t = " + std::to_string(t));
    }
  }
  std::vector<RgbImage> out;
  for (Eigen::Index i = 0; i < B; ++i) {
    out.push_back(autoencoder.decode({x.middleRows(i * kGridCells, kGridCells)}));
  }
  return out;
}

RgbImage CompositorModel::generate(const SceneAutoencoder& autoencoder, const ConditioningBundle& bundle, int steps,
                                   Rng& rng) const {
  return generate(autoencoder, std::vector<ConditioningBundle>{bundle}, steps, rng).front();
}

RgbImage pasteBack(const RgbImage& generated, const Raster& avatar) {
  if (avatar.width() != kSceneSize || avatar.height() != kSceneSize ||
      generated.pixels.rows() != kSceneSize * kSceneSize || generated.pixels.cols() != 3) {
    throwInput("paste_back: generated image and avatar must both be 64x64");
  }
  RgbImage out = generated;
  for (int y = 0; y < kSceneSize; ++y) {
    for (int x = 0; x < kSceneSize; ++x) {
      const double a = avatar.at(x, y, 3);
      for (int c = 0; c < 3; ++c) {
        double& v = out.pixels(y * kSceneSize + x, c);
        v = a == 1.0 ? avatar.at(x, y, c) : a * avatar.at(x, y, c) + (1.0 - a) * v;
      }
    }
  }
  return out;
}

double avatarRegionError(const RgbImage& image, const Raster& avatar) {
  double total = 0.0;
  int count = 0;
  for (int y = 0; y < kSceneSize; ++y) {
    for (int x = 0; x < kSceneSize; ++x) {
      if (avatar.at(x, y, 3) == 1.0) {
        for (int c = 0; c < 3; ++c) {
          total += std::abs(image.pixels(y * kSceneSize + x, c) - avatar.at(x, y, c));
        }
        ++count;
      }
    }
  }
  return count == 0 ? 0.0 : total / (3.0 * count);
}

} // namespace pas
