#include "pas/core/errors.hpp"
#include "pas/core/random.hpp"
#include "pas/nn/checkpoint.hpp"
#include "pas/nn/grad_check.hpp"
#include "pas/nn/layers.hpp"
#include "pas/nn/optim.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <sstream>

using namespace pas;
using namespace pas::nn;

TEST(DenseForward, IdentityWeights) {
  const Tensor w({3, 3}, {1, 0, 0, 0, 1, 0, 0, 0, 1});
  const Tensor b({3}, {0, 0, 0});
  const Tensor x({3}, {1, 2, 3});
  EXPECT_EQ(denseForward(x, w, b).data(), (std::vector<double>{1, 2, 3}));
}

TEST(DenseForward, ZeroWeightsGiveBias) {
  const Tensor w({4, 2});
  const Tensor b({2}, {5, 5});
  const Tensor x({4}, {0.3, -7, 2, 9});
  EXPECT_EQ(denseForward(x, w, b).data(), (std::vector<double>{5, 5}));
}

TEST(DenseForward, HandMultiply) {
  const Tensor w({2, 2}, {1, 2, 3, 4});
  const Tensor b({2}, {0, 0});
  const Tensor x({1, 2}, {1, 1});
  const Tensor y = denseForward(x, w, b);
  EXPECT_EQ(y.dims(), (std::vector<int>{1, 2}));
  EXPECT_EQ(y.data(), (std::vector<double>{4, 6}));
}

TEST(DenseForward, RejectsMismatch) {
  const Tensor w({2, 2}, {1, 2, 3, 4});
  EXPECT_THROW(denseForward(Tensor({3}), w, Tensor({2})), InputError);
  EXPECT_THROW(denseForward(Tensor({2}), w, Tensor({3})), InputError);
}

TEST(Tensor, RejectsLengthMismatch) {
  EXPECT_THROW(Tensor({2, 2}, {1, 2, 3}), InputError);
}

TEST(GradCheck, QuadraticIsExact) {
  ParamStore store;
  store.add("w", {1}).value(0, 0) = 3.0;
  Parameter& w = store.get("w");
  double analytic = 0.0;
  {
    Tape tape;
    tape.backward(sum(square(tape.param(w))));
    analytic = w.grad(0, 0);
  }
  EXPECT_DOUBLE_EQ(analytic, 6.0);
  store.zeroGrad();
  const double err = gradCheck([&](Tape& tape) { return sum(square(tape.param(w))); }, store, 1e-4);
  EXPECT_LT(err, 1e-8);
}

TEST(GradCheck, DenseMse) {
  Rng rng(11);
  ParamStore store;
  const Dense dense = addDense(store, "d", 5, 3, rng);
  const Matrix x = rng.normalMatrix(4, 5);
  const Matrix y = rng.normalMatrix(4, 3);
  const double err = gradCheck(
      [&](Tape& tape) { return mseLoss(dense(tape.constant(x)), tape.constant(y)); }, store, 1e-4);
  EXPECT_LT(err, 1e-4);
}

TEST(GradCheck, AttentionBlock) {
  Rng rng(5);
  ParamStore store;
  const AttentionLayer attn = addAttention(store, "a", 8, 2, rng);
  const LayerNormLayer norm = addLayerNorm(store, "ln", 8);
  const Matrix x = rng.normalMatrix(2 * 5, 8);
  const Matrix target = rng.normalMatrix(2 * 5, 8);
  auto loss = [&](Tape& tape) {
    Var h = tape.constant(x);
    h = h + attn.selfAttention(norm(h), 2, true);
    return mseLoss(gelu(h), tape.constant(target));
  };
  EXPECT_LT(gradCheck(loss, store, 1e-4), 1e-3);
}

TEST(GradCheck, CrossAttentionAndShapeOps) {
  Rng rng(9);
  ParamStore store;
  const AttentionLayer attn = addCrossAttention(store, "x", 4, 6, 2, rng);
  const Dense head = addDense(store, "h", 4, 3, rng);
  const Matrix x = rng.normalMatrix(3 * 2, 4);
  const Matrix ctx = rng.normalMatrix(3 * 5, 6);
  auto loss = [&](Tape& tape) {
    Var h = attn.crossAttention(tape.constant(x), tape.constant(ctx), 3);
    Var g = gatherRows(h, {1, 3, 5, 1});
    Var z = rowNormalize(tanh(head(g)));
    Var both = concatCols({z, sigmoid(sliceCols(z, 0, 2))});
    Var ls = logSoftmaxRows(concatRows({both, exp(clamp(both, -0.5, 0.5))}));
    return mean(ls);
  };
  EXPECT_LT(gradCheck(loss, store, 1e-4), 1e-3);
}

TEST(GradCheck, SparseMatmul) {
  Rng rng(10);
  ParamStore store;
  const Dense d = addDense(store, "d", 3, 4, rng);
  auto s = std::make_shared<SparseMatrix>(5, 6);
  s->insert(0, 1) = 0.5;
  s->insert(2, 5) = -1.0;
  s->insert(4, 0) = 2.0;
  s->insert(4, 3) = 0.25;
  const Matrix x = rng.normalMatrix(6, 3);
  auto loss = [&](Tape& tape) { return mean(square(sparseMatmul(s, d(tape.constant(x))))); };
  Tape probe(false);
  const Matrix dense = Matrix(*s) * d(probe.constant(x)).value();
  EXPECT_LT((sparseMatmul(s, d(probe.constant(x))).value() - dense).norm(), 1e-14);
  EXPECT_LT(gradCheck(loss, store, 1e-4), 1e-3);
}

TEST(GradCheck, RejectsBadEpsAndNonFinite) {
  ParamStore store;
  store.add("w", {1}).value(0, 0) = 1.0;
  Parameter& w = store.get("w");
  auto f = [&](Tape& tape) { return sum(tape.param(w)); };
  EXPECT_THROW(gradCheck(f, store, 1e-2), ConfigError);
  EXPECT_THROW(gradCheck(f, store, 1e-8), ConfigError);
  auto bad = [&](Tape& tape) { return scale(sum(tape.param(w)), std::numeric_limits<double>::infinity()); };
  EXPECT_THROW(gradCheck(bad, store, 1e-4), NumericError);
}

TEST(Attention, SingleTokenIsValueProjection) {
  Rng rng(3);
  ParamStore store;
  const AttentionLayer attn = addAttention(store, "a", 4, 2, rng);
  const Matrix x = rng.normalMatrix(1, 4);
  const Tensor out = attentionForward(attn, Tensor::fromMatrix(x), true);
  Tape tape(false);
  const Matrix expected = attn.output(attn.value(tape.constant(x))).value();
  EXPECT_LT((out.toMatrix() - expected).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Attention, CausalMaskIgnoresFutureTokens) {
  Rng rng(4);
  ParamStore store;
  const AttentionLayer attn = addAttention(store, "a", 6, 3, rng);
  Matrix x = rng.normalMatrix(5, 6);
  const Matrix before = attentionForward(attn, Tensor::fromMatrix(x), true).toMatrix();
  x.row(3) += rng.normalMatrix(1, 6);
  const Matrix after = attentionForward(attn, Tensor::fromMatrix(x), true).toMatrix();
  EXPECT_EQ(before.topRows(3), after.topRows(3));
  EXPECT_NE(before.row(3), after.row(3));
}

TEST(Attention, IdentityProjectionsEqualTokens) {
  ParamStore store;
  Rng rng(1);
  AttentionLayer attn = addAttention(store, "a", 3, 1, rng);
  for (Dense* d : {&attn.query, &attn.key, &attn.value, &attn.output}) {
    d->weight->value = Matrix::Identity(3, 3);
    d->bias->value.setZero();
  }
  Matrix x(2, 3);
  x << 0.5, -1.0, 2.0, 0.5, -1.0, 2.0;
  const Matrix out = attentionForward(attn, Tensor::fromMatrix(x), false).toMatrix();
  EXPECT_LT((out - x).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Attention, WidthNotDivisibleByHeads) {
  ParamStore store;
  Rng rng(1);
  EXPECT_THROW(addAttention(store, "a", 6, 4, rng), ConfigError);
  Tape tape(false);
  Var q = tape.constant(Matrix::Ones(2, 6));
  EXPECT_THROW(attention(q, q, q, 1, 4, true), ConfigError);
}

TEST(Sinusoidal, ZeroValueAlternates) {
  const Vector e = sinusoidalEmbed(0.0, 8);
  for (int i = 0; i < 8; ++i) {
    EXPECT_EQ(e[i], i % 2 == 0 ? 0.0 : 1.0);
  }
}

TEST(Sinusoidal, HighestFrequencyPeriodic) {
  const Vector a = sinusoidalEmbed(0.0, 6);
  const Vector b = sinusoidalEmbed(2.0 * std::numbers::pi, 6);
  EXPECT_NEAR(a[0], b[0], 1e-12);
  EXPECT_NEAR(a[1], b[1], 1e-12);
}

TEST(Sinusoidal, DirectFormula) {
  const Vector e = sinusoidalEmbed(1.0, 4);
  EXPECT_DOUBLE_EQ(e[0], std::sin(1.0));
  EXPECT_DOUBLE_EQ(e[1], std::cos(1.0));
  EXPECT_NEAR(e[2], std::sin(1e-2), 1e-15);
  EXPECT_NEAR(e[3], std::cos(1e-2), 1e-15);
}

TEST(Sinusoidal, OddDimRejected) {
  EXPECT_THROW(sinusoidalEmbed(1.0, 5), ConfigError);
}

TEST(Adam, ZeroGradientLeavesParameters) {
  Rng rng(2);
  ParamStore store;
  addDense(store, "d", 3, 2, rng);
  std::vector<Matrix> before;
  for (const auto& [name, p] : store) {
    before.push_back(p.value);
  }
  adamStep(store, AdamConfig{});
  size_t i = 0;
  for (const auto& [name, p] : store) {
    EXPECT_EQ(p.value, before[i++]);
  }
  EXPECT_EQ(store.step(), 1);
}

TEST(Adam, MinimizesQuadratic) {
  ParamStore store;
  Parameter& w = store.add("w", {2});
  w.value << 3.0, -2.0;
  AdamConfig cfg;
  cfg.learningRate = 0.05;
  for (int i = 0; i < 500; ++i) {
    Tape tape;
    tape.backward(sum(square(tape.param(w))));
    adamStep(store, cfg);
  }
  EXPECT_LT(w.value.norm(), 1e-2);
}

TEST(Forward, DeterministicGivenParameters) {
  Rng rng(8);
  ParamStore store;
  const Dense d = addDense(store, "d", 4, 4, rng);
  const Matrix x = rng.normalMatrix(3, 4);
  Tape t1(false);
  Tape t2(false);
  EXPECT_EQ(gelu(d(t1.constant(x))).value(), gelu(d(t2.constant(x))).value());
}

TEST(Checkpoint, ByteLayout) {
  ParamStore store;
  Parameter& p = store.add("ab", {2});
  p.value << 1.0, -2.0;
  std::ostringstream out;
  writeCheckpoint(out, toCheckpoint(store));
  const std::string bytes = out.str();
  // magic(4) version(4) count(4) namelen(2) name(2) rank(1) dim(4) payload(8)
  ASSERT_EQ(bytes.size(), 29u);
  EXPECT_EQ(bytes.substr(0, 4), "PFCK");
  EXPECT_EQ(bytes[4], 1);
  EXPECT_EQ(bytes[8], 1);
  EXPECT_EQ(bytes[12], 2);
  EXPECT_EQ(bytes.substr(14, 2), "ab");
  EXPECT_EQ(bytes[16], 1);
  EXPECT_EQ(bytes[17], 2);
  // 1.0f = 0x3f800000 little-endian
  EXPECT_EQ(static_cast<unsigned char>(bytes[21]), 0x00);
  EXPECT_EQ(static_cast<unsigned char>(bytes[24]), 0x3f);
  EXPECT_EQ(static_cast<unsigned char>(bytes[23]), 0x80);
  // -2.0f = 0xc0000000
  EXPECT_EQ(static_cast<unsigned char>(bytes[28]), 0xc0);
}

TEST(Checkpoint, RoundTripToFloatPrecision) {
  Rng rng(21);
  ParamStore a;
  addDense(a, "m.l0", 7, 5, rng);
  addLayerNorm(a, "m.ln", 5);
  std::stringstream buf;
  writeCheckpoint(buf, toCheckpoint(a));
  ParamStore b;
  Rng other(99);
  addDense(b, "m.l0", 7, 5, other);
  addLayerNorm(b, "m.ln", 5);
  loadCheckpoint(b, readCheckpoint(buf));
  for (const auto& [name, p] : a) {
    EXPECT_EQ(p.value.cast<float>(), b.get(name).value.cast<float>()) << name;
  }
}

TEST(Checkpoint, MissingParameterIsModelStateError) {
  ParamStore a;
  a.add("x", {2});
  ParamStore b;
  b.add("y", {2});
  EXPECT_THROW(loadCheckpoint(b, toCheckpoint(a)), ModelStateError);
  ParamStore c;
  c.add("x", {3});
  EXPECT_THROW(loadCheckpoint(c, toCheckpoint(a)), ModelStateError);
}

TEST(Checkpoint, BadMagicIsInputError) {
  std::istringstream in("XXXX\x01\x00\x00\x00");
  EXPECT_THROW(readCheckpoint(in), InputError);
}

TEST(ParamStore, UniqueNames) {
  ParamStore store;
  store.add("a", {1});
  EXPECT_THROW(store.add("a", {1}), ConfigError);
  EXPECT_THROW(store.get("b"), ModelStateError);
}
