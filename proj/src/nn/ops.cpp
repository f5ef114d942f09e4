#include "pas/nn/ops.hpp"

#include "pas/core/errors.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace pas::nn {

namespace {

void requireSameShape(Var a, Var b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throwInput(
        std::string(op) + ": shape mismatch (" + std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
        " vs " + std::to_string(b.rows()) + "x" + std::to_string(b.cols()) + ")");
  }
}

template <typename Fn, typename DFn>
Var unary(Var a, Fn&& fn, DFn&& dfn) {
  Matrix out = a.value().unaryExpr(fn);
  return a.tape->record(std::move(out), {a}, [a, dfn](Tape& tape, const Matrix& g) {
    const Matrix& x = tape.value(a);
    tape.accumulate(a, g.cwiseProduct(x.unaryExpr(dfn)));
  });
}

} // namespace

Var matmul(Var a, Var b) {
  if (a.cols() != b.rows()) {
    throwInput(
        "matmul: inner dimensions differ (" + std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + ")");
  }
  Matrix out = a.value() * b.value();
  return a.tape->record(std::move(out), {a, b}, [a, b](Tape& tape, const Matrix& g) {
    if (tape.needsGrad(a)) {
      tape.accumulate(a, g * tape.value(b).transpose());
    }
    if (tape.needsGrad(b)) {
      tape.accumulate(b, tape.value(a).transpose() * g);
    }
  });
}

Var transpose(Var a) {
  Matrix out = a.value().transpose();
  return a.tape->record(std::move(out), {a}, [a](Tape& tape, const Matrix& g) {
    tape.accumulate(a, g.transpose());
  });
}

Var add(Var a, Var b) {
  requireSameShape(a, b, "add");
  Matrix out = a.value() + b.value();
  return a.tape->record(std::move(out), {a, b}, [a, b](Tape& tape, const Matrix& g) {
    tape.accumulate(a, g);
    tape.accumulate(b, g);
  });
}

Var sub(Var a, Var b) {
  requireSameShape(a, b, "sub");
  Matrix out = a.value() - b.value();
  return a.tape->record(std::move(out), {a, b}, [a, b](Tape& tape, const Matrix& g) {
    tape.accumulate(a, g);
    tape.accumulate(b, -g);
  });
}

Var mul(Var a, Var b) {
  requireSameShape(a, b, "mul");
  Matrix out = a.value().cwiseProduct(b.value());
  return a.tape->record(std::move(out), {a, b}, [a, b](Tape& tape, const Matrix& g) {
    if (tape.needsGrad(a)) {
      tape.accumulate(a, g.cwiseProduct(tape.value(b)));
    }
    if (tape.needsGrad(b)) {
      tape.accumulate(b, g.cwiseProduct(tape.value(a)));
    }
  });
}

Var scale(Var a, double s) {
  Matrix out = a.value() * s;
  return a.tape->record(std::move(out), {a}, [a, s](Tape& tape, const Matrix& g) { tape.accumulate(a, g * s); });
}

Var addScalar(Var a, double s) {
  Matrix out = a.value().array() + s;
  return a.tape->record(std::move(out), {a}, [a](Tape& tape, const Matrix& g) { tape.accumulate(a, g); });
}

Var addRow(Var a, Var row) {
  if (row.rows() != 1 || row.cols() != a.cols()) {
    throwInput("addRow: row must be 1x" + std::to_string(a.cols()));
  }
  Matrix out = a.value();
  out.rowwise() += row.value().row(0);
  return a.tape->record(std::move(out), {a, row}, [a, row](Tape& tape, const Matrix& g) {
    tape.accumulate(a, g);
    if (tape.needsGrad(row)) {
      tape.accumulate(row, g.colwise().sum());
    }
  });
}

Var leakyRelu(Var a, double slope) {
  return unary(
      a, [slope](double x) { return x > 0.0 ? x : slope * x; }, [slope](double x) { return x > 0.0 ? 1.0 : slope; });
}

Var gelu(Var a) {
  static constexpr double k = 0.7978845608028654; // sqrt(2/pi)
  static constexpr double c = 0.044715;
  const auto x = a.value().array();
  // tanh(y) = 1 - 2 / (exp(2y) + 1) keeps the whole expression on Eigen's vectorized exp.
  Matrix t = (1.0 - 2.0 / ((2.0 * k * (x + c * x.cube())).exp() + 1.0)).matrix();
  Matrix out = (0.5 * x * (1.0 + t.array())).matrix();
  return a.tape->record(std::move(out), {a}, [a, t = std::move(t)](Tape& tape, const Matrix& g) {
    const auto xv = tape.value(a).array();
    const auto tv = t.array();
    const auto d = 0.5 * (1.0 + tv) + 0.5 * xv * (1.0 - tv.square()) * k * (1.0 + 3.0 * c * xv.square());
    tape.accumulate(a, (g.array() * d).matrix());
  });
}

Var tanh(Var a) {
  return unary(
      a,
      [](double x) { return std::tanh(x); },
      [](double x) {
        const double t = std::tanh(x);
        return 1.0 - t * t;
      });
}

Var sigmoid(Var a) {
  return unary(
      a,
      [](double x) { return 1.0 / (1.0 + std::exp(-x)); },
      [](double x) {
        const double s = 1.0 / (1.0 + std::exp(-x));
        return s * (1.0 - s);
      });
}

Var exp(Var a) {
  return unary(
      a, [](double x) { return std::exp(x); }, [](double x) { return std::exp(x); });
}

Var square(Var a) {
  return unary(
      a, [](double x) { return x * x; }, [](double x) { return 2.0 * x; });
}

Var clamp(Var a, double lo, double hi) {
  return unary(
      a,
      [lo, hi](double x) { return std::min(std::max(x, lo), hi); },
      [lo, hi](double x) { return (x > lo && x < hi) ? 1.0 : 0.0; });
}

Var sum(Var a) {
  Matrix out(1, 1);
  out(0, 0) = a.value().sum();
  return a.tape->record(std::move(out), {a}, [a](Tape& tape, const Matrix& g) {
    const Matrix& x = tape.value(a);
    tape.accumulate(a, Matrix::Constant(x.rows(), x.cols(), g(0, 0)));
  });
}

Var mean(Var a) {
  return scale(sum(a), 1.0 / static_cast<double>(a.value().size()));
}

Var mseLoss(Var a, Var target) {
  return mean(square(sub(a, target)));
}

Var sliceRows(Var a, Eigen::Index start, Eigen::Index count) {
  if (start < 0 || count < 0 || start + count > a.rows()) {
    throwInput("sliceRows: range out of bounds");
  }
  Matrix out = a.value().middleRows(start, count);
  return a.tape->record(std::move(out), {a}, [a, start, count](Tape& tape, const Matrix& g) {
    Matrix full = Matrix::Zero(tape.value(a).rows(), tape.value(a).cols());
    full.middleRows(start, count) = g;
    tape.accumulate(a, full);
  });
}

Var sliceCols(Var a, Eigen::Index start, Eigen::Index count) {
  if (start < 0 || count < 0 || start + count > a.cols()) {
    throwInput("sliceCols: range out of bounds");
  }
  Matrix out = a.value().middleCols(start, count);
  return a.tape->record(std::move(out), {a}, [a, start, count](Tape& tape, const Matrix& g) {
    Matrix full = Matrix::Zero(tape.value(a).rows(), tape.value(a).cols());
    full.middleCols(start, count) = g;
    tape.accumulate(a, full);
  });
}

Var concatRows(std::span<const Var> parts) {
  if (parts.empty()) {
    throwInput("concatRows: no inputs");
  }
  Eigen::Index rows = 0;
  const Eigen::Index cols = parts[0].cols();
  for (const Var& p : parts) {
    if (p.cols() != cols) {
      throwInput("concatRows: column counts differ");
    }
    rows += p.rows();
  }
  Matrix out(rows, cols);
  Eigen::Index offset = 0;
  for (const Var& p : parts) {
    out.middleRows(offset, p.rows()) = p.value();
    offset += p.rows();
  }
  std::vector<Var> inputs(parts.begin(), parts.end());
  return parts[0].tape->record(std::move(out), parts, [inputs](Tape& tape, const Matrix& g) {
    Eigen::Index off = 0;
    for (const Var& p : inputs) {
      const Eigen::Index r = tape.value(p).rows();
      if (tape.needsGrad(p)) {
        tape.accumulate(p, g.middleRows(off, r));
      }
      off += r;
    }
  });
}

Var concatCols(std::span<const Var> parts) {
  if (parts.empty()) {
    throwInput("concatCols: no inputs");
  }
  Eigen::Index cols = 0;
  const Eigen::Index rows = parts[0].rows();
  for (const Var& p : parts) {
    if (p.rows() != rows) {
      throwInput("concatCols: row counts differ");
    }
    cols += p.cols();
  }
  Matrix out(rows, cols);
  Eigen::Index offset = 0;
  for (const Var& p : parts) {
    out.middleCols(offset, p.cols()) = p.value();
    offset += p.cols();
  }
  std::vector<Var> inputs(parts.begin(), parts.end());
  return parts[0].tape->record(std::move(out), parts, [inputs](Tape& tape, const Matrix& g) {
    Eigen::Index off = 0;
    for (const Var& p : inputs) {
      const Eigen::Index c = tape.value(p).cols();
      if (tape.needsGrad(p)) {
        tape.accumulate(p, g.middleCols(off, c));
      }
      off += c;
    }
  });
}

Var gatherRows(Var a, std::vector<int> index) {
  const Matrix& x = a.value();
  Matrix out(static_cast<Eigen::Index>(index.size()), x.cols());
  for (size_t i = 0; i < index.size(); ++i) {
    if (index[i] < 0 || index[i] >= x.rows()) {
      throwInput("gatherRows: index out of range");
    }
    out.row(static_cast<Eigen::Index>(i)) = x.row(index[i]);
  }
  return a.tape->record(std::move(out), {a}, [a, index = std::move(index)](Tape& tape, const Matrix& g) {
    Matrix full = Matrix::Zero(tape.value(a).rows(), tape.value(a).cols());
    for (size_t i = 0; i < index.size(); ++i) {
      full.row(index[i]) += g.row(static_cast<Eigen::Index>(i));
    }
    tape.accumulate(a, full);
  });
}

Var sparseMap(Var a, std::shared_ptr<const SparseMatrix> map, Eigen::Index outRows, Eigen::Index outCols) {
  const Matrix& x = a.value();
  if (map->cols() != x.size() || map->rows() != outRows * outCols) {
    throwInput("sparseMap: map dimensions do not match input/output sizes");
  }
  Matrix out(outRows, outCols);
  Eigen::Map<Vector>(out.data(), out.size()) = (*map) * Eigen::Map<const Vector>(x.data(), x.size());
  return a.tape->record(std::move(out), {a}, [a, map](Tape& tape, const Matrix& g) {
    const Matrix& xv = tape.value(a);
    Matrix da(xv.rows(), xv.cols());
    Eigen::Map<Vector>(da.data(), da.size()) = map->transpose() * Eigen::Map<const Vector>(g.data(), g.size());
    tape.accumulate(a, da);
  });
}

Var sparseMatmul(std::shared_ptr<const SparseMatrix> s, Var a) {
  const Matrix& x = a.value();
  if (s->cols() != x.rows()) {
    throwInput("sparseMatmul: " + std::to_string(s->cols()) + " columns against " + std::to_string(x.rows()) + " rows");
  }
  Matrix out = (*s) * x;
  return a.tape->record(std::move(out), {a}, [a, s](Tape& tape, const Matrix& g) {
    tape.accumulate(a, s->transpose() * g);
  });
}

Var layerNorm(Var x, Var gain, Var shift, double eps) {
  const Matrix& xv = x.value();
  const Eigen::Index n = xv.rows();
  const Eigen::Index d = xv.cols();
  if (gain.rows() != 1 || gain.cols() != d || shift.rows() != 1 || shift.cols() != d) {
    throwInput("layerNorm: gain/shift must be 1x" + std::to_string(d));
  }
  Matrix normalized(n, d);
  Vector invStd(n);
  for (Eigen::Index r = 0; r < n; ++r) {
    const double mu = xv.row(r).mean();
    const double var = (xv.row(r).array() - mu).square().mean();
    invStd[r] = 1.0 / std::sqrt(var + eps);
    normalized.row(r) = (xv.row(r).array() - mu) * invStd[r];
  }
  Matrix out = normalized.array().rowwise() * gain.value().row(0).array();
  out.rowwise() += shift.value().row(0);
  return x.tape->record(
      std::move(out),
      {x, gain, shift},
      [x, gain, shift, normalized = std::move(normalized), invStd = std::move(invStd)](Tape& tape, const Matrix& g) {
        if (tape.needsGrad(gain)) {
          tape.accumulate(gain, g.cwiseProduct(normalized).colwise().sum());
        }
        if (tape.needsGrad(shift)) {
          tape.accumulate(shift, g.colwise().sum());
        }
        if (tape.needsGrad(x)) {
          const Matrix dNorm = g.array().rowwise() * tape.value(gain).row(0).array();
          Matrix dx(dNorm.rows(), dNorm.cols());
          for (Eigen::Index r = 0; r < dNorm.rows(); ++r) {
            const double meanD = dNorm.row(r).mean();
            const double meanDN = dNorm.row(r).cwiseProduct(normalized.row(r)).mean();
            dx.row(r) = (dNorm.row(r).array() - meanD - normalized.row(r).array() * meanDN) * invStd[r];
          }
          tape.accumulate(x, dx);
        }
      });
}

Var rowNormalize(Var a, double eps) {
  const Matrix& x = a.value();
  Vector norms = x.rowwise().norm().array() + eps;
  Matrix out = x.array().colwise() / norms.array();
  Matrix y = out;
  return a.tape->record(std::move(out), {a}, [a, y = std::move(y), norms = std::move(norms)](Tape& tape, const Matrix& g) {
    const Vector dots = y.cwiseProduct(g).rowwise().sum();
    Matrix da = (g - (y.array().colwise() * dots.array()).matrix()).array().colwise() / norms.array();
    tape.accumulate(a, da);
  });
}

Var logSoftmaxRows(Var a) {
  const Matrix& x = a.value();
  Matrix out(x.rows(), x.cols());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const double m = x.row(r).maxCoeff();
    const double lse = m + std::log((x.row(r).array() - m).exp().sum());
    out.row(r) = x.row(r).array() - lse;
  }
  Matrix probs = out.array().exp();
  return a.tape->record(std::move(out), {a}, [a, probs = std::move(probs)](Tape& tape, const Matrix& g) {
    const Vector rowSums = g.rowwise().sum();
    tape.accumulate(a, g - (probs.array().colwise() * rowSums.array()).matrix());
  });
}

Var attention(Var q, Var k, Var v, int batch, int heads, bool causal) {
  const Matrix& qv = q.value();
  const Matrix& kv = k.value();
  const Matrix& vv = v.value();
  const Eigen::Index d = qv.cols();
  if (heads <= 0 || d % heads != 0) {
    throwConfig("attention: width " + std::to_string(d) + " not divisible by " + std::to_string(heads) + " heads");
  }
  if (kv.cols() != d || vv.cols() != d || kv.rows() != vv.rows()) {
    throwInput("attention: key/value shapes do not match query width");
  }
  if (batch <= 0 || qv.rows() % batch != 0 || kv.rows() % batch != 0) {
    throwInput("attention: rows not divisible by batch size");
  }
  const Eigen::Index lq = qv.rows() / batch;
  const Eigen::Index lk = kv.rows() / batch;
  if (causal && lq != lk) {
    throwInput("attention: causal mask requires equal query and key lengths");
  }
  const Eigen::Index dk = d / heads;
  const double invSqrt = 1.0 / std::sqrt(static_cast<double>(dk));

  Matrix out(qv.rows(), d);
  std::vector<Matrix> probs(static_cast<size_t>(batch * heads));
  for (int b = 0; b < batch; ++b) {
    for (int h = 0; h < heads; ++h) {
      const auto qb = qv.block(b * lq, h * dk, lq, dk);
      const auto kb = kv.block(b * lk, h * dk, lk, dk);
      const auto vb = vv.block(b * lk, h * dk, lk, dk);
      Matrix scores = (qb * kb.transpose()) * invSqrt;
      for (Eigen::Index i = 0; i < lq; ++i) {
        const Eigen::Index visible = causal ? i + 1 : lk;
        const double m = scores.row(i).head(visible).maxCoeff();
        double total = 0.0;
        for (Eigen::Index j = 0; j < lk; ++j) {
          const double e = j < visible ? std::exp(scores(i, j) - m) : 0.0;
          scores(i, j) = e;
          total += e;
        }
        scores.row(i) /= total;
      }
      out.block(b * lq, h * dk, lq, dk) = scores * vb;
      probs[static_cast<size_t>(b * heads + h)] = std::move(scores);
    }
  }
  return q.tape->record(
      std::move(out),
      {q, k, v},
      [q, k, v, batch, heads, lq, lk, dk, invSqrt, probs = std::move(probs)](Tape& tape, const Matrix& g) {
        const Matrix& qv2 = tape.value(q);
        const Matrix& kv2 = tape.value(k);
        const Matrix& vv2 = tape.value(v);
        Matrix dq = Matrix::Zero(qv2.rows(), qv2.cols());
        Matrix dkm = Matrix::Zero(kv2.rows(), kv2.cols());
        Matrix dv = Matrix::Zero(vv2.rows(), vv2.cols());
        for (int b = 0; b < batch; ++b) {
          for (int h = 0; h < heads; ++h) {
            const Matrix& p = probs[static_cast<size_t>(b * heads + h)];
            const auto gb = g.block(b * lq, h * dk, lq, dk);
            const auto qb = qv2.block(b * lq, h * dk, lq, dk);
            const auto kb = kv2.block(b * lk, h * dk, lk, dk);
            const auto vb = vv2.block(b * lk, h * dk, lk, dk);
            dv.block(b * lk, h * dk, lk, dk) = p.transpose() * gb;
            const Matrix dp = gb * vb.transpose();
            const Vector rowDot = p.cwiseProduct(dp).rowwise().sum();
            const Matrix ds = (p.array() * (dp.array().colwise() - rowDot.array())).matrix() * invSqrt;
            dq.block(b * lq, h * dk, lq, dk) = ds * kb;
            dkm.block(b * lk, h * dk, lk, dk) = ds.transpose() * qb;
          }
        }
        tape.accumulate(q, dq);
        tape.accumulate(k, dkm);
        tape.accumulate(v, dv);
      });
}

} // namespace pas::nn
