#include "pas/diffusion/schedule.hpp"

#include "pas/core/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace pas {

ScheduleKind parseScheduleKind(const std::string& name) {
  if (name == "cosine") {
    return ScheduleKind::Cosine;
  }
  if (name == "linear") {
    return ScheduleKind::Linear;
  }
  throwConfig("unknown schedule kind '" + name + "' (expected cosine or linear)");
}

std::string scheduleKindName(ScheduleKind kind) {
  return kind == ScheduleKind::Cosine ? "cosine" : "linear";
}

DiffusionSchedule::DiffusionSchedule(ScheduleKind kind, std::vector<double> betas) : kind_(kind) {
  betas_.reserve(betas.size() + 1);
  betas_.push_back(0.0);
  betas_.insert(betas_.end(), betas.begin(), betas.end());
  alphaBars_.resize(betas_.size());
  alphaBars_[0] = 1.0;
  for (size_t t = 1; t < betas_.size(); ++t) {
    alphaBars_[t] = alphaBars_[t - 1] * (1.0 - betas_[t]);
  }
}

double DiffusionSchedule::beta(int t) const {
  if (t < 0 || t > steps()) {
    throwInput("timestep " + std::to_string(t) + " outside [0, " + std::to_string(steps()) + "]");
  }
  return betas_[static_cast<size_t>(t)];
}

double DiffusionSchedule::alphaBar(int t) const {
  if (t < 0 || t > steps()) {
    throwInput("timestep " + std::to_string(t) + " outside [0, " + std::to_string(steps()) + "]");
  }
  return alphaBars_[static_cast<size_t>(t)];
}

std::vector<int> DiffusionSchedule::respaced(int count) const {
  const int T = steps();
  if (count < 1 || count > T) {
    throwConfig("sampling steps must be in [1, " + std::to_string(T) + "]");
  }
  std::vector<int> ts;
  ts.reserve(static_cast<size_t>(count));
  for (int k = 1; k <= count; ++k) {
    const int t = static_cast<int>(std::llround(static_cast<double>(k) * T / count));
    if (ts.empty() || t > ts.back()) {
      ts.push_back(t);
    }
  }
  return ts;
}

DiffusionSchedule makeSchedule(int steps, ScheduleKind kind) {
  if (steps < 2) {
    throwConfig("diffusion needs at least 2 steps");
  }
  std::vector<double> betas(static_cast<size_t>(steps));
  if (kind == ScheduleKind::Linear) {
    for (int i = 0; i < steps; ++i) {
      betas[static_cast<size_t>(i)] = 1e-4 + (0.02 - 1e-4) * i / (steps - 1);
    }
  } else {
    constexpr double s = 0.008;
    auto f = [&](double t) {
      const double c = std::cos((t / steps + s) / (1.0 + s) * std::numbers::pi / 2.0);
      return c * c;
    };
    const double f0 = f(0.0);
    for (int t = 1; t <= steps; ++t) {
      const double prev = f(t - 1.0) / f0;
      const double cur = f(static_cast<double>(t)) / f0;
      betas[static_cast<size_t>(t - 1)] = std::min(1.0 - cur / prev, 0.999);
    }
  }
  return DiffusionSchedule(kind, std::move(betas));
}

Eigen::MatrixXd qSample(const DiffusionSchedule& schedule, const Eigen::MatrixXd& x0, int t, const Eigen::MatrixXd& noise) {
  if (x0.rows() != noise.rows() || x0.cols() != noise.cols()) {
    throwInput("q_sample: noise dims do not match x0");
  }
  if (t < 1 || t > schedule.steps()) {
    throwInput("q_sample: timestep outside [1, T]");
  }
  const double ab = schedule.alphaBar(t);
  return std::sqrt(ab) * x0 + std::sqrt(1.0 - ab) * noise;
}

PosteriorStep posteriorStep(double alphaBarT, double alphaBarPrev) {
  const double beta = 1.0 - alphaBarT / alphaBarPrev;
  PosteriorStep p;
  p.c0 = std::sqrt(alphaBarPrev) * beta / (1.0 - alphaBarT);
  p.ct = std::sqrt(1.0 - beta) * (1.0 - alphaBarPrev) / (1.0 - alphaBarT);
  p.variance = beta * (1.0 - alphaBarPrev) / (1.0 - alphaBarT);
  return p;
}

} // namespace pas
