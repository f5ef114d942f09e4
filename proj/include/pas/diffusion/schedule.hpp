#pragma once

#include <Eigen/Core>

#include <string>
#include <vector>

namespace pas {

enum class ScheduleKind { Cosine, Linear };

/// "cosine" or "linear"; anything else is a ConfigError.
ScheduleKind parseScheduleKind(const std::string& name);
std::string scheduleKindName(ScheduleKind kind);

/// Noise schedule over steps t = 1..T. Index 0 is the clean signal (ᾱ_0 = 1, β_0 = 0).
class DiffusionSchedule {
 public:
  DiffusionSchedule() = default;
  DiffusionSchedule(ScheduleKind kind, std::vector<double> betas);

  [[nodiscard]] int steps() const {
    return static_cast<int>(betas_.size()) - 1;
  }
  [[nodiscard]] ScheduleKind kind() const {
    return kind_;
  }
  [[nodiscard]] double beta(int t) const;
  [[nodiscard]] double alphaBar(int t) const;

  /// Strided subsequence of `count` timesteps ending at T, ascending: round(k·T/count), k = 1..count.
  [[nodiscard]] std::vector<int> respaced(int count) const;

 private:
  ScheduleKind kind_ = ScheduleKind::Cosine;
  std::vector<double> betas_;
  std::vector<double> alphaBars_;
};

/// Cosine (s = 0.008, β clipped at 0.999) or linear β from 1e-4 to 0.02. Requires T ≥ 2.
DiffusionSchedule makeSchedule(int steps, ScheduleKind kind = ScheduleKind::Cosine);

/// x_t = √ᾱ_t · x0 + √(1 − ᾱ_t) · noise.
Eigen::MatrixXd qSample(const DiffusionSchedule& schedule, const Eigen::MatrixXd& x0, int t, const Eigen::MatrixXd& noise);

/// Coefficients of one reverse step from ᾱ_t to ᾱ_prev: mean = c0·x̂0 + ct·x_t, variance β̃.
struct PosteriorStep {
  double c0 = 0.0;
  double ct = 0.0;
  double variance = 0.0;
};
PosteriorStep posteriorStep(double alphaBarT, double alphaBarPrev);

} // namespace pas
