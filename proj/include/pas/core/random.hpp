#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <random>

namespace pas {

/// Deterministic random stream. All randomness in the project flows through
/// instances of this class, seeded from a single user-provided seed.
class Rng {
 public:
  explicit Rng(uint64_t seed = 0) : engine_(seed) {}

  /// Independent child stream derived from this stream's seed and a tag.
  static Rng derive(uint64_t seed, uint64_t stream);

  double uniform(double lo = 0.0, double hi = 1.0);
  double normal();
  int uniformInt(int lo, int hi); // inclusive bounds
  bool bernoulli(double p);

  Eigen::MatrixXd normalMatrix(Eigen::Index rows, Eigen::Index cols);

  std::mt19937_64& engine() {
    return engine_;
  }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

uint64_t mixSeed(uint64_t seed, uint64_t stream);

} // namespace pas
