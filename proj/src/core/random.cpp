#include "pas/core/random.hpp"

namespace pas {

uint64_t mixSeed(uint64_t seed, uint64_t stream) {
  // splitmix64 finalizer over the combined value
  uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

Rng Rng::derive(uint64_t seed, uint64_t stream) {
  return Rng(mixSeed(seed, stream));
}

double Rng::uniform(double lo, double hi) {
  std::uniform_real_distribution<double> dist(lo, hi);
  return dist(engine_);
}

double Rng::normal() {
  return normal_(engine_);
}

int Rng::uniformInt(int lo, int hi) {
  std::uniform_int_distribution<int> dist(lo, hi);
  return dist(engine_);
}

bool Rng::bernoulli(double p) {
  return uniform() < p;
}

Eigen::MatrixXd Rng::normalMatrix(Eigen::Index rows, Eigen::Index cols) {
  Eigen::MatrixXd m(rows, cols);
  // fill row-major so the draw order does not depend on Eigen's storage order
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) {
      m(r, c) = normal();
    }
  }
  return m;
}

} // namespace pas
