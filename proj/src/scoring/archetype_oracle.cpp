#include "pas/scoring/archetype_oracle.hpp"

#include <algorithm>
#include <numeric>

namespace pas {

double meanBodyGeodesic(const Pose& a, const Pose& b) {
  double total = 0.0;
  for (size_t j = 0; j < static_cast<size_t>(kBodyJointCount); ++j) {
    total += geodesicDistance(axisAngleToMatrix(a.body[j]), axisAngleToMatrix(b.body[j]));
  }
  return total / kBodyJointCount;
}

ArchetypeOracle::ArchetypeOracle() : ArchetypeOracle(defaultArchetypes()) {}

ArchetypeOracle::ArchetypeOracle(const std::vector<Archetype>& archetypes) {
  std::vector<size_t> order(archetypes.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](size_t a, size_t b) { return archetypes[a].name < archetypes[b].name; });
  for (size_t i : order) {
    names_.push_back(archetypes[i].name);
    std::vector<Matrix3d> rots;
    for (const auto& aa : archetypes[i].base.body) {
      rots.push_back(axisAngleToMatrix(aa));
    }
    centroids_.push_back(std::move(rots));
  }
}

std::vector<double> ArchetypeOracle::distances(const Pose& pose) const {
  std::vector<Matrix3d> rots;
  for (const auto& aa : pose.body) {
    rots.push_back(axisAngleToMatrix(aa));
  }
  std::vector<double> d(names_.size(), 0.0);
  for (size_t c = 0; c < names_.size(); ++c) {
    for (size_t j = 0; j < rots.size(); ++j) {
      d[c] += geodesicDistance(rots[j], centroids_[c][j]);
    }
    d[c] /= static_cast<double>(rots.size());
  }
  return d;
}

std::string ArchetypeOracle::classify(const Pose& pose) const {
  const auto d = distances(pose);
  size_t best = 0;
  for (size_t c = 1; c < d.size(); ++c) {
    if (d[c] < d[best]) {
      best = c;
    }
  }
  return names_[best];
}

} // namespace pas
