#pragma once

#include "pas/data/archetypes.hpp"
#include "pas/kinematics/skeleton.hpp"

#include <string>
#include <vector>

namespace pas {

/// Mean geodesic distance over the 21 body joints.
double meanBodyGeodesic(const Pose& a, const Pose& b);

/// Nearest-centroid classifier over archetype base poses.
class ArchetypeOracle {
 public:
  /// Centroids from the built-in archetypes.
  ArchetypeOracle();
  explicit ArchetypeOracle(const std::vector<Archetype>& archetypes);

  /// Closest archetype name; ties go to the lexicographically first name.
  [[nodiscard]] std::string classify(const Pose& pose) const;
  [[nodiscard]] std::vector<double> distances(const Pose& pose) const;
  [[nodiscard]] const std::vector<std::string>& names() const {
    return names_;
  }

 private:
  std::vector<std::string> names_;
  std::vector<std::vector<Matrix3d>> centroids_;
};

} // namespace pas
