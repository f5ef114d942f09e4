#pragma once

#include "pas/kinematics/skeleton.hpp"

#include <span>
#include <vector>

namespace pas {

template <typename T>
struct JointStatesT {
  std::vector<Vector3<T>> positions;
  std::vector<Matrix3<T>> orientations;
};

using JointStates = JointStatesT<double>;

/// world_orient(j) = world_orient(parent) · local(j);
/// world_pos(j) = world_pos(parent) + world_orient(parent) · offset(j).
template <typename T>
JointStatesT<T> forwardKinematics(
    const Skeleton& skeleton,
    std::span<const Matrix3<T>> localRotations,
    const Vector3<T>& rootTranslation) {
  const int n = skeleton.jointCount();
  if (static_cast<int>(localRotations.size()) != n) {
    throwInput(
        "forward kinematics: " + std::to_string(localRotations.size()) + " rotations for a " + std::to_string(n) +
        "-joint skeleton");
  }
  JointStatesT<T> states;
  states.positions.resize(static_cast<size_t>(n));
  states.orientations.resize(static_cast<size_t>(n));
  for (int j = 0; j < n; ++j) {
    const int p = skeleton.parents[static_cast<size_t>(j)];
    const auto idx = static_cast<size_t>(j);
    if (p < 0) {
      states.orientations[idx] = localRotations[idx];
      states.positions[idx] = rootTranslation;
    } else {
      const auto pIdx = static_cast<size_t>(p);
      states.orientations[idx] = states.orientations[pIdx] * localRotations[idx];
      states.positions[idx] =
          states.positions[pIdx] + states.orientations[pIdx] * skeleton.offsets[idx].template cast<T>();
    }
  }
  return states;
}

JointStates forwardKinematics(
    const Skeleton& skeleton,
    const Pose& pose,
    const Vector3d& rootTranslation = Vector3d::Zero());

} // namespace pas
