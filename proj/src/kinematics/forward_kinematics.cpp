#include "pas/kinematics/forward_kinematics.hpp"

namespace pas {

JointStates forwardKinematics(const Skeleton& skeleton, const Pose& pose, const Vector3d& rootTranslation) {
  if (skeleton.jointCount() != kJointCount) {
    throwInput(
        "pose has " + std::to_string(kJointCount) + " joints but skeleton has " +
        std::to_string(skeleton.jointCount()));
  }
  const std::vector<Matrix3d> local = pose.localRotations();
  return forwardKinematics<double>(skeleton, std::span<const Matrix3d>(local), rootTranslation);
}

} // namespace pas
