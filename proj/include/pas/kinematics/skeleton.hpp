#pragma once

#include "pas/kinematics/rotation.hpp"

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace pas {

inline constexpr int kBodyJointCount = 21;
inline constexpr int kJointCount = kBodyJointCount + 1;

/// Kinematic tree. Joint 0 is the root; every parent index precedes its child.
struct Skeleton {
  std::vector<std::string> names;
  std::vector<int> parents;
  /// Offset from the parent joint in the parent's frame, meters. Unused for the root.
  std::vector<Vector3d> offsets;

  [[nodiscard]] int jointCount() const {
    return static_cast<int>(parents.size());
  }

  /// Throws InputError unless the tree has one root, parents precede children and sizes agree.
  void validate() const;

  /// Maximum pairwise joint distance in the rest pose.
  [[nodiscard]] double height() const;

  [[nodiscard]] Skeleton scaled(double factor) const;

  /// Index of the named joint, or -1.
  [[nodiscard]] int find(const std::string& name) const;

  /// 22-joint tree with SMPL body topology and hand-authored, left-right symmetric offsets (y up, +x left, +z forward).
  static const Skeleton& canonical();
};

/// Parses `index parent_index name ox oy oz` lines; '#' starts a comment.
Skeleton parseSkeleton(std::istream& in);
Skeleton loadSkeleton(const std::filesystem::path& path);
void writeSkeleton(std::ostream& out, const Skeleton& skeleton);

/// Text of the shipped canonical skeleton file.
const char* canonicalSkeletonText();

/// 21 body-joint rotations plus the root orientation, all axis-angle.
struct Pose {
  std::vector<AxisAngle> body = std::vector<AxisAngle>(kBodyJointCount, AxisAngle::Zero());
  AxisAngle root = AxisAngle::Zero();

  static Pose rest() {
    return {};
  }

  /// Local rotation matrices, root first (kJointCount entries).
  [[nodiscard]] std::vector<Matrix3d> localRotations() const;
  static Pose fromLocalRotations(std::span<const Matrix3d> rotations);

  /// 21×6D body stacked joint-major into 126 values.
  [[nodiscard]] Eigen::VectorXd bodyRot6d() const;
  [[nodiscard]] Rotation6D rootRot6d() const;
  static Pose fromRot6d(const Eigen::VectorXd& body6d, const Rotation6D& root6d);

  bool operator==(const Pose&) const = default;
};

} // namespace pas
