#pragma once

#include "pas/kinematics/forward_kinematics.hpp"
#include "pas/render/raster.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <vector>

namespace pas {

/// Orthographic camera looking down −z with y up; the principal point is the image center.
struct Camera {
  int width = 64;
  int height = 64;
  /// World units (meters) per pixel.
  double scale = 0.032;
  /// World point that projects to the principal point.
  Vector3d center = Vector3d::Zero();

  void validate() const;
  /// Continuous pixel coordinates (u right, v down); pixel (i, j) spans [i, i+1) × [j, j+1).
  [[nodiscard]] Eigen::Vector2d project(const Vector3d& p) const;
};

using Color = std::array<double, 3>;

/// Per-bone colors (indexed by the child joint of each bone; entry 0 colors the root disc).
struct AvatarStyle {
  std::vector<Color> colors = std::vector<Color>(kJointCount, Color{0.5, 0.5, 0.5});
  /// Capsule diameter in pixels.
  double boneThickness = 4.0;
  /// Joint disc radius in pixels.
  double jointRadius = 2.5;

  void validate(int jointCount) const;
  /// Same geometry with every color set to 0.5 gray.
  [[nodiscard]] AvatarStyle gray() const;
  /// Deterministic palette with a shirt, trouser and skin color.
  static AvatarStyle random(uint64_t seed);
};

/// Text style file: `key = value` lines, '#' comments. Keys: bone_thickness, joint_radius,
/// color.default and color.<joint_name>, colors given as three floats in [0, 1].
AvatarStyle parseStyle(std::istream& in, const Skeleton& skeleton);
AvatarStyle loadStyle(const std::filesystem::path& path, const Skeleton& skeleton);
void writeStyle(std::ostream& out, const AvatarStyle& style, const Skeleton& skeleton);

/// Capsules from each joint to its parent plus joint discs, coverage clamp(r + 0.5 − d, 0, 1)
/// at pixel centers. Each pixel takes the color of its highest-coverage primitive.
Raster renderAvatar(const Skeleton& skeleton, const JointStates& states, const AvatarStyle& style, const Camera& camera = {});
/// renderAvatar with all colors 0.5.
Raster renderGrayBody(const Skeleton& skeleton, const JointStates& states, const Camera& camera = {}, const AvatarStyle& geometry = {});

} // namespace pas
