#include "pas/kinematics/rotation.hpp"

#include <algorithm>
#include <numbers>

namespace pas {

void requireRotation(const Matrix3d& m, double tol) {
  if (!m.allFinite()) {
    throwInput("rotation matrix has non-finite entries");
  }
  if (orthonormalityError(m) > tol) {
    throwInput("matrix is not orthonormal");
  }
  if (m.determinant() <= 0.0) {
    throwInput("matrix is a reflection, not a rotation");
  }
}

Rotation6D matrixToRot6d(const Matrix3d& m) {
  requireRotation(m);
  Rotation6D r;
  r << m.col(0), m.col(1);
  return r;
}

Matrix3d axisAngleToMatrix(const AxisAngle& aa) {
  const double angle = aa.norm();
  if (angle < 1e-12) {
    // first-order Rodrigues around the identity
    Matrix3d k;
    k << 0.0, -aa.z(), aa.y(), aa.z(), 0.0, -aa.x(), -aa.y(), aa.x(), 0.0;
    return Matrix3d::Identity() + k;
  }
  return Eigen::AngleAxisd(angle, aa / angle).toRotationMatrix();
}

AxisAngle matrixToAxisAngle(const Matrix3d& m) {
  requireRotation(m);
  const Eigen::Quaterniond q(m);
  // Eigen's AngleAxis from a quaternion yields angle in [0, π]
  const Eigen::AngleAxisd aa(q);
  if (aa.angle() < 1e-15) {
    return AxisAngle::Zero();
  }
  return canonicalAxisAngle(aa.axis() * aa.angle());
}

AxisAngle canonicalAxisAngle(const AxisAngle& aa) {
  const double angle = aa.norm();
  if (angle <= std::numbers::pi) {
    return aa;
  }
  const Vector3d axis = aa / angle;
  double wrapped = std::fmod(angle, 2.0 * std::numbers::pi);
  if (wrapped > std::numbers::pi) {
    return -axis * (2.0 * std::numbers::pi - wrapped);
  }
  return axis * wrapped;
}

Rotation6D axisAngleToRot6d(const AxisAngle& aa) {
  const Matrix3d m = axisAngleToMatrix(aa);
  Rotation6D r;
  r << m.col(0), m.col(1);
  return r;
}

AxisAngle rot6dToAxisAngle(const Rotation6D& r) {
  return matrixToAxisAngle(rot6dToMatrix<double>(r));
}

double geodesicDistance(const Matrix3d& a, const Matrix3d& b) {
  const double c = ((a.transpose() * b).trace() - 1.0) / 2.0;
  return std::acos(std::clamp(c, -1.0, 1.0));
}

Matrix3d rotationX(double angle) {
  return Eigen::AngleAxisd(angle, Vector3d::UnitX()).toRotationMatrix();
}

Matrix3d rotationY(double angle) {
  return Eigen::AngleAxisd(angle, Vector3d::UnitY()).toRotationMatrix();
}

Matrix3d rotationZ(double angle) {
  return Eigen::AngleAxisd(angle, Vector3d::UnitZ()).toRotationMatrix();
}

} // namespace pas
