#pragma once

#include "pas/core/errors.hpp"

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <cmath>

namespace pas {

template <typename T>
using Vector3 = Eigen::Matrix<T, 3, 1>;
template <typename T>
using Matrix3 = Eigen::Matrix<T, 3, 3>;
template <typename T>
using Vector6 = Eigen::Matrix<T, 6, 1>;

using Vector3d = Vector3<double>;
using Matrix3d = Matrix3<double>;
using Vector6d = Vector6<double>;

/// First two columns of a rotation matrix, stacked (a1, a2).
using Rotation6D = Vector6d;
/// Rotation axis scaled by angle in radians.
using AxisAngle = Vector3d;

namespace detail {

inline double scalarValue(double v) {
  return v;
}

template <typename T>
double scalarValue(const T& v) {
  return scalarValue(v.value());
}

} // namespace detail

/// Gram-Schmidt decoding of a 6D rotation: b1 = a1/|a1|, b2 = normalized(a2 - (b1·a2) b1),
/// b3 = b1 × b2. Throws DegenerateRotationError when |a1| or the orthogonal part of a2 is below 1e-8.
template <typename T>
Matrix3<T> rot6dToMatrix(const Vector6<T>& r) {
  const Vector3<T> a1 = r.template head<3>();
  const Vector3<T> a2 = r.template tail<3>();
  const T n1 = a1.norm();
  if (detail::scalarValue(n1) < 1e-8) {
    throw DegenerateRotationError("6D rotation has a zero first column");
  }
  const Vector3<T> b1 = a1 / n1;
  const Vector3<T> ortho = a2 - b1.dot(a2) * b1;
  const T n2 = ortho.norm();
  if (detail::scalarValue(n2) < 1e-8) {
    throw DegenerateRotationError("6D rotation columns are parallel");
  }
  const Vector3<T> b2 = ortho / n2;
  Matrix3<T> m;
  m.col(0) = b1;
  m.col(1) = b2;
  m.col(2) = b1.cross(b2);
  return m;
}

/// Largest absolute entry of RᵀR - I.
template <typename T>
double orthonormalityError(const Matrix3<T>& m) {
  const Matrix3d md = m.unaryExpr([](const T& v) { return detail::scalarValue(v); });
  return (md.transpose() * md - Matrix3d::Identity()).cwiseAbs().maxCoeff();
}

/// Throws InputError unless R is orthonormal within tol and has positive determinant.
void requireRotation(const Matrix3d& m, double tol = 1e-6);

Rotation6D matrixToRot6d(const Matrix3d& m);
Matrix3d axisAngleToMatrix(const AxisAngle& aa);
/// Returns the canonical axis-angle with angle in [0, π].
AxisAngle matrixToAxisAngle(const Matrix3d& m);
/// Wraps the angle into [0, π], flipping the axis where needed.
AxisAngle canonicalAxisAngle(const AxisAngle& aa);
Rotation6D axisAngleToRot6d(const AxisAngle& aa);
AxisAngle rot6dToAxisAngle(const Rotation6D& r);

/// arccos((trace(R1ᵀR2) - 1) / 2) with the argument clamped to [-1, 1].
double geodesicDistance(const Matrix3d& a, const Matrix3d& b);

Matrix3d rotationX(double angle);
Matrix3d rotationY(double angle);
Matrix3d rotationZ(double angle);

} // namespace pas
