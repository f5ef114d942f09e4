#include "pas/core/random.hpp"
#include "pas/kinematics/forward_kinematics.hpp"

#include <gtest/gtest.h>

#include <fstream>
#include <numbers>
#include <sstream>

using namespace pas;

namespace {

// Uniform rotation from a normalized 4D Gaussian (Shoemake), independent of the conversion code.
Matrix3d randomRotation(Rng& rng) {
  Eigen::Vector4d q(rng.normal(), rng.normal(), rng.normal(), rng.normal());
  q.normalize();
  const double w = q[0], x = q[1], y = q[2], z = q[3];
  Matrix3d m;
  m << 1 - 2 * (y * y + z * z), 2 * (x * y - z * w), 2 * (x * z + y * w), 2 * (x * y + z * w),
      1 - 2 * (x * x + z * z), 2 * (y * z - x * w), 2 * (x * z - y * w), 2 * (y * z + x * w), 1 - 2 * (x * x + y * y);
  return m;
}

Matrix3d rz90() {
  Matrix3d m;
  m << 0, -1, 0, 1, 0, 0, 0, 0, 1;
  return m;
}

} // namespace

TEST(Rot6d, IdentityColumns) {
  Vector6d r;
  r << 1, 0, 0, 0, 1, 0;
  EXPECT_EQ(rot6dToMatrix<double>(r), Matrix3d::Identity());
}

TEST(Rot6d, QuarterTurnAboutZ) {
  Vector6d r;
  r << 0, 1, 0, -1, 0, 0;
  EXPECT_LT((rot6dToMatrix<double>(r) - rz90()).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Rot6d, ScaleIsNormalized) {
  Vector6d r;
  r << 2, 0, 0, 0, 3, 0;
  EXPECT_LT((rot6dToMatrix<double>(r) - Matrix3d::Identity()).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Rot6d, DegenerateInputs) {
  Vector6d zero;
  zero << 0, 0, 0, 0, 1, 0;
  EXPECT_THROW(rot6dToMatrix<double>(zero), DegenerateRotationError);
  Vector6d parallel;
  parallel << 1, 0, 0, 2, 0, 0;
  EXPECT_THROW(rot6dToMatrix<double>(parallel), DegenerateRotationError);
}

TEST(Rot6d, OrthonormalOutputAndGramSchmidtInvariance) {
  Rng rng(17);
  for (int i = 0; i < 500; ++i) {
    Vector6d r;
    for (int k = 0; k < 6; ++k) {
      r[k] = rng.normal();
    }
    const Matrix3d m = rot6dToMatrix<double>(r);
    EXPECT_LT(orthonormalityError(m), 1e-9);
    EXPECT_GT(m.determinant(), 0.0);
    Vector6d perturbed = r;
    const double s = rng.uniform(0.1, 10.0);
    const double shear = rng.uniform(-3.0, 3.0);
    perturbed.head<3>() *= s;
    perturbed.tail<3>() += shear * perturbed.head<3>();
    EXPECT_LT((rot6dToMatrix<double>(perturbed) - m).cwiseAbs().maxCoeff(), 1e-9);
  }
}

TEST(Rot6d, RoundTripRandomRotations) {
  Rng rng(1);
  for (int i = 0; i < 1000; ++i) {
    const Matrix3d m = randomRotation(rng);
    EXPECT_LT((rot6dToMatrix<double>(matrixToRot6d(m)) - m).cwiseAbs().maxCoeff(), 1e-9);
  }
}

TEST(AxisAngle, Conversions) {
  EXPECT_EQ(matrixToAxisAngle(Matrix3d::Identity()), AxisAngle::Zero());
  const AxisAngle aa(0, 0, std::numbers::pi / 2);
  EXPECT_LT((axisAngleToMatrix(aa) - rz90()).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(AxisAngle, RoundTripRandomRotations) {
  Rng rng(2);
  for (int i = 0; i < 1000; ++i) {
    const Matrix3d m = randomRotation(rng);
    const AxisAngle aa = matrixToAxisAngle(m);
    EXPECT_LE(aa.norm(), std::numbers::pi + 1e-12);
    EXPECT_LT(geodesicDistance(axisAngleToMatrix(aa), m), 1e-7);
  }
}

TEST(AxisAngle, CanonicalWrap) {
  const AxisAngle big(0, 0, 1.5 * std::numbers::pi);
  const AxisAngle c = canonicalAxisAngle(big);
  EXPECT_NEAR(c.z(), -0.5 * std::numbers::pi, 1e-12);
  EXPECT_LT(geodesicDistance(axisAngleToMatrix(c), axisAngleToMatrix(big)), 1e-9);
}

TEST(AxisAngle, RejectsNonOrthonormal) {
  Matrix3d m = Matrix3d::Identity();
  m(0, 1) = 0.1;
  EXPECT_THROW(matrixToAxisAngle(m), InputError);
  EXPECT_THROW(matrixToRot6d(m), InputError);
  EXPECT_THROW(matrixToAxisAngle(-Matrix3d::Identity()), InputError);
}

TEST(Geodesic, Basics) {
  Rng rng(3);
  const Matrix3d r = randomRotation(rng);
  EXPECT_NEAR(geodesicDistance(r, r), 0.0, 1e-7);
  EXPECT_NEAR(geodesicDistance(Matrix3d::Identity(), rotationZ(std::numbers::pi)), std::numbers::pi, 1e-12);
  for (int i = 0; i < 100; ++i) {
    const Matrix3d a = randomRotation(rng);
    const Matrix3d b = randomRotation(rng);
    const double d = geodesicDistance(a, b);
    EXPECT_NEAR(d, geodesicDistance(b, a), 1e-12);
    EXPECT_GE(d, 0.0);
    EXPECT_LE(d, std::numbers::pi);
  }
}

TEST(Skeleton, CanonicalShape) {
  const Skeleton& s = Skeleton::canonical();
  EXPECT_EQ(s.jointCount(), kJointCount);
  EXPECT_EQ(s.parents[0], -1);
  for (int j = 1; j < s.jointCount(); ++j) {
    EXPECT_LT(s.parents[static_cast<size_t>(j)], j);
    EXPECT_GE(s.parents[static_cast<size_t>(j)], 0);
  }
  // left/right mirror pairs share mirrored offsets
  for (int j = 0; j < s.jointCount(); ++j) {
    const std::string& name = s.names[static_cast<size_t>(j)];
    if (name.rfind("left_", 0) == 0) {
      const int k = s.find("right_" + name.substr(5));
      ASSERT_GE(k, 0);
      const Vector3d a = s.offsets[static_cast<size_t>(j)];
      const Vector3d b = s.offsets[static_cast<size_t>(k)];
      EXPECT_EQ(a.x(), -b.x());
      EXPECT_EQ(a.y(), b.y());
      EXPECT_EQ(a.z(), b.z());
    }
  }
}

TEST(Skeleton, ShippedFileMatchesEmbeddedDefault) {
  const Skeleton fromFile = loadSkeleton(std::string(PAS_DATA_DIR) + "/canonical_skeleton.txt");
  const Skeleton& embedded = Skeleton::canonical();
  EXPECT_EQ(fromFile.names, embedded.names);
  EXPECT_EQ(fromFile.parents, embedded.parents);
  EXPECT_EQ(fromFile.offsets, embedded.offsets);
}

TEST(Skeleton, WriteParseRoundTrip) {
  std::stringstream buf;
  writeSkeleton(buf, Skeleton::canonical().scaled(1.3));
  const Skeleton back = parseSkeleton(buf);
  EXPECT_EQ(back.offsets, Skeleton::canonical().scaled(1.3).offsets);
}

TEST(Skeleton, ParseErrors) {
  std::istringstream twoRoots("0 -1 a 0 0 0\n1 -1 b 0 0 0\n");
  EXPECT_THROW(parseSkeleton(twoRoots), InputError);
  std::istringstream forward("0 -1 a 0 0 0\n1 2 b 0 0 0\n2 0 c 0 0 0\n");
  EXPECT_THROW(parseSkeleton(forward), InputError);
  std::istringstream truncated("0 -1 a 0 0\n");
  EXPECT_THROW(parseSkeleton(truncated), InputError);
  std::istringstream comments("# header\n0 -1 a 0 0 0 # root\n\n1 0 b 1 0 0\n");
  EXPECT_EQ(parseSkeleton(comments).jointCount(), 2);
}

TEST(ForwardKinematics, IdentityRotationsSumOffsets) {
  const Skeleton& s = Skeleton::canonical();
  const JointStates st = forwardKinematics(s, Pose::rest());
  for (int j = 0; j < s.jointCount(); ++j) {
    Vector3d expected = Vector3d::Zero();
    for (int k = j; k > 0; k = s.parents[static_cast<size_t>(k)]) {
      expected += s.offsets[static_cast<size_t>(k)];
    }
    EXPECT_LT((st.positions[static_cast<size_t>(j)] - expected).norm(), 1e-15);
    EXPECT_EQ(st.orientations[static_cast<size_t>(j)], Matrix3d::Identity());
  }
}

TEST(ForwardKinematics, TwoBoneChain) {
  Skeleton s;
  s.names = {"root", "a", "b"};
  s.parents = {-1, 0, 1};
  const double l1 = 0.7;
  const double l2 = 0.4;
  s.offsets = {Vector3d::Zero(), Vector3d(l1, 0, 0), Vector3d(l2, 0, 0)};
  const std::vector<Matrix3d> local = {Matrix3d::Identity(), rz90(), Matrix3d::Identity()};
  const JointStates st = forwardKinematics<double>(s, std::span<const Matrix3d>(local), Vector3d::Zero());
  EXPECT_LT((st.positions[2] - Vector3d(l1, l2, 0)).norm(), 1e-15);
}

TEST(ForwardKinematics, OffsetScalingAndRootEquivariance) {
  Rng rng(4);
  Pose pose;
  for (auto& aa : pose.body) {
    aa = matrixToAxisAngle(randomRotation(rng)) * 0.3;
  }
  const Skeleton& s = Skeleton::canonical();
  const JointStates base = forwardKinematics(s, pose);
  const JointStates doubled = forwardKinematics(s.scaled(2.0), pose);
  for (size_t j = 0; j < base.positions.size(); ++j) {
    EXPECT_LT((doubled.positions[j] - 2.0 * base.positions[j]).norm(), 1e-12);
    EXPECT_LT((doubled.orientations[j] - base.orientations[j]).cwiseAbs().maxCoeff(), 1e-15);
  }
  const Matrix3d r = randomRotation(rng);
  Pose rotated = pose;
  rotated.root = matrixToAxisAngle(r * axisAngleToMatrix(pose.root));
  const JointStates turned = forwardKinematics(s, rotated);
  for (size_t j = 0; j < base.positions.size(); ++j) {
    EXPECT_LT((turned.positions[j] - r * base.positions[j]).norm(), 1e-9);
    EXPECT_LT((turned.orientations[j] - r * base.orientations[j]).cwiseAbs().maxCoeff(), 1e-9);
  }
}

TEST(ForwardKinematics, CountMismatch) {
  Skeleton s;
  s.names = {"root", "a"};
  s.parents = {-1, 0};
  s.offsets = {Vector3d::Zero(), Vector3d::UnitX()};
  EXPECT_THROW(forwardKinematics(s, Pose::rest()), InputError);
}

TEST(Pose, Rot6dRoundTrip) {
  Rng rng(6);
  Pose pose;
  for (auto& aa : pose.body) {
    aa = matrixToAxisAngle(randomRotation(rng));
  }
  pose.root = matrixToAxisAngle(randomRotation(rng));
  const Pose back = Pose::fromRot6d(pose.bodyRot6d(), pose.rootRot6d());
  for (size_t j = 0; j < pose.body.size(); ++j) {
    EXPECT_LT(geodesicDistance(axisAngleToMatrix(back.body[j]), axisAngleToMatrix(pose.body[j])), 1e-7);
  }
}
