#include "pas/kinematics/skeleton.hpp"

#include "pas/core/errors.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace pas {

namespace {

constexpr const char* kCanonicalSkeleton =
    "# index parent name ox oy oz   (meters; y up, +x = body left, +z = forward)\n"
    "0 -1 pelvis 0 0 0\n"
    "1 0 left_hip 0.09 -0.08 0\n"
    "2 0 right_hip -0.09 -0.08 0\n"
    "3 0 spine1 0 0.1 0\n"
    "4 1 left_knee 0 -0.38 0\n"
    "5 2 right_knee 0 -0.38 0\n"
    "6 3 spine2 0 0.12 0\n"
    "7 4 left_ankle 0 -0.38 0\n"
    "8 5 right_ankle 0 -0.38 0\n"
    "9 6 spine3 0 0.05 0\n"
    "10 7 left_foot 0 -0.05 0.12\n"
    "11 8 right_foot 0 -0.05 0.12\n"
    "12 9 neck 0 0.2 0\n"
    "13 9 left_collar 0.07 0.12 0\n"
    "14 9 right_collar -0.07 0.12 0\n"
    "15 12 head 0 0.1 0\n"
    "16 13 left_shoulder 0.1 0.02 0\n"
    "17 14 right_shoulder -0.1 0.02 0\n"
    "18 16 left_elbow 0.25 0 0\n"
    "19 17 right_elbow -0.25 0 0\n"
    "20 18 left_wrist 0.22 0 0\n"
    "21 19 right_wrist -0.22 0 0\n";

} // namespace

const char* canonicalSkeletonText() {
  return kCanonicalSkeleton;
}

void Skeleton::validate() const {
  const size_t n = parents.size();
  if (n == 0) {
    throwInput("skeleton has no joints");
  }
  if (names.size() != n || offsets.size() != n) {
    throwInput("skeleton names/parents/offsets sizes differ");
  }
  int roots = 0;
  for (size_t j = 0; j < n; ++j) {
    const int p = parents[j];
    if (p < 0) {
      if (p != -1) {
        throwInput("skeleton root parent must be -1");
      }
      ++roots;
      if (j != 0) {
        throwInput("skeleton root must be joint 0");
      }
    } else if (p >= static_cast<int>(j)) {
      throwInput("skeleton joint " + std::to_string(j) + " does not follow its parent");
    }
    if (!offsets[j].allFinite()) {
      throwInput("skeleton offset is not finite");
    }
  }
  if (roots != 1) {
    throwInput("skeleton must have exactly one root");
  }
}

double Skeleton::height() const {
  std::vector<Vector3d> positions(parents.size());
  for (size_t j = 0; j < parents.size(); ++j) {
    positions[j] = parents[j] < 0 ? Vector3d(Vector3d::Zero())
                                  : Vector3d(positions[static_cast<size_t>(parents[j])] + offsets[j]);
  }
  double best = 0.0;
  for (size_t a = 0; a < positions.size(); ++a) {
    for (size_t b = a + 1; b < positions.size(); ++b) {
      best = std::max(best, (positions[a] - positions[b]).norm());
    }
  }
  return best;
}

Skeleton Skeleton::scaled(double factor) const {
  Skeleton out = *this;
  for (auto& o : out.offsets) {
    o *= factor;
  }
  return out;
}

int Skeleton::find(const std::string& name) const {
  for (size_t j = 0; j < names.size(); ++j) {
    if (names[j] == name) {
      return static_cast<int>(j);
    }
  }
  return -1;
}

const Skeleton& Skeleton::canonical() {
  static const Skeleton skeleton = [] {
    std::istringstream in(kCanonicalSkeleton);
    return parseSkeleton(in);
  }();
  return skeleton;
}

Skeleton parseSkeleton(std::istream& in) {
  Skeleton s;
  std::string line;
  int lineNumber = 0;
  while (std::getline(in, line)) {
    ++lineNumber;
    const auto hash = line.find('#');
    if (hash != std::string::npos) {
      line.erase(hash);
    }
    std::istringstream fields(line);
    int index = 0;
    if (!(fields >> index)) {
      continue; // blank or comment-only line
    }
    int parent = 0;
    std::string name;
    Vector3d offset;
    if (!(fields >> parent >> name >> offset.x() >> offset.y() >> offset.z())) {
      throwInput("skeleton line " + std::to_string(lineNumber) + ": expected `index parent name ox oy oz`");
    }
    if (index != s.jointCount()) {
      throwInput("skeleton line " + std::to_string(lineNumber) + ": joint indices must be consecutive from 0");
    }
    s.names.push_back(name);
    s.parents.push_back(parent);
    s.offsets.push_back(offset);
  }
  s.validate();
  return s;
}

Skeleton loadSkeleton(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throwInput("cannot open skeleton file: " + path.string());
  }
  return parseSkeleton(in);
}

void writeSkeleton(std::ostream& out, const Skeleton& skeleton) {
  out << "# index parent name ox oy oz\n";
  out << std::setprecision(17);
  for (int j = 0; j < skeleton.jointCount(); ++j) {
    const auto idx = static_cast<size_t>(j);
    const Vector3d& o = skeleton.offsets[idx];
    out << j << ' ' << skeleton.parents[idx] << ' ' << skeleton.names[idx] << ' ' << o.x() << ' ' << o.y() << ' '
        << o.z() << '\n';
  }
}

std::vector<Matrix3d> Pose::localRotations() const {
  if (static_cast<int>(body.size()) != kBodyJointCount) {
    throwInput("pose must have " + std::to_string(kBodyJointCount) + " body joints");
  }
  std::vector<Matrix3d> out;
  out.reserve(kJointCount);
  out.push_back(axisAngleToMatrix(root));
  for (const auto& aa : body) {
    out.push_back(axisAngleToMatrix(aa));
  }
  return out;
}

Pose Pose::fromLocalRotations(std::span<const Matrix3d> rotations) {
  if (static_cast<int>(rotations.size()) != kJointCount) {
    throwInput("expected " + std::to_string(kJointCount) + " local rotations");
  }
  Pose pose;
  pose.root = matrixToAxisAngle(rotations[0]);
  for (int j = 0; j < kBodyJointCount; ++j) {
    pose.body[static_cast<size_t>(j)] = matrixToAxisAngle(rotations[static_cast<size_t>(j + 1)]);
  }
  return pose;
}

Eigen::VectorXd Pose::bodyRot6d() const {
  Eigen::VectorXd out(6 * kBodyJointCount);
  for (int j = 0; j < kBodyJointCount; ++j) {
    out.segment<6>(6 * j) = axisAngleToRot6d(body[static_cast<size_t>(j)]);
  }
  return out;
}

Rotation6D Pose::rootRot6d() const {
  return axisAngleToRot6d(root);
}

Pose Pose::fromRot6d(const Eigen::VectorXd& body6d, const Rotation6D& root6d) {
  if (body6d.size() != 6 * kBodyJointCount) {
    throwInput("6D body vector must have " + std::to_string(6 * kBodyJointCount) + " entries");
  }
  Pose pose;
  pose.root = rot6dToAxisAngle(root6d);
  for (int j = 0; j < kBodyJointCount; ++j) {
    pose.body[static_cast<size_t>(j)] = rot6dToAxisAngle(body6d.segment<6>(6 * j));
  }
  return pose;
}

} // namespace pas
