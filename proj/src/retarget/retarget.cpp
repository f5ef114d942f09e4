#include "pas/retarget/retarget.hpp"

#include "pas/core/errors.hpp"

#include <unsupported/Eigen/AutoDiff>

#include <cmath>
#include <iomanip>
#include <ostream>
#include <sstream>

namespace pas {

namespace {

constexpr int kMaxFixedParams = 6 * kJointCount;

using Derivatives = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxFixedParams, 1>;
using DynamicDerivatives = Eigen::VectorXd;

int sourceIndex(const RetargetProblem& p, int j) {
  return p.correspondence.empty() ? j : p.correspondence[static_cast<size_t>(j)];
}

// Factor that maps source positions to the target's size.
double sourceScaleOf(const RetargetProblem& p) {
  return p.sourceHeight > 0.0 ? p.target.height() / p.sourceHeight : 1.0;
}

// θ² as a function of c = (tr(R̂ᵀR) − 1)/2, with d(θ²)/dc = −2θ/sin θ (→ −2 as θ → 0).
template <typename AD>
AD thetaSquared(const AD& c) {
  const double cv = std::clamp(c.value(), -1.0, 1.0);
  const double theta = std::acos(cv);
  double slope = -2.0;
  if (theta > 1e-6) {
    slope = -2.0 * theta / std::max(std::sin(theta), 1e-12);
  }
  return AD(theta * theta, slope * c.derivatives());
}

template <typename Der>
double evaluate(const RetargetProblem& problem, const Eigen::VectorXd& params, Eigen::VectorXd* gradient) {
  using AD = Eigen::AutoDiffScalar<Der>;
  const int n = problem.target.jointCount();
  const auto dim = static_cast<Eigen::Index>(6 * n);
  std::vector<Matrix3<AD>> locals(static_cast<size_t>(n));
  for (int j = 0; j < n; ++j) {
    Vector6<AD> r;
    for (int k = 0; k < 6; ++k) {
      const Eigen::Index idx = 6 * j + k;
      r[k] = AD(params[idx], dim, idx);
    }
    locals[static_cast<size_t>(j)] = rot6dToMatrix<AD>(r);
  }
  const auto states = forwardKinematics<AD>(
      problem.target, std::span<const Matrix3<AD>>(locals), Vector3<AD>(AD(0.0, Der::Zero(dim)), AD(0.0, Der::Zero(dim)), AD(0.0, Der::Zero(dim))));
  const double h = problem.target.height();
  const double invH2 = 1.0 / (h * h);
  const double sourceScale = sourceScaleOf(problem);
  AD total(0.0, Der::Zero(dim));
  for (int j = 0; j < n; ++j) {
    const auto sj = static_cast<size_t>(sourceIndex(problem, j));
    const auto tj = static_cast<size_t>(j);
    if (problem.wPos > 0.0) {
      const Vector3<AD> diff = states.positions[tj] - (sourceScale * problem.source.positions[sj]).cast<AD>();
      total += problem.wPos * invH2 * diff.squaredNorm();
    }
    if (problem.wRot > 0.0) {
      const AD c = ((states.orientations[tj].transpose() * problem.source.orientations[sj].cast<AD>()).trace() - 1.0) / 2.0;
      total += problem.wRot * thetaSquared(c);
    }
  }
  if (gradient != nullptr) {
    *gradient = total.derivatives();
    if (gradient->size() == 0) {
      gradient->setZero(dim);
    }
  }
  return total.value();
}

Eigen::VectorXd orthonormalized(const Eigen::VectorXd& x) {
  Eigen::VectorXd out(x.size());
  for (Eigen::Index j = 0; j < x.size() / 6; ++j) {
    const Vector6d r = x.segment<6>(6 * j);
    out.segment<6>(6 * j) = matrixToRot6d(rot6dToMatrix<double>(r));
  }
  return out;
}

} // namespace

void RetargetProblem::validate() const {
  target.validate();
  const int n = target.jointCount();
  if (n != kJointCount) {
    throwInput("retarget: target skeleton must have " + std::to_string(kJointCount) + " joints");
  }
  if (source.positions.size() != source.orientations.size() || source.positions.empty()) {
    throwInput("retarget: source joint states are empty or inconsistent");
  }
  if (!correspondence.empty()) {
    if (static_cast<int>(correspondence.size()) != n) {
      throwInput("retarget: correspondence must map every target joint");
    }
    for (int s : correspondence) {
      if (s < 0 || s >= static_cast<int>(source.positions.size())) {
        throwInput("retarget: correspondence index " + std::to_string(s) + " out of range");
      }
    }
  } else if (static_cast<int>(source.positions.size()) != n) {
    throwInput("retarget: identity correspondence needs equal joint counts");
  }
  if (wPos < 0.0 || wRot < 0.0 || (wPos == 0.0 && wRot == 0.0)) {
    throwInput("retarget: weights must be non-negative and not both zero");
  }
  if (sourceHeight < 0.0) {
    throwInput("retarget: source height must be non-negative");
  }
  if (maxIterations < 0 || !(tolerance > 0.0)) {
    throwInput("retarget: max iterations must be >= 0 and tolerance positive");
  }
}

RetargetProblem makeRetargetProblem(const Skeleton& sourceSkeleton, const Pose& pose, const Skeleton& target) {
  RetargetProblem p;
  p.source = forwardKinematics(sourceSkeleton, pose);
  p.target = target;
  p.sourceHeight = sourceSkeleton.height();
  return p;
}

Eigen::VectorXd poseToParams(const Pose& pose) {
  const auto rots = pose.localRotations();
  Eigen::VectorXd x(static_cast<Eigen::Index>(6 * rots.size()));
  for (size_t j = 0; j < rots.size(); ++j) {
    x.segment<6>(static_cast<Eigen::Index>(6 * j)) = matrixToRot6d(rots[j]);
  }
  return x;
}

Pose paramsToPose(const Eigen::VectorXd& params) {
  if (params.size() != 6 * kJointCount) {
    throwInput("retarget: parameter vector has the wrong size");
  }
  std::vector<Matrix3d> rots(static_cast<size_t>(kJointCount));
  for (int j = 0; j < kJointCount; ++j) {
    const Vector6d r = params.segment<6>(6 * j);
    rots[static_cast<size_t>(j)] = rot6dToMatrix<double>(r);
  }
  return Pose::fromLocalRotations(rots);
}

double retargetObjective6d(const RetargetProblem& problem, const Eigen::VectorXd& params, Eigen::VectorXd* gradient) {
  if (params.size() != 6 * problem.target.jointCount()) {
    throwInput("retarget: parameter vector has the wrong size");
  }
  if (params.size() <= kMaxFixedParams) {
    return evaluate<Derivatives>(problem, params, gradient);
  }
  return evaluate<DynamicDerivatives>(problem, params, gradient);
}

double retargetObjective(const RetargetProblem& problem, const Pose& candidate) {
  problem.validate();
  const auto states = forwardKinematics(problem.target, candidate);
  const double h = problem.target.height();
  const double sourceScale = sourceScaleOf(problem);
  double total = 0.0;
  for (int j = 0; j < problem.target.jointCount(); ++j) {
    const auto sj = static_cast<size_t>(sourceIndex(problem, j));
    const auto tj = static_cast<size_t>(j);
    total += problem.wPos * (states.positions[tj] - sourceScale * problem.source.positions[sj]).squaredNorm() / (h * h);
    const double theta = geodesicDistance(states.orientations[tj], problem.source.orientations[sj]);
    total += problem.wRot * theta * theta;
  }
  return total;
}

RetargetResult solveRetarget(const RetargetProblem& problem, const Pose& init) {
  problem.validate();
  auto fail = [](const std::string& what, int iteration, double step, double value) {
    std::ostringstream msg;
    msg << "retarget: non-finite objective during " << what << " at iteration " << iteration << " (step " << step
        << ", value " << value << ")";
    throw NumericError(msg.str());
  };
  Eigen::VectorXd x = poseToParams(init);
  Eigen::VectorXd g;
  double f = retargetObjective6d(problem, x, &g);
  if (!std::isfinite(f) || !g.allFinite()) {
    fail("initial evaluation", 0, 0.0, f);
  }
  RetargetResult result;
  result.initialObjective = f;
  result.history.push_back(f);
  Eigen::VectorXd lastStep, gPrev;
  double alpha = 1.0;
  int it = 0;
  for (; it < problem.maxIterations; ++it) {
    const double gnorm2 = g.squaredNorm();
    if (std::sqrt(gnorm2) < problem.tolerance) {
      result.converged = true;
      break;
    }
    if (it > 0) {
      const Eigen::VectorXd s = lastStep;
      const Eigen::VectorXd y = g - gPrev;
      const double sy = s.dot(y);
      alpha = sy > 0.0 ? s.squaredNorm() / sy : 2.0 * alpha;
    } else {
      alpha = std::min(1.0, 0.1 / std::sqrt(gnorm2));
    }
    bool accepted = false;
    Eigen::VectorXd xNew, gNew;
    double fNew = 0.0;
    for (int halvings = 0; halvings < 60; ++halvings) {
      xNew = x - alpha * g;
      fNew = retargetObjective6d(problem, xNew, nullptr);
      if (!std::isfinite(fNew)) {
        fail("line search", it, alpha, fNew);
      }
      if (fNew <= f - 1e-4 * alpha * gnorm2) {
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!accepted) {
      // No step decreases J by the Armijo margin: the iterate is stationary to working precision.
      break;
    }
    lastStep = xNew - x;
    gPrev = g;
    // J only depends on the Gram-Schmidt rotations, so re-projecting each 6D block onto
    // orthonormal columns leaves it unchanged and keeps the parameterization well conditioned.
    x = orthonormalized(xNew);
    f = retargetObjective6d(problem, x, &g);
    if (!std::isfinite(f) || !g.allFinite()) {
      fail("gradient evaluation", it, alpha, f);
    }
    result.history.push_back(f);
  }
  result.iterations = it;
  result.objective = f;
  result.gradientNorm = g.norm();
  result.converged = result.converged || result.gradientNorm < problem.tolerance;
  result.pose = paramsToPose(x);
  return result;
}

void writeRetargetReport(std::ostream& out, const RetargetResult& result) {
  out << std::setprecision(9);
  out << "iterations\t" << result.iterations << '\n';
  out << "J_initial\t" << result.initialObjective << '\n';
  out << "J_final\t" << result.objective << '\n';
  out << "converged\t" << (result.converged ? "true" : "false") << '\n';
}

} // namespace pas
