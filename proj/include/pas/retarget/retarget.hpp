#pragma once

#include "pas/kinematics/forward_kinematics.hpp"

#include <iosfwd>
#include <vector>

namespace pas {

struct RetargetProblem {
  /// World positions and orientations to match.
  JointStates source;
  Skeleton target;
  /// Rest height of the skeleton that produced `source`; 0 means the target height.
  double sourceHeight = 0.0;
  /// correspondence[j] is the source joint matched by target joint j; empty means identity.
  std::vector<int> correspondence;
  double wPos = 1.0;
  double wRot = 0.5;
  int maxIterations = 1000;
  double tolerance = 1e-6;

  /// Throws InputError for inconsistent sizes or weights.
  void validate() const;
};

struct RetargetResult {
  Pose pose;
  double initialObjective = 0.0;
  double objective = 0.0;
  int iterations = 0;
  bool converged = false;
  double gradientNorm = 0.0;
  /// Objective after each accepted step, starting with the initial value.
  std::vector<double> history;
};

/// Source states from FK of `pose` on `sourceSkeleton`, to be matched on `target`.
RetargetProblem makeRetargetProblem(const Skeleton& sourceSkeleton, const Pose& pose, const Skeleton& target);

/// J = Σ_j w_pos·‖p̂_j/h − p_j/h_src‖² + w_rot·θ_j², with h the target rest height, h_src the
/// source rest height and θ_j the geodesic distance between matched world orientations.
/// For equal heights this is Σ_j w_pos·‖p̂_j − p_j‖²/h² + w_rot·θ_j².
double retargetObjective(const RetargetProblem& problem, const Pose& candidate);

/// Objective and gradient with respect to the 6D local rotations of every joint (6·J values).
double retargetObjective6d(const RetargetProblem& problem, const Eigen::VectorXd& params, Eigen::VectorXd* gradient);

/// Packs a pose's local rotations as 6D parameters, root first.
Eigen::VectorXd poseToParams(const Pose& pose);
Pose paramsToPose(const Eigen::VectorXd& params);

/// Gradient descent with Barzilai-Borwein initial steps and Armijo backtracking.
/// Stops when ‖∇J‖ < tolerance or after maxIterations.
RetargetResult solveRetarget(const RetargetProblem& problem, const Pose& init);

/// Text report: iterations, J_initial, J_final, converged.
void writeRetargetReport(std::ostream& out, const RetargetResult& result);

} // namespace pas
