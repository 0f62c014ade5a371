#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "obstacle_removal/error.hpp"
#include "obstacle_removal/geometry.hpp"
#include "obstacle_removal/scene.hpp"

namespace obstacle_removal {

enum class MotionPhase { Home, MoveAbove, Descend, Grasp, Lift, MoveToDrop, Release, ReturnHome };

inline constexpr std::array<MotionPhase, 8> kAllPhases{
    MotionPhase::Home,  MotionPhase::MoveAbove,  MotionPhase::Descend, MotionPhase::Grasp,
    MotionPhase::Lift,  MotionPhase::MoveToDrop, MotionPhase::Release, MotionPhase::ReturnHome};

inline std::string_view to_string(MotionPhase p) {
  switch (p) {
    case MotionPhase::Home: return "Home";
    case MotionPhase::MoveAbove: return "MoveAbove";
    case MotionPhase::Descend: return "Descend";
    case MotionPhase::Grasp: return "Grasp";
    case MotionPhase::Lift: return "Lift";
    case MotionPhase::MoveToDrop: return "MoveToDrop";
    case MotionPhase::Release: return "Release";
    case MotionPhase::ReturnHome: return "ReturnHome";
  }
  return "?";
}

/// Seconds per phase. Home is the starting pose and takes no time by default.
struct PhaseDurations {
  std::array<double, 8> seconds{0.0, 4.0, 3.0, 2.0, 3.0, 4.0, 1.0, 3.0};

  double operator[](MotionPhase p) const { return seconds[static_cast<std::size_t>(p)]; }
  double& operator[](MotionPhase p) { return seconds[static_cast<std::size_t>(p)]; }
};

struct ArmConfig {
  ReachEnvelope envelope;
  double gripper_max_opening = 0.12;
  double d_tol = 0.015;
  double theta_tol = 10.0 * std::numbers::pi / 180.0;
  double boundary_margin = 0.05;
  PhaseDurations durations;
  bool adaptive_order = false;
  Eigen::Vector3d drop_pose{-0.6, 0.35, 0.1};

  void validate() const {
    envelope.validate();
    if (!(gripper_max_opening > 0 && d_tol > 0 && theta_tol > 0 && boundary_margin > 0)) {
      throw Error(ErrorCode::InvalidArgument, "arm tolerances must be positive");
    }
    for (MotionPhase p : kAllPhases) {
      const double s = durations[p];
      if (p == MotionPhase::Home ? !(s >= 0.0) : !(s > 0.0)) {
        throw Error(ErrorCode::InvalidArgument,
                    "phase duration for " + std::string(to_string(p)) + " out of range");
      }
    }
    if (!in_reach({drop_pose, Frame::Arm}, envelope)) {
      throw Error(ErrorCode::InvalidArgument, "drop_pose must lie inside the reach envelope");
    }
  }
};

enum class PickOutcome { Success, Unreachable, MissedGrasp, BoundaryCollision };

inline std::string_view to_string(PickOutcome o) {
  switch (o) {
    case PickOutcome::Success: return "Success";
    case PickOutcome::Unreachable: return "Unreachable";
    case PickOutcome::MissedGrasp: return "MissedGrasp";
    case PickOutcome::BoundaryCollision: return "BoundaryCollision";
  }
  return "?";
}

struct PhaseSpan {
  MotionPhase phase;
  double start = 0.0;
  double end = 0.0;
};

/// Errors between the commanded grasp and the object, measured at Grasp.
struct GraspDiagnostics {
  double xy_error = 0.0;
  double z_error = 0.0;
  double yaw_error = 0.0;
  double grasp_width = 0.0;
};

struct PickResult {
  PickOutcome outcome = PickOutcome::Success;
  double elapsed = 0.0;
  std::vector<PhaseSpan> trace;
  std::optional<GraspDiagnostics> diagnostics;

  bool success() const noexcept { return outcome == PickOutcome::Success; }
};

/// Object pose as the arm sees it: `object.pose()` is expressed in the arm
/// frame and the floor sits at `floor_z` there.
struct GraspTruth {
  ObjectSpec object;
  double floor_z = 0.0;

  Eigen::Vector3d top_center() const {
    return {object.pose().x, object.pose().y, floor_z + object.height()};
  }
};

/// Width the gripper must open to close across the object when its jaws
/// close perpendicular to `commanded_yaw`.
inline double effective_grasp_width(const ObjectSpec& obj, double commanded_yaw) {
  const double delta = commanded_yaw - obj.pose().yaw;
  const double s = std::abs(std::sin(delta)), c = std::abs(std::cos(delta));
  if (const auto* b = std::get_if<BrickDims>(&obj.dims())) {
    return b->length * s + b->width * c;
  }
  const auto& p = std::get<PipeDims>(obj.dims());
  const double rect = 2.0 * p.radius * c + p.length * s;
  const double stadium = 2.0 * p.radius + p.length * s;
  return std::min(rect, stadium);
}

/// Runs the fixed motion order starting at `start_time`. The world is not
/// touched; on success the caller places the object at Release time.
inline PickResult execute_pick(const GraspTarget& target, const std::optional<GraspTruth>& truth,
                               const ArmConfig& cfg, double start_time) {
  if (target.center.frame != Frame::Arm) {
    throw Error(ErrorCode::InvalidTarget, "grasp target must be in the arm frame");
  }
  PickResult result;
  double clock = start_time;
  auto run = [&](MotionPhase p) {
    const double d = cfg.durations[p];
    result.trace.push_back({p, clock, clock + d});
    clock += d;
    result.elapsed += d;
  };

  if (!in_reach(target.center, cfg.envelope)) {
    result.outcome = PickOutcome::Unreachable;
    return result;
  }

  const bool boundary = horizontal_radius(target.center) >= cfg.envelope.r_max - cfg.boundary_margin;
  run(MotionPhase::Home);
  if (boundary && !cfg.adaptive_order) {
    run(MotionPhase::MoveAbove);
    result.outcome = PickOutcome::BoundaryCollision;
    return result;
  }
  if (boundary) {
    run(MotionPhase::Descend);
    run(MotionPhase::MoveAbove);
  } else {
    run(MotionPhase::MoveAbove);
    run(MotionPhase::Descend);
  }
  run(MotionPhase::Grasp);

  bool grasped = false;
  if (truth) {
    const Eigen::Vector3d top = truth->top_center();
    GraspDiagnostics diag;
    diag.xy_error = std::hypot(target.center.x() - top.x(), target.center.y() - top.y());
    diag.z_error = std::abs(target.center.z() - top.z());
    diag.yaw_error = axis_angle_error(target.yaw, truth->object.pose().yaw);
    diag.grasp_width = effective_grasp_width(truth->object, target.yaw);
    result.diagnostics = diag;
    grasped = diag.xy_error <= cfg.d_tol && diag.z_error <= cfg.d_tol &&
              diag.yaw_error <= cfg.theta_tol && diag.grasp_width <= cfg.gripper_max_opening;
  }
  if (!grasped) {
    run(MotionPhase::ReturnHome);
    result.outcome = PickOutcome::MissedGrasp;
    return result;
  }
  run(MotionPhase::Lift);
  run(MotionPhase::MoveToDrop);
  run(MotionPhase::Release);
  run(MotionPhase::ReturnHome);
  result.outcome = PickOutcome::Success;
  return result;
}

/// What the gripper currently holds.
struct Gripper {
  std::optional<std::string> held;
};

/// Releases the held object at `drop_pose`: it leaves the active scene and is
/// logged with the current sim time.
inline WorldState place(Gripper& gripper, const Eigen::Vector3d& drop_pose, WorldState world) {
  if (!gripper.held) throw Error(ErrorCode::NothingHeld, "gripper is empty");
  const std::string id = *gripper.held;
  auto& objs = world.scene.objects;
  const auto it = std::find_if(objs.begin(), objs.end(), [&](const ObjectSpec& o) { return o.id() == id; });
  if (it == objs.end()) throw Error(ErrorCode::UnknownObjectId, id);
  objs.erase(it);
  world.removed.push_back({id, world.sim_time, drop_pose});
  gripper.held.reset();
  return world;
}

}  // namespace obstacle_removal
