#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "obstacle_removal/arm.hpp"
#include "obstacle_removal/camera.hpp"
#include "obstacle_removal/error.hpp"
#include "obstacle_removal/geometry.hpp"
#include "obstacle_removal/scene.hpp"
#include "obstacle_removal/segmentation.hpp"

namespace obstacle_removal {

/// Scripted straight-line drive in the world frame.
struct UgvConfig {
  Eigen::Vector2d start{0.0, 0.0};
  Eigen::Vector2d end{8.0, 0.0};
  double speed = 0.2;
  double stop_latency = 0.2;

  double path_length() const { return (end - start).norm(); }
  double heading() const { return std::atan2(end.y() - start.y(), end.x() - start.x()); }
};

struct FieldIssue {
  std::string path;
  std::string message;
};

/// Everything a run needs. Defaults reproduce the desk-scale rig.
struct SimulationConfig {
  std::uint64_t seed = 0;
  double frame_period = 1.0 / 21.0;
  double segmentation_latency = kDefaultSegmentationLatency;
  double geometry_latency = 0.010;
  double tau_iou = 0.8;

  Intrinsics intrinsics;
  CameraMount camera;
  DepthNoiseModel noise;
  std::map<std::string, double> object_depth_bias;  // per object id, meters

  ArmConfig arm;
  ArmMount arm_mount;
  UgvConfig ugv;
  DropZone drop_zone;

  std::vector<ObjectSpec> objects;
  CorruptionSpec corruptions;

  /// Retain measured depth and predicted labels in the message log so the
  /// geometry stage can be replayed.
  bool retain_frames = false;

  Scene initial_scene() const {
    Scene s;
    s.objects = objects;
    s.ugv = Pose2D(ugv.start.x(), ugv.start.y(), ugv.heading());
    s.camera = camera;
    s.arm = arm_mount;
    s.drop_zone = drop_zone;
    return s;
  }

  std::vector<FieldIssue> issues() const {
    std::vector<FieldIssue> out;
    auto check = [&](bool ok, const char* path, const char* message) {
      if (!ok) out.push_back({path, message});
    };
    check(frame_period > 0.0, "frame_period", "must be positive");
    check(segmentation_latency >= 0.0, "segmentation_latency", "must be >= 0");
    check(geometry_latency >= 0.0, "geometry_latency", "must be >= 0");
    check(tau_iou > 0.0 && tau_iou <= 1.0, "tau_iou", "must lie in (0, 1]");
    check(intrinsics.fx > 0.0, "camera.fx", "must be positive");
    check(intrinsics.fy > 0.0, "camera.fy", "must be positive");
    check(intrinsics.width > 0, "camera.width", "must be positive");
    check(intrinsics.height > 0, "camera.height", "must be positive");
    check(intrinsics.cx >= 0.0 && intrinsics.cx < intrinsics.width, "camera.cx", "must lie in [0, width)");
    check(intrinsics.cy >= 0.0 && intrinsics.cy < intrinsics.height, "camera.cy", "must lie in [0, height)");
    check(camera.height() > 0.0, "camera.height_m", "must be positive");
    check(camera.height() <= kMaxCameraHeight, "camera.height_m", "camera height exceeds 1.5 m");
    check(noise.sigma >= 0.0, "camera.noise.sigma", "must be >= 0");
    check(noise.dropout_prob >= 0.0 && noise.dropout_prob <= 1.0, "camera.noise.dropout_prob",
          "must lie in [0, 1]");
    const auto& env = arm.envelope;
    check(env.r_min >= 0.0 && env.r_min < env.r_max, "arm.r_min", "need 0 <= r_min < r_max");
    check(env.z_min < env.z_max, "arm.z_min", "need z_min < z_max");
    check(arm.gripper_max_opening > 0.0, "arm.gripper_max_opening", "must be positive");
    check(arm.d_tol > 0.0, "arm.d_tol", "must be positive");
    check(arm.theta_tol > 0.0, "arm.theta_tol", "must be positive");
    check(arm.boundary_margin > 0.0, "arm.boundary_margin", "must be positive");
    for (MotionPhase p : kAllPhases) {
      const double s = arm.durations[p];
      if (p == MotionPhase::Home ? !(s >= 0.0) : !(s > 0.0)) {
        out.push_back({"arm.phase_durations." + std::string(to_string(p)), "out of range"});
      }
    }
    if (env.r_min < env.r_max && env.z_min < env.z_max) {
      check(in_reach({arm.drop_pose, Frame::Arm}, env), "arm.drop_pose", "must lie inside the reach envelope");
    }
    check(ugv.speed > 0.0, "ugv.speed", "must be positive");
    check(ugv.stop_latency >= 0.0, "ugv.stop_latency", "must be >= 0");
    check(ugv.path_length() > 0.0, "ugv.end", "path must have positive length");
    check((drop_zone.min.array() < drop_zone.max.array()).all(), "drop_zone", "need min < max");

    for (const auto& [id, bias] : object_depth_bias) {
      bool found = false;
      for (const auto& o : objects) found = found || o.id() == id;
      if (!found) out.push_back({"camera.noise.object_bias." + id, "names an unknown object"});
    }
    for (std::size_t i = 0; i < corruptions.ops.size(); ++i) {
      const std::string path = "corruptions[" + std::to_string(i) + "]";
      const auto& op = corruptions.ops[i];
      if (const auto* c = std::get_if<CutBand>(&op)) {
        bool found = false;
        for (const auto& o : objects) found = found || o.id() == c->target;
        if (!found) out.push_back({path + ".target", "names an unknown object"});
        if (!(c->width > 0.0)) out.push_back({path + ".width", "must be positive"});
      } else if (const auto* e = std::get_if<Erode>(&op); e && e->radius < 0) {
        out.push_back({path + ".radius", "must be >= 0"});
      } else if (const auto* h = std::get_if<Holes>(&op); h && !(h->fraction >= 0.0 && h->fraction < 1.0)) {
        out.push_back({path + ".fraction", "must lie in [0, 1)"});
      } else if (const auto* r = std::get_if<Relabel>(&op);
                 r && (r->region.u1 < r->region.u0 || r->region.v1 < r->region.v0)) {
        out.push_back({path + ".region", "is inverted"});
      }
    }

    if (camera.height() > 0.0) {
      for (const auto& v : validate_scene(initial_scene())) {
        if (v.kind == ViolationKind::CameraTooHigh) continue;  // reported above
        std::string path = v.kind == ViolationKind::CameraBelowObjects ? "camera.height_m" : "objects";
        for (const auto& id : v.ids) path += (path == "objects" ? "[" : ",") + id;
        if (path.starts_with("objects[")) path += "]";
        out.push_back({path, v.message});
      }
    }
    return out;
  }

  void validate() const {
    const auto found = issues();
    if (found.empty()) return;
    std::string message;
    for (const auto& f : found) {
      if (!message.empty()) message += "; ";
      message += f.path + ": " + f.message;
    }
    throw Error(ErrorCode::InvalidConfig, message);
  }
};

}  // namespace obstacle_removal
