#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <tuple>
#include <variant>
#include <vector>

#include <Eigen/Core>

#include "obstacle_removal/error.hpp"

namespace obstacle_removal {

inline constexpr double kMaxCameraHeight = 1.5;

enum class ObjectClass { Brick, Pipe };

inline std::string_view to_string(ObjectClass c) {
  return c == ObjectClass::Brick ? "brick" : "pipe";
}

/// Wraps an angle into [-pi, pi).
inline double normalize_angle(double a) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  double r = std::fmod(a + std::numbers::pi, two_pi);
  if (r < 0.0) r += two_pi;
  return r - std::numbers::pi;
}

/// Wraps an undirected axis angle into [0, pi).
inline double normalize_axis_angle(double a) {
  double r = std::fmod(a, std::numbers::pi);
  if (r < 0.0) r += std::numbers::pi;
  if (r >= std::numbers::pi) r = 0.0;
  return r;
}

/// Smallest difference between two undirected axis angles, in [0, pi/2].
inline double axis_angle_error(double a, double b) {
  double d = std::fmod(std::abs(a - b), std::numbers::pi);
  return std::min(d, std::numbers::pi - d);
}

struct BrickDims {
  double length = 0.20;
  double width = 0.095;
  double height = 0.057;
};

struct PipeDims {
  double radius = 0.03;
  double length = 0.40;
};

struct ObjectPose {
  double x = 0.0;
  double y = 0.0;
  double yaw = 0.0;
};

/// A brick (box) or pipe (cylinder lying on its side) resting on the floor.
/// Brick yaw is the direction of its length axis; pipe yaw is its cylinder axis.
class ObjectSpec {
 public:
  using Dims = std::variant<BrickDims, PipeDims>;

  ObjectSpec(std::string id, Dims dims, ObjectPose pose)
      : id_(std::move(id)), dims_(dims), pose_(pose) {
    if (id_.empty()) throw Error(ErrorCode::InvalidArgument, "object id must be non-empty");
    if (const auto* b = std::get_if<BrickDims>(&dims_)) {
      if (!(b->length > 0 && b->width > 0 && b->height > 0)) {
        throw Error(ErrorCode::InvalidArgument, "brick " + id_ + ": dimensions must be positive");
      }
      if (b->length < b->width) {
        throw Error(ErrorCode::InvalidArgument, "brick " + id_ + ": length must be >= width");
      }
    } else {
      const auto& p = std::get<PipeDims>(dims_);
      if (!(p.radius > 0 && p.length > 0)) {
        throw Error(ErrorCode::InvalidArgument, "pipe " + id_ + ": dimensions must be positive");
      }
    }
  }

  static ObjectSpec brick(std::string id, BrickDims dims, ObjectPose pose) {
    return ObjectSpec(std::move(id), dims, pose);
  }
  static ObjectSpec pipe(std::string id, PipeDims dims, ObjectPose pose) {
    return ObjectSpec(std::move(id), dims, pose);
  }

  const std::string& id() const noexcept { return id_; }
  const Dims& dims() const noexcept { return dims_; }
  const ObjectPose& pose() const noexcept { return pose_; }

  ObjectClass object_class() const noexcept {
    return std::holds_alternative<BrickDims>(dims_) ? ObjectClass::Brick : ObjectClass::Pipe;
  }

  /// Total height of the object above the floor.
  double height() const noexcept {
    if (const auto* b = std::get_if<BrickDims>(&dims_)) return b->height;
    return 2.0 * std::get<PipeDims>(dims_).radius;
  }

  /// Resting center height: half the brick height or the pipe radius.
  double center_z() const noexcept { return 0.5 * height(); }

  /// Highest point of the object (top face of a brick, top line of a pipe).
  Eigen::Vector3d top_center() const { return {pose_.x, pose_.y, height()}; }

  ObjectSpec with_pose(ObjectPose pose) const {
    ObjectSpec copy = *this;
    copy.pose_ = pose;
    return copy;
  }

  friend bool operator==(const ObjectSpec& a, const ObjectSpec& b) {
    auto key = [](const ObjectSpec& o) {
      return std::tie(o.id_, o.pose_.x, o.pose_.y, o.pose_.yaw);
    };
    return key(a) == key(b) && a.dims_.index() == b.dims_.index() &&
           std::visit(
               [&](const auto& da) {
                 using T = std::decay_t<decltype(da)>;
                 const auto& db = std::get<T>(b.dims_);
                 if constexpr (std::is_same_v<T, BrickDims>) {
                   return da.length == db.length && da.width == db.width &&
                          da.height == db.height;
                 } else {
                   return da.radius == db.radius && da.length == db.length;
                 }
               },
               a.dims_);
  }

 private:
  std::string id_;
  Dims dims_;
  ObjectPose pose_;
};

/// Planar footprint: an oriented rectangle core (half extents) grown by a
/// disk of `radius`. Bricks have radius 0; pipes are stadiums whose core is a
/// segment (half_width 0).
struct Footprint {
  Eigen::Vector2d center = Eigen::Vector2d::Zero();
  double yaw = 0.0;
  double half_length = 0.0;
  double half_width = 0.0;
  double radius = 0.0;

  Eigen::Vector2d axis() const { return {std::cos(yaw), std::sin(yaw)}; }
  Eigen::Vector2d normal() const { return {-std::sin(yaw), std::cos(yaw)}; }

  /// Core polygon vertices (4 for a rectangle, 2 for a segment core).
  std::vector<Eigen::Vector2d> core_vertices() const {
    const Eigen::Vector2d a = axis() * half_length;
    const Eigen::Vector2d n = normal() * half_width;
    if (half_width == 0.0) return {center - a, center + a};
    return {center + a + n, center - a + n, center - a - n, center + a - n};
  }

  double area() const {
    return 4.0 * half_length * half_width +
           4.0 * (half_length + half_width) * radius +
           std::numbers::pi * radius * radius;
  }

  bool contains(const Eigen::Vector2d& p) const {
    const Eigen::Vector2d d = p - center;
    const double along = std::max(std::abs(d.dot(axis())) - half_length, 0.0);
    const double across = std::max(std::abs(d.dot(normal())) - half_width, 0.0);
    return std::hypot(along, across) <= radius;
  }
};

inline Footprint object_footprint(const ObjectSpec& obj) {
  Footprint f;
  f.center = {obj.pose().x, obj.pose().y};
  f.yaw = obj.pose().yaw;
  if (const auto* b = std::get_if<BrickDims>(&obj.dims())) {
    f.half_length = 0.5 * b->length;
    f.half_width = 0.5 * b->width;
  } else {
    const auto& p = std::get<PipeDims>(obj.dims());
    f.half_length = 0.5 * p.length;
    f.radius = p.radius;
  }
  return f;
}

namespace detail {

inline double point_segment_distance(const Eigen::Vector2d& p, const Eigen::Vector2d& a,
                                     const Eigen::Vector2d& b) {
  const Eigen::Vector2d ab = b - a;
  const double len2 = ab.squaredNorm();
  double t = len2 > 0.0 ? (p - a).dot(ab) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return (a + t * ab - p).norm();
}

inline std::vector<std::pair<Eigen::Vector2d, Eigen::Vector2d>> edges(
    const std::vector<Eigen::Vector2d>& poly) {
  std::vector<std::pair<Eigen::Vector2d, Eigen::Vector2d>> out;
  if (poly.size() == 2) {
    out.emplace_back(poly[0], poly[1]);
    return out;
  }
  for (std::size_t i = 0; i < poly.size(); ++i) {
    out.emplace_back(poly[i], poly[(i + 1) % poly.size()]);
  }
  return out;
}

// Separating-axis test over edge normals and edge directions of both
// (possibly degenerate) convex polygons. Closed sets: touching intersects.
inline bool convex_intersect(const std::vector<Eigen::Vector2d>& a,
                             const std::vector<Eigen::Vector2d>& b) {
  std::vector<Eigen::Vector2d> axes;
  for (const auto* poly : {&a, &b}) {
    for (const auto& [p, q] : edges(*poly)) {
      const Eigen::Vector2d d = q - p;
      if (d.squaredNorm() == 0.0) continue;
      axes.push_back(d);
      axes.emplace_back(-d.y(), d.x());
    }
  }
  for (const auto& axis : axes) {
    auto range = [&](const std::vector<Eigen::Vector2d>& poly) {
      double lo = poly[0].dot(axis), hi = lo;
      for (const auto& v : poly) {
        lo = std::min(lo, v.dot(axis));
        hi = std::max(hi, v.dot(axis));
      }
      return std::pair{lo, hi};
    };
    const auto [alo, ahi] = range(a);
    const auto [blo, bhi] = range(b);
    if (ahi < blo || bhi < alo) return false;
  }
  return true;
}

inline double convex_distance(const std::vector<Eigen::Vector2d>& a,
                              const std::vector<Eigen::Vector2d>& b) {
  if (convex_intersect(a, b)) return 0.0;
  double best = std::numeric_limits<double>::infinity();
  for (const auto& v : a) {
    for (const auto& [p, q] : edges(b)) best = std::min(best, point_segment_distance(v, p, q));
  }
  for (const auto& v : b) {
    for (const auto& [p, q] : edges(a)) best = std::min(best, point_segment_distance(v, p, q));
  }
  return best;
}

}  // namespace detail

inline bool footprints_overlap(const Footprint& a, const Footprint& b) {
  return detail::convex_distance(a.core_vertices(), b.core_vertices()) <= a.radius + b.radius;
}

/// UGV pose in the world frame.
struct Pose2D {
  double x = 0.0;
  double y = 0.0;
  double heading = 0.0;

  Pose2D() = default;
  Pose2D(double x_, double y_, double heading_)
      : x(x_), y(y_), heading(normalize_angle(heading_)) {}
};

/// Robot frame: origin on the floor under the UGV center, x forward, y left,
/// z up. The camera always looks straight down with its image x-axis along
/// robot x.
struct CameraMount {
  Eigen::Vector3d position{0.0, 0.0, 1.2};
  double height() const { return position.z(); }
};

struct ArmMount {
  Eigen::Vector3d position{0.35, -0.35, 0.15};
  double yaw = 0.0;
};

/// Axis-aligned drop region in the robot frame (the carry bin).
struct DropZone {
  Eigen::Vector2d min{-0.4, -0.2};
  Eigen::Vector2d max{-0.1, 0.2};
};

struct Scene {
  std::vector<ObjectSpec> objects;
  Pose2D ugv;
  CameraMount camera;
  ArmMount arm;
  DropZone drop_zone;

  const ObjectSpec* find(std::string_view id) const {
    for (const auto& o : objects) {
      if (o.id() == id) return &o;
    }
    return nullptr;
  }
};

enum class ViolationKind { CameraTooHigh, CameraBelowObjects, DuplicateId, OverlappingFootprints };

struct Violation {
  ViolationKind kind;
  std::string message;
  std::vector<std::string> ids;

  friend bool operator==(const Violation&, const Violation&) = default;
  friend auto operator<=>(const Violation& a, const Violation& b) {
    return std::tie(a.kind, a.ids, a.message) <=> std::tie(b.kind, b.ids, b.message);
  }
};

/// Returns every violated scene invariant, sorted; empty means valid.
inline std::vector<Violation> validate_scene(const Scene& scene) {
  std::vector<Violation> out;
  const double h = scene.camera.height();
  if (h > kMaxCameraHeight) {
    out.push_back({ViolationKind::CameraTooHigh, "camera height exceeds 1.5 m", {}});
  }
  double tallest = 0.0;
  std::vector<std::string> tallest_ids;
  for (const auto& o : scene.objects) {
    if (o.height() >= h) tallest_ids.push_back(o.id());
    tallest = std::max(tallest, o.height());
  }
  if (!(h > tallest) || h <= 0.0) {
    std::sort(tallest_ids.begin(), tallest_ids.end());
    out.push_back({ViolationKind::CameraBelowObjects,
                   "camera height must exceed the tallest object", tallest_ids});
  }

  std::set<std::string> seen, dupes;
  for (const auto& o : scene.objects) {
    if (!seen.insert(o.id()).second) dupes.insert(o.id());
  }
  for (const auto& id : dupes) {
    out.push_back({ViolationKind::DuplicateId, "duplicate object id", {id}});
  }

  std::set<std::pair<std::string, std::string>> overlaps;
  for (std::size_t i = 0; i < scene.objects.size(); ++i) {
    const auto fi = object_footprint(scene.objects[i]);
    for (std::size_t j = i + 1; j < scene.objects.size(); ++j) {
      if (footprints_overlap(fi, object_footprint(scene.objects[j]))) {
        auto a = scene.objects[i].id(), b = scene.objects[j].id();
        if (b < a) std::swap(a, b);
        overlaps.emplace(a, b);
      }
    }
  }
  for (const auto& [a, b] : overlaps) {
    out.push_back({ViolationKind::OverlappingFootprints, "overlapping footprints", {a, b}});
  }
  std::sort(out.begin(), out.end());
  return out;
}

inline Eigen::Vector3d world_to_robot(const Eigen::Vector3d& p, const Pose2D& ugv) {
  const double c = std::cos(ugv.heading), s = std::sin(ugv.heading);
  const double dx = p.x() - ugv.x, dy = p.y() - ugv.y;
  return {c * dx + s * dy, -s * dx + c * dy, p.z()};
}

inline Eigen::Vector3d robot_to_world(const Eigen::Vector3d& p, const Pose2D& ugv) {
  const double c = std::cos(ugv.heading), s = std::sin(ugv.heading);
  return {c * p.x() - s * p.y() + ugv.x, s * p.x() + c * p.y() + ugv.y, p.z()};
}

struct Removal {
  std::string id;
  double time = 0.0;
  Eigen::Vector3d drop_pose = Eigen::Vector3d::Zero();
};

/// Mutable simulation state; only the orchestrator's step loop changes it.
struct WorldState {
  Scene scene;
  double sim_time = 0.0;
  std::vector<Removal> removed;
};

}  // namespace obstacle_removal
