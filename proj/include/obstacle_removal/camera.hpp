#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <variant>

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "obstacle_removal/error.hpp"
#include "obstacle_removal/image.hpp"
#include "obstacle_removal/scene.hpp"

namespace obstacle_removal {

/// Pinhole intrinsics. Defaults: 512x256 image, fx = fy = 256, principal
/// point at the image center.
struct Intrinsics {
  double fx = 256.0;
  double fy = 256.0;
  double cx = 256.0;
  double cy = 128.0;
  int width = 512;
  int height = 256;

  void validate() const {
    if (!(fx > 0.0 && fy > 0.0)) throw Error(ErrorCode::InvalidArgument, "fx, fy must be positive");
    if (width <= 0 || height <= 0) throw Error(ErrorCode::InvalidArgument, "image size must be positive");
    if (!(cx >= 0.0 && cx < width && cy >= 0.0 && cy < height)) {
      throw Error(ErrorCode::InvalidArgument, "principal point must lie inside the image");
    }
  }
};

inline Eigen::Vector2d project(const Eigen::Vector3d& p, const Intrinsics& k) {
  if (!(p.z() > 0.0)) throw Error(ErrorCode::NonPositiveDepth, "point is not in front of the camera");
  return {k.fx * p.x() / p.z() + k.cx, k.fy * p.y() / p.z() + k.cy};
}

inline Eigen::Vector3d backproject(double u, double v, double z, const Intrinsics& k) {
  if (!(z > 0.0)) throw Error(ErrorCode::NonPositiveDepth, "depth must be positive");
  return {(u - k.cx) * z / k.fx, (v - k.cy) * z / k.fy, z};
}

/// Rotation taking camera-frame vectors to robot-frame vectors for the nadir
/// camera: x stays, y and z flip.
inline Eigen::Matrix3d nadir_camera_to_robot() {
  return Eigen::Vector3d(1.0, -1.0, -1.0).asDiagonal();
}

inline Eigen::Matrix3d yaw_rotation(double yaw) {
  return Eigen::AngleAxisd(yaw, Eigen::Vector3d::UnitZ()).toRotationMatrix();
}

/// Camera pose in the world frame for the UGV's current pose.
struct CameraPose {
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();  // camera -> world
  Eigen::Vector3d position = Eigen::Vector3d::Zero();      // world

  static CameraPose from_scene(const Scene& scene) {
    CameraPose pose;
    pose.rotation = yaw_rotation(scene.ugv.heading) * nadir_camera_to_robot();
    pose.position = robot_to_world(scene.camera.position, scene.ugv);
    return pose;
  }

  Eigen::Vector3d world_to_camera(const Eigen::Vector3d& p) const {
    return rotation.transpose() * (p - position);
  }
  Eigen::Vector3d camera_to_world(const Eigen::Vector3d& p) const {
    return rotation * p + position;
  }
};

struct RenderedFrame {
  LabelImage labels;
  DepthImage depth;
  InstanceImage instances;
};

namespace detail {

// Ray in an object's local frame (origin at its floor contact center, x along
// its yaw axis, z up).
struct LocalRay {
  Eigen::Vector3d origin;
  Eigen::Vector3d dir;
};

inline LocalRay to_local(const ObjectSpec& obj, const Eigen::Vector3d& o, const Eigen::Vector3d& d) {
  const double c = std::cos(obj.pose().yaw), s = std::sin(obj.pose().yaw);
  const Eigen::Vector3d rel(o.x() - obj.pose().x, o.y() - obj.pose().y, o.z());
  return {{c * rel.x() + s * rel.y(), -s * rel.x() + c * rel.y(), rel.z()},
          {c * d.x() + s * d.y(), -s * d.x() + c * d.y(), d.z()}};
}

inline std::optional<double> intersect_box(const LocalRay& ray, const BrickDims& b) {
  const Eigen::Vector3d lo(-0.5 * b.length, -0.5 * b.width, 0.0);
  const Eigen::Vector3d hi(0.5 * b.length, 0.5 * b.width, b.height);
  double t_near = -std::numeric_limits<double>::infinity();
  double t_far = std::numeric_limits<double>::infinity();
  for (int i = 0; i < 3; ++i) {
    if (std::abs(ray.dir[i]) < 1e-15) {
      if (ray.origin[i] < lo[i] || ray.origin[i] > hi[i]) return std::nullopt;
      continue;
    }
    double t1 = (lo[i] - ray.origin[i]) / ray.dir[i];
    double t2 = (hi[i] - ray.origin[i]) / ray.dir[i];
    if (t1 > t2) std::swap(t1, t2);
    t_near = std::max(t_near, t1);
    t_far = std::min(t_far, t2);
  }
  if (t_near > t_far || t_near <= 0.0) return std::nullopt;
  return t_near;
}

inline std::optional<double> intersect_cylinder(const LocalRay& ray, const PipeDims& p) {
  const double r = p.radius, half = 0.5 * p.length;
  std::optional<double> best;
  const double oy = ray.origin.y(), oz = ray.origin.z() - r;
  const double dy = ray.dir.y(), dz = ray.dir.z();
  const double a = dy * dy + dz * dz;
  if (a > 0.0) {
    const double b = 2.0 * (oy * dy + oz * dz);
    const double c = oy * oy + oz * oz - r * r;
    const double disc = b * b - 4.0 * a * c;
    if (disc >= 0.0) {
      const double t = (-b - std::sqrt(disc)) / (2.0 * a);
      if (t > 0.0 && std::abs(ray.origin.x() + t * ray.dir.x()) <= half) best = t;
    }
  }
  if (std::abs(ray.dir.x()) > 1e-15) {
    for (double cap : {-half, half}) {
      const double t = (cap - ray.origin.x()) / ray.dir.x();
      if (t <= 0.0) continue;
      const double y = oy + t * dy, z = oz + t * dz;
      if (y * y + z * z <= r * r && (!best || t < *best)) best = t;
    }
  }
  return best;
}

inline std::vector<Eigen::Vector3d> bounding_corners(const ObjectSpec& obj) {
  const Footprint f = object_footprint(obj);
  std::vector<Eigen::Vector3d> out;
  const Eigen::Vector2d ax = f.axis() * (f.half_length + f.radius);
  const Eigen::Vector2d nm = f.normal() * (f.half_width + f.radius);
  for (double sa : {-1.0, 1.0}) {
    for (double sn : {-1.0, 1.0}) {
      const Eigen::Vector2d xy = f.center + sa * ax + sn * nm;
      out.emplace_back(xy.x(), xy.y(), 0.0);
      out.emplace_back(xy.x(), xy.y(), obj.height());
    }
  }
  return out;
}

}  // namespace detail

/// Ray casts each pixel center against the floor and every object. Depth is
/// the z-depth of the nearest hit in the camera frame.
inline RenderedFrame render(const Scene& scene, const Intrinsics& k) {
  k.validate();
  const auto violations = validate_scene(scene);
  if (!violations.empty()) {
    throw Error(ErrorCode::InvalidScene, violations.front().message);
  }
  const double h = scene.camera.height();
  const CameraPose pose = CameraPose::from_scene(scene);

  RenderedFrame frame{LabelImage(k.width, k.height, Label::Unlabeled),
                      DepthImage(k.width, k.height, h),
                      InstanceImage(k.width, k.height, -1)};

  for (std::size_t idx = 0; idx < scene.objects.size(); ++idx) {
    const ObjectSpec& obj = scene.objects[idx];
    double umin = std::numeric_limits<double>::infinity(), umax = -umin;
    double vmin = umin, vmax = -umin;
    for (const auto& corner : detail::bounding_corners(obj)) {
      const Eigen::Vector2d px = project(pose.world_to_camera(corner), k);
      umin = std::min(umin, px.x());
      umax = std::max(umax, px.x());
      vmin = std::min(vmin, px.y());
      vmax = std::max(vmax, px.y());
    }
    const int u0 = std::max(0, static_cast<int>(std::floor(umin)) - 1);
    const int u1 = std::min(k.width - 1, static_cast<int>(std::ceil(umax)) + 1);
    const int v0 = std::max(0, static_cast<int>(std::floor(vmin)) - 1);
    const int v1 = std::min(k.height - 1, static_cast<int>(std::ceil(vmax)) + 1);
    const Label label = obj.object_class() == ObjectClass::Brick ? Label::Brick : Label::Pipe;

    for (int v = v0; v <= v1; ++v) {
      for (int u = u0; u <= u1; ++u) {
        const Eigen::Vector3d dir_cam((u - k.cx) / k.fx, (v - k.cy) / k.fy, 1.0);
        const Eigen::Vector3d dir = pose.rotation * dir_cam;
        const auto ray = detail::to_local(obj, pose.position, dir);
        const std::optional<double> t = std::visit(
            [&](const auto& dims) -> std::optional<double> {
              using T = std::decay_t<decltype(dims)>;
              if constexpr (std::is_same_v<T, BrickDims>) {
                return detail::intersect_box(ray, dims);
              } else {
                return detail::intersect_cylinder(ray, dims);
              }
            },
            obj.dims());
        if (t && *t < frame.depth(u, v)) {
          frame.depth(u, v) = *t;
          frame.labels(u, v) = label;
          frame.instances(u, v) = static_cast<std::int32_t>(idx);
        }
      }
    }
  }
  return frame;
}

struct DepthNoiseModel {
  double sigma = 0.0;
  double bias = 0.0;
  double dropout_prob = 0.0;

  void validate() const {
    if (!(sigma >= 0.0)) throw Error(ErrorCode::InvalidArgument, "sigma must be >= 0");
    if (!(dropout_prob >= 0.0 && dropout_prob <= 1.0)) {
      throw Error(ErrorCode::InvalidArgument, "dropout_prob must lie in [0, 1]");
    }
  }
};

/// Adds bias and Gaussian noise to every valid pixel, then drops pixels.
/// Pixels are visited in row-major order so the seed fixes the output.
inline DepthImage apply_noise(const DepthImage& d, const DepthNoiseModel& n, std::uint64_t seed) {
  n.validate();
  DepthImage out = d;
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  // Draws happen per valid pixel in row-major order; a zero sigma or zero
  // dropout skips its draw.
  const bool jitter = n.sigma > 0.0, dropout = n.dropout_prob > 0.0;
  for (auto& z : out.data()) {
    if (!is_valid_depth(z)) continue;
    const double noise = jitter ? gauss(gen) : 0.0;
    const double drop = dropout ? unit(gen) : 1.0;
    z = z + n.bias + n.sigma * noise;
    if (drop < n.dropout_prob) z = 0.0;
  }
  return out;
}

/// Adds a constant bias to the valid depths of one object's pixels.
inline void apply_object_bias(DepthImage& d, const InstanceImage& instances,
                              std::int32_t object_index, double bias) {
  if (!d.same_shape(instances)) throw Error(ErrorCode::InvalidArgument, "image shapes differ");
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (instances.data()[i] == object_index && is_valid_depth(d.data()[i])) d.data()[i] += bias;
  }
}

}  // namespace obstacle_removal
