#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Core>
#include <Eigen/LU>
#include <Eigen/SVD>

#include "obstacle_removal/camera.hpp"
#include "obstacle_removal/error.hpp"
#include "obstacle_removal/image.hpp"
#include "obstacle_removal/scene.hpp"

namespace obstacle_removal {

enum class Frame { Camera, Arm, Robot, World };

inline std::string_view to_string(Frame f) {
  switch (f) {
    case Frame::Camera: return "camera";
    case Frame::Arm: return "arm";
    case Frame::Robot: return "robot";
    case Frame::World: return "world";
  }
  return "?";
}

/// A point tagged with the frame it is expressed in.
struct Point3 {
  Eigen::Vector3d p = Eigen::Vector3d::Zero();
  Frame frame = Frame::Camera;

  double x() const { return p.x(); }
  double y() const { return p.y(); }
  double z() const { return p.z(); }
};

inline void expect_frame(const Point3& p, Frame expected) {
  if (p.frame != expected) {
    throw Error(ErrorCode::FrameMismatch, "expected " + std::string(to_string(expected)) +
                                              " frame, got " + std::string(to_string(p.frame)));
  }
}

inline constexpr double kRotationTolerance = 1e-9;

/// Proper rigid motion x -> R x + t. Construction rejects non-orthonormal or
/// reflecting R.
class RigidTransform {
 public:
  RigidTransform() = default;
  RigidTransform(const Eigen::Matrix3d& rotation, const Eigen::Vector3d& translation)
      : rotation_(rotation), translation_(translation) {
    const double ortho = (rotation_.transpose() * rotation_ - Eigen::Matrix3d::Identity())
                             .cwiseAbs()
                             .maxCoeff();
    if (!(ortho <= kRotationTolerance) ||
        !(std::abs(rotation_.determinant() - 1.0) <= kRotationTolerance)) {
      throw Error(ErrorCode::InvalidRotation, "R must be orthonormal with det(R) = +1");
    }
  }

  static RigidTransform identity() { return {}; }

  const Eigen::Matrix3d& rotation() const noexcept { return rotation_; }
  const Eigen::Vector3d& translation() const noexcept { return translation_; }

  Eigen::Vector3d apply(const Eigen::Vector3d& p) const { return rotation_ * p + translation_; }

 private:
  Eigen::Matrix3d rotation_ = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation_ = Eigen::Vector3d::Zero();
};

inline RigidTransform invert(const RigidTransform& T) {
  const Eigen::Matrix3d rt = T.rotation().transpose();
  return {rt, -rt * T.translation()};
}

/// compose(A, B) applies B first, then A.
inline RigidTransform compose(const RigidTransform& A, const RigidTransform& B) {
  return {A.rotation() * B.rotation(), A.rotation() * B.translation() + A.translation()};
}

/// P_arm = R * P_cam + t.
inline Point3 transform_to_arm(const Point3& p, const RigidTransform& T) {
  expect_frame(p, Frame::Camera);
  return {T.apply(p.p), Frame::Arm};
}

inline Point3 transform_to_camera(const Point3& p, const RigidTransform& T) {
  expect_frame(p, Frame::Arm);
  return {invert(T).apply(p.p), Frame::Camera};
}

/// Ground-truth camera -> arm transform implied by the UGV mounts.
inline RigidTransform camera_to_arm(const Scene& scene) {
  const Eigen::Matrix3d arm_to_robot = yaw_rotation(scene.arm.yaw);
  const Eigen::Matrix3d r = arm_to_robot.transpose() * nadir_camera_to_robot();
  const Eigen::Vector3d t = arm_to_robot.transpose() * (scene.camera.position - scene.arm.position);
  return {r, t};
}

/// Robot-frame -> arm-frame transform.
inline RigidTransform robot_to_arm(const Scene& scene) {
  const Eigen::Matrix3d arm_to_robot = yaw_rotation(scene.arm.yaw);
  return {arm_to_robot.transpose(), -arm_to_robot.transpose() * scene.arm.position};
}

struct Correspondence {
  Eigen::Vector3d camera;
  Eigen::Vector3d arm;
};

inline constexpr double kCollinearTolerance = 1e-9;

/// Least-squares rigid registration (Kabsch): SVD of the cross-covariance
/// with a reflection correction.
inline RigidTransform estimate_rigid_transform(std::span<const Correspondence> pairs) {
  if (pairs.size() < 3) {
    throw Error(ErrorCode::TooFewPoints, "need at least 3 correspondences, got " +
                                             std::to_string(pairs.size()));
  }
  Eigen::Vector3d cc = Eigen::Vector3d::Zero(), ca = Eigen::Vector3d::Zero();
  for (const auto& pr : pairs) {
    cc += pr.camera;
    ca += pr.arm;
  }
  cc /= static_cast<double>(pairs.size());
  ca /= static_cast<double>(pairs.size());

  // Rotation about the line through collinear points is unobservable.
  Eigen::Matrix3d scatter = Eigen::Matrix3d::Zero();
  for (const auto& pr : pairs) scatter += (pr.camera - cc) * (pr.camera - cc).transpose();
  Eigen::JacobiSVD<Eigen::Matrix3d> line_fit(scatter, Eigen::ComputeFullU);
  const Eigen::Vector3d dir = line_fit.matrixU().col(0);
  double max_off_line = 0.0;
  for (const auto& pr : pairs) {
    const Eigen::Vector3d d = pr.camera - cc;
    max_off_line = std::max(max_off_line, (d - d.dot(dir) * dir).norm());
  }
  if (max_off_line <= kCollinearTolerance) {
    throw Error(ErrorCode::DegenerateConfiguration, "camera-frame points are collinear");
  }

  Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
  for (const auto& pr : pairs) cov += (pr.camera - cc) * (pr.arm - ca).transpose();
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(cov, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Eigen::Matrix3d& U = svd.matrixU();
  const Eigen::Matrix3d& V = svd.matrixV();
  Eigen::Vector3d signs(1.0, 1.0, (V * U.transpose()).determinant() < 0.0 ? -1.0 : 1.0);
  const Eigen::Matrix3d R = V * signs.asDiagonal() * U.transpose();
  return {R, ca - R * cc};
}

inline double rms_residual(const RigidTransform& T, std::span<const Correspondence> pairs) {
  if (pairs.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& pr : pairs) sum += (T.apply(pr.camera) - pr.arm).squaredNorm();
  return std::sqrt(sum / static_cast<double>(pairs.size()));
}

/// Minimum component area in pixels; smaller blobs are speckle.
inline constexpr int kMinComponentArea = 25;

struct PixelBox {
  int u0 = 0, v0 = 0, u1 = 0, v1 = 0;  // inclusive
};

struct MaskComponent {
  ObjectClass object_class = ObjectClass::Brick;
  std::vector<Pixel> pixels;  // in discovery (BFS) order
  PixelBox box;

  int area() const noexcept { return static_cast<int>(pixels.size()); }
  Pixel seed() const { return pixels.front(); }

  bool touches_border(int width, int height) const {
    return box.u0 == 0 || box.v0 == 0 || box.u1 == width - 1 || box.v1 == height - 1;
  }
};

inline Label to_label(ObjectClass c) { return c == ObjectClass::Brick ? Label::Brick : Label::Pipe; }

/// 8-connected components of one class with area >= min_area, ordered by
/// their topmost-leftmost (seed) pixel.
inline std::vector<MaskComponent> connected_components(const LabelImage& labels, ObjectClass cls,
                                                       int min_area = kMinComponentArea) {
  const Label target = to_label(cls);
  const int w = labels.width(), h = labels.height();
  Image<std::uint8_t> visited(w, h, 0);
  std::vector<MaskComponent> out;
  std::vector<Pixel> queue;
  for (int v = 0; v < h; ++v) {
    for (int u = 0; u < w; ++u) {
      if (visited(u, v) || labels(u, v) != target) continue;
      MaskComponent comp;
      comp.object_class = cls;
      comp.box = {u, v, u, v};
      queue.assign(1, {u, v});
      visited(u, v) = 1;
      for (std::size_t head = 0; head < queue.size(); ++head) {
        const Pixel p = queue[head];
        comp.box.u0 = std::min(comp.box.u0, p.u);
        comp.box.u1 = std::max(comp.box.u1, p.u);
        comp.box.v0 = std::min(comp.box.v0, p.v);
        comp.box.v1 = std::max(comp.box.v1, p.v);
        for (int dv = -1; dv <= 1; ++dv) {
          for (int du = -1; du <= 1; ++du) {
            const int nu = p.u + du, nv = p.v + dv;
            if (!labels.contains(nu, nv) || visited(nu, nv) || labels(nu, nv) != target) continue;
            visited(nu, nv) = 1;
            queue.push_back({nu, nv});
          }
        }
      }
      comp.pixels = queue;
      if (comp.area() >= min_area) out.push_back(std::move(comp));
    }
  }
  return out;
}

/// Depth band around the median that counts as the object's upper surface
/// when locating the mask center; excludes side faces seen off-nadir.
inline constexpr double kTopSurfaceBand = 0.005;

inline double median(std::vector<double> values) {
  if (values.empty()) throw Error(ErrorCode::InvalidArgument, "median of empty set");
  const std::size_t mid = values.size() / 2;
  std::nth_element(values.begin(), values.begin() + mid, values.end());
  const double upper = values[mid];
  if (values.size() % 2 == 1) return upper;
  const double lower = *std::max_element(values.begin(), values.begin() + mid);
  return 0.5 * (lower + upper);
}

/// Camera-frame center of a mask: median depth of its valid pixels, placed at
/// the mean pixel of the pixels lying on the upper surface (within
/// kTopSurfaceBand of that median).
inline Point3 component_center_3d(const MaskComponent& c, const DepthImage& d, const Intrinsics& k) {
  if (c.pixels.empty()) throw Error(ErrorCode::InvalidArgument, "empty component");
  std::vector<double> depths;
  depths.reserve(c.pixels.size());
  for (const auto& p : c.pixels) {
    const double z = d(p.u, p.v);
    if (is_valid_depth(z)) depths.push_back(z);
  }
  if (2 * depths.size() < c.pixels.size()) {
    throw Error(ErrorCode::InsufficientDepth, std::to_string(depths.size()) + " of " +
                                                  std::to_string(c.pixels.size()) +
                                                  " pixels have valid depth");
  }
  const double zc = median(depths);
  double su = 0.0, sv = 0.0;
  std::size_t n = 0;
  for (const auto& p : c.pixels) {
    const double z = d(p.u, p.v);
    if (is_valid_depth(z) && std::abs(z - zc) <= kTopSurfaceBand) {
      su += p.u;
      sv += p.v;
      ++n;
    }
  }
  if (n == 0) {
    for (const auto& p : c.pixels) {
      if (!is_valid_depth(d(p.u, p.v))) continue;
      su += p.u;
      sv += p.v;
      ++n;
    }
  }
  return {backproject(su / n, sv / n, zc, k), Frame::Camera};
}

namespace detail {

struct IPoint {
  std::int64_t x, y;
  friend auto operator<=>(const IPoint&, const IPoint&) = default;
};

inline std::int64_t cross(const IPoint& o, const IPoint& a, const IPoint& b) {
  return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

// Andrew's monotone chain; collinear points dropped.
inline std::vector<IPoint> convex_hull(std::vector<IPoint> pts) {
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  if (pts.size() < 3) return pts;
  std::vector<IPoint> hull(2 * pts.size());
  std::size_t k = 0;
  for (const auto& p : pts) {
    while (k >= 2 && cross(hull[k - 2], hull[k - 1], p) <= 0) --k;
    hull[k++] = p;
  }
  for (std::size_t i = pts.size() - 1, t = k + 1; i-- > 0;) {
    while (k >= t && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
    hull[k++] = pts[i];
  }
  hull.resize(k - 1);
  return hull;
}

}  // namespace detail

/// Direction of the longer side of the minimum-area rectangle enclosing the
/// component's pixel squares, in image coordinates, in [0, pi). The optimal
/// rectangle has a side flush with a hull edge, so each hull edge is tried.
inline double principal_orientation(const MaskComponent& c) {
  if (c.pixels.empty()) throw Error(ErrorCode::InvalidArgument, "empty component");
  // Pixel corners in doubled integer coordinates (exact hull arithmetic).
  std::vector<detail::IPoint> corners;
  corners.reserve(4 * c.pixels.size());
  for (const auto& p : c.pixels) {
    for (int du : {-1, 1}) {
      for (int dv : {-1, 1}) corners.push_back({2 * p.u + du, 2 * p.v + dv});
    }
  }
  const auto hull = detail::convex_hull(std::move(corners));

  constexpr double kRel = 1e-9;
  double best_area = std::numeric_limits<double>::infinity();
  double best_angle = 0.0;
  for (std::size_t i = 0; i < hull.size(); ++i) {
    const auto& a = hull[i];
    const auto& b = hull[(i + 1) % hull.size()];
    Eigen::Vector2d e(static_cast<double>(b.x - a.x), static_cast<double>(b.y - a.y));
    e.normalize();
    const Eigen::Vector2d n(-e.y(), e.x());
    double emin = std::numeric_limits<double>::infinity(), emax = -emin, nmin = emin, nmax = -emin;
    for (const auto& q : hull) {
      const Eigen::Vector2d qp(static_cast<double>(q.x), static_cast<double>(q.y));
      emin = std::min(emin, qp.dot(e));
      emax = std::max(emax, qp.dot(e));
      nmin = std::min(nmin, qp.dot(n));
      nmax = std::max(nmax, qp.dot(n));
    }
    const double len_e = emax - emin, len_n = nmax - nmin;
    const double area = len_e * len_n;
    const double angle_e = normalize_axis_angle(std::atan2(e.y(), e.x()));
    const double angle_n = normalize_axis_angle(std::atan2(n.y(), n.x()));
    double angle;
    if (std::abs(len_e - len_n) <= kRel * std::max(len_e, len_n)) {
      angle = std::min(angle_e, angle_n);
    } else {
      angle = len_e > len_n ? angle_e : angle_n;
    }
    if (area < best_area * (1.0 - kRel)) {
      best_area = area;
      best_angle = angle;
    } else if (area <= best_area * (1.0 + kRel) && angle < best_angle) {
      best_angle = angle;
    }
  }
  return best_angle;
}

/// Maps an image-plane axis angle into an undirected yaw about the arm z-axis.
inline double orientation_to_arm(double theta_img, const RigidTransform& T) {
  const Eigen::Vector3d d = T.rotation() * Eigen::Vector3d(std::cos(theta_img), std::sin(theta_img), 0.0);
  if (std::hypot(d.x(), d.y()) < 1e-6) {
    throw Error(ErrorCode::IllConditioned, "image direction is vertical in the arm frame");
  }
  return normalize_axis_angle(std::atan2(d.y(), d.x()));
}

/// Annular reach shell around the arm base, closed at every boundary.
struct ReachEnvelope {
  double r_min = 0.25;
  double r_max = 0.90;
  double z_min = -0.20;
  double z_max = 0.50;

  void validate() const {
    if (!(r_min >= 0.0 && r_min < r_max)) throw Error(ErrorCode::InvalidArgument, "need 0 <= r_min < r_max");
    if (!(z_min < z_max)) throw Error(ErrorCode::InvalidArgument, "need z_min < z_max");
  }
};

inline double horizontal_radius(const Point3& p) { return std::hypot(p.x(), p.y()); }

inline bool in_reach(const Point3& p, const ReachEnvelope& env) {
  expect_frame(p, Frame::Arm);
  const double r = horizontal_radius(p);
  return r >= env.r_min && r <= env.r_max && p.z() >= env.z_min && p.z() <= env.z_max;
}

struct GraspTarget {
  Point3 center{Eigen::Vector3d::Zero(), Frame::Arm};
  double yaw = 0.0;  // [0, pi), arm frame
  ObjectClass object_class = ObjectClass::Brick;
  int component_id = 0;
  std::uint64_t frame_seq = 0;
};

/// One described mask: its grasp target plus the gating facts the control
/// stage needs.
struct TargetCandidate {
  GraspTarget target;
  int area = 0;
  Pixel seed;
  bool clipped = false;  // mask touches the image border
  bool reachable = false;
  double horizontal_distance = 0.0;
};

/// Geometry descriptor stage: every component of both classes becomes a
/// candidate target. Components lacking valid depth are dropped.
inline std::vector<TargetCandidate> describe_targets(const LabelImage& labels, const DepthImage& depth,
                                                     const Intrinsics& k, const RigidTransform& cam_to_arm,
                                                     const ReachEnvelope& env, std::uint64_t frame_seq) {
  std::vector<MaskComponent> comps = connected_components(labels, ObjectClass::Brick);
  auto pipes = connected_components(labels, ObjectClass::Pipe);
  comps.insert(comps.end(), std::make_move_iterator(pipes.begin()), std::make_move_iterator(pipes.end()));
  std::stable_sort(comps.begin(), comps.end(), [](const MaskComponent& a, const MaskComponent& b) {
    return std::pair(a.seed().v, a.seed().u) < std::pair(b.seed().v, b.seed().u);
  });

  std::vector<TargetCandidate> out;
  for (std::size_t i = 0; i < comps.size(); ++i) {
    const auto& comp = comps[i];
    Point3 center_cam;
    try {
      center_cam = component_center_3d(comp, depth, k);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::InsufficientDepth) continue;
      throw;
    }
    TargetCandidate cand;
    cand.target.center = transform_to_arm(center_cam, cam_to_arm);
    cand.target.yaw = orientation_to_arm(principal_orientation(comp), cam_to_arm);
    cand.target.object_class = comp.object_class;
    cand.target.component_id = static_cast<int>(i);
    cand.target.frame_seq = frame_seq;
    cand.area = comp.area();
    cand.seed = comp.seed();
    cand.clipped = comp.touches_border(labels.width(), labels.height());
    cand.reachable = in_reach(cand.target.center, env);
    cand.horizontal_distance = horizontal_radius(cand.target.center);
    out.push_back(cand);
  }
  return out;
}

}  // namespace obstacle_removal
