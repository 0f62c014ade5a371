#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "obstacle_removal/digest.hpp"
#include "obstacle_removal/error.hpp"
#include "obstacle_removal/image.hpp"

namespace obstacle_removal {

/// Simulated network latency: one frame at 21 fps.
inline constexpr double kDefaultSegmentationLatency = 1.0 / 21.0;

/// Removes foreground pixels whose (2r+1)^2 square neighborhood is not
/// entirely the same class. Out-of-image neighbors count as background.
struct Erode {
  int radius = 1;
};

/// Removes each foreground pixel independently with probability `fraction`.
struct Holes {
  double fraction = 0.0;
  std::uint64_t seed = 0;
};

/// Clears a band of `width` pixels across the middle of one object's mask,
/// perpendicular to the mask's principal axis.
struct CutBand {
  std::string target;
  double width = 3.0;
};

/// Half-open pixel rectangle [u0, u1) x [v0, v1).
struct PixelRegion {
  int u0 = 0, v0 = 0, u1 = 0, v1 = 0;
};

/// Overwrites every pixel of a region with a class (including Unlabeled).
struct Relabel {
  PixelRegion region;
  Label label = Label::Unlabeled;
};

using CorruptionOp = std::variant<Erode, Holes, CutBand, Relabel>;

struct CorruptionSpec {
  std::vector<CorruptionOp> ops;

  bool empty() const noexcept { return ops.empty(); }

  void validate() const {
    for (const auto& op : ops) {
      if (const auto* e = std::get_if<Erode>(&op); e && e->radius < 0) {
        throw Error(ErrorCode::InvalidArgument, "erode radius must be >= 0");
      }
      if (const auto* h = std::get_if<Holes>(&op); h && !(h->fraction >= 0.0 && h->fraction < 1.0)) {
        throw Error(ErrorCode::InvalidArgument, "holes fraction must lie in [0, 1)");
      }
      if (const auto* c = std::get_if<CutBand>(&op); c && !(c->width > 0.0)) {
        throw Error(ErrorCode::InvalidArgument, "cut band width must be positive");
      }
      if (const auto* r = std::get_if<Relabel>(&op);
          r && (r->region.u1 < r->region.u0 || r->region.v1 < r->region.v0)) {
        throw Error(ErrorCode::InvalidArgument, "relabel region is inverted");
      }
    }
  }
};

/// Ground-truth object instances: per-pixel index into `ids`, -1 for floor.
struct InstanceLookup {
  const InstanceImage* image = nullptr;
  std::span<const std::string> ids;

  std::int32_t index_of(const std::string& id) const {
    for (std::size_t i = 0; i < ids.size(); ++i) {
      if (ids[i] == id) return static_cast<std::int32_t>(i);
    }
    return -1;
  }
};

struct SegmentationResult {
  LabelImage labels;
  double latency = kDefaultSegmentationLatency;
};

namespace detail {

inline void erode(LabelImage& labels, int radius) {
  if (radius == 0) return;
  const int w = labels.width(), h = labels.height();
  // Horizontal pass: row_ok(u,v) iff the 2r+1 run centered at u is in-image
  // and uniform in class.
  Image<std::uint8_t> row_ok(w, h, 0);
  for (int v = 0; v < h; ++v) {
    for (int u = radius; u + radius < w; ++u) {
      const Label c = labels(u, v);
      if (c == Label::Unlabeled) continue;
      bool ok = true;
      for (int du = -radius; du <= radius && ok; ++du) ok = labels(u + du, v) == c;
      row_ok(u, v) = ok;
    }
  }
  LabelImage out = labels;
  for (int v = 0; v < h; ++v) {
    for (int u = 0; u < w; ++u) {
      const Label c = labels(u, v);
      if (c == Label::Unlabeled) continue;
      bool ok = v - radius >= 0 && v + radius < h;
      for (int dv = -radius; dv <= radius && ok; ++dv) {
        ok = row_ok(u, v + dv) && labels(u, v + dv) == c;
      }
      if (!ok) out(u, v) = Label::Unlabeled;
    }
  }
  labels = std::move(out);
}

inline void holes(LabelImage& labels, const Holes& op, std::uint64_t seed) {
  std::mt19937_64 gen(mix_seed(seed, op.seed));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (auto& l : labels.data()) {
    if (l == Label::Unlabeled) continue;
    if (unit(gen) < op.fraction) l = Label::Unlabeled;
  }
}

inline void cut_band(LabelImage& labels, const CutBand& op, const InstanceLookup* instances) {
  if (instances == nullptr || instances->image == nullptr) {
    throw Error(ErrorCode::UnknownObjectId, op.target + " (no instance map supplied)");
  }
  const InstanceImage& inst = *instances->image;
  const std::int32_t idx = instances->index_of(op.target);
  std::vector<Pixel> pixels;
  for (int v = 0; v < labels.height(); ++v) {
    for (int u = 0; u < labels.width(); ++u) {
      if (inst(u, v) == idx && idx >= 0 && labels(u, v) != Label::Unlabeled) pixels.push_back({u, v});
    }
  }
  if (pixels.empty()) throw Error(ErrorCode::UnknownObjectId, op.target + " has no pixels");

  double mu = 0.0, mv = 0.0;
  for (const auto& p : pixels) {
    mu += p.u;
    mv += p.v;
  }
  mu /= pixels.size();
  mv /= pixels.size();
  double suu = 0.0, svv = 0.0, suv = 0.0;
  for (const auto& p : pixels) {
    suu += (p.u - mu) * (p.u - mu);
    svv += (p.v - mv) * (p.v - mv);
    suv += (p.u - mu) * (p.v - mv);
  }
  const double angle = 0.5 * std::atan2(2.0 * suv, suu - svv);
  const double au = std::cos(angle), av = std::sin(angle);
  for (const auto& p : pixels) {
    if (std::abs((p.u - mu) * au + (p.v - mv) * av) <= 0.5 * op.width) {
      labels(p.u, p.v) = Label::Unlabeled;
    }
  }
}

inline void relabel(LabelImage& labels, const Relabel& op) {
  const int u0 = std::max(0, op.region.u0), u1 = std::min(labels.width(), op.region.u1);
  const int v0 = std::max(0, op.region.v0), v1 = std::min(labels.height(), op.region.v1);
  for (int v = v0; v < v1; ++v) {
    for (int u = u0; u < u1; ++u) labels(u, v) = op.label;
  }
}

}  // namespace detail

/// Stand-in for the segmentation network: the ground-truth labels with the
/// corruption operators applied in order.
inline SegmentationResult segment(const LabelImage& gt, const CorruptionSpec& spec,
                                  std::uint64_t seed, const InstanceLookup* instances = nullptr,
                                  double latency = kDefaultSegmentationLatency) {
  spec.validate();
  if (!(latency >= 0.0)) throw Error(ErrorCode::InvalidArgument, "latency must be >= 0");
  if (instances && instances->image && !instances->image->same_shape(gt)) {
    throw Error(ErrorCode::InvalidArgument, "instance map shape differs from labels");
  }
  SegmentationResult result{gt, latency};
  for (const auto& op : spec.ops) {
    std::visit(
        [&](const auto& o) {
          using T = std::decay_t<decltype(o)>;
          if constexpr (std::is_same_v<T, Erode>) {
            detail::erode(result.labels, o.radius);
          } else if constexpr (std::is_same_v<T, Holes>) {
            detail::holes(result.labels, o, seed);
          } else if constexpr (std::is_same_v<T, CutBand>) {
            detail::cut_band(result.labels, o, instances);
          } else {
            detail::relabel(result.labels, o);
          }
        },
        op);
  }
  return result;
}

/// Margin, in pixels, by which the object's bounding box is grown for IoU.
inline constexpr int kIouMargin = 2;

/// IoU of the object's class between `pred` and `gt`, counted inside the
/// object's bounding box grown by kIouMargin pixels.
inline double mask_iou(const LabelImage& pred, const LabelImage& gt, std::span<const Pixel> object,
                       Label cls) {
  if (!pred.same_shape(gt)) throw Error(ErrorCode::InvalidArgument, "image shapes differ");
  if (object.empty()) throw Error(ErrorCode::EmptyUnion, "object pixel set is empty");
  if (cls == Label::Unlabeled) throw Error(ErrorCode::InvalidArgument, "class must be foreground");
  int u0 = object.front().u, u1 = u0, v0 = object.front().v, v1 = v0;
  for (const auto& p : object) {
    u0 = std::min(u0, p.u);
    u1 = std::max(u1, p.u);
    v0 = std::min(v0, p.v);
    v1 = std::max(v1, p.v);
  }
  u0 = std::max(0, u0 - kIouMargin);
  v0 = std::max(0, v0 - kIouMargin);
  u1 = std::min(gt.width() - 1, u1 + kIouMargin);
  v1 = std::min(gt.height() - 1, v1 + kIouMargin);
  std::size_t inter = 0, uni = 0;
  for (int v = v0; v <= v1; ++v) {
    for (int u = u0; u <= u1; ++u) {
      const bool a = pred(u, v) == cls, b = gt(u, v) == cls;
      inter += a && b;
      uni += a || b;
    }
  }
  if (uni == 0) throw Error(ErrorCode::EmptyUnion, "both masks are empty");
  return static_cast<double>(inter) / static_cast<double>(uni);
}

/// Same, with the class taken from `gt` at the object's first pixel.
inline double mask_iou(const LabelImage& pred, const LabelImage& gt, std::span<const Pixel> object) {
  if (object.empty()) throw Error(ErrorCode::EmptyUnion, "object pixel set is empty");
  return mask_iou(pred, gt, object, gt(object.front().u, object.front().v));
}

}  // namespace obstacle_removal
