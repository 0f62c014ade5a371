#pragma once

#include <cstddef>
#include <cstdint>
#include <cstring>
#include <type_traits>
#include <utility>
#include <vector>

#include "obstacle_removal/error.hpp"

namespace obstacle_removal {

/// Row-major width x height grid. Pixel (u, v) has its center at integer
/// coordinates; u indexes columns, v indexes rows.
template <typename T>
class Image {
 public:
  Image() = default;
  Image(int width, int height, T fill = T{})
      : width_(width), height_(height) {
    if (width <= 0 || height <= 0) {
      throw Error(ErrorCode::InvalidArgument, "image dimensions must be positive");
    }
    data_.assign(static_cast<std::size_t>(width) * height, fill);
  }

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t size() const noexcept { return data_.size(); }

  bool contains(int u, int v) const noexcept {
    return u >= 0 && v >= 0 && u < width_ && v < height_;
  }

  T& operator()(int u, int v) { return data_[index(u, v)]; }
  const T& operator()(int u, int v) const { return data_[index(u, v)]; }

  std::size_t index(int u, int v) const noexcept {
    return static_cast<std::size_t>(v) * width_ + u;
  }

  std::vector<T>& data() noexcept { return data_; }
  const std::vector<T>& data() const noexcept { return data_; }

  template <typename U>
  bool same_shape(const Image<U>& other) const noexcept {
    return width_ == other.width() && height_ == other.height();
  }

  friend bool operator==(const Image&, const Image&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<T> data_;
};

enum class Label : std::uint8_t { Unlabeled = 0, Brick = 1, Pipe = 2 };

using DepthImage = Image<double>;
using LabelImage = Image<Label>;
// Ground-truth object index per pixel (into Scene::objects), -1 for floor.
using InstanceImage = Image<std::int32_t>;

inline bool is_valid_depth(double z) noexcept { return z > 0.0; }

/// Lossless run-length copy of an image; rendered frames are mostly long runs
/// of floor, so this is how the message log retains them.
template <typename T>
class RunLengthImage {
 public:
  RunLengthImage() = default;

  explicit RunLengthImage(const Image<T>& image) : width_(image.width()), height_(image.height()) {
    for (const T& value : image.data()) {
      if (!runs_.empty() && same_bits(runs_.back().first, value)) {
        ++runs_.back().second;
      } else {
        runs_.emplace_back(value, 1);
      }
    }
    // Noisy images do not compress; keep those verbatim.
    if (runs_.size() * sizeof(runs_.front()) >= image.size() * sizeof(T)) {
      runs_.clear();
      runs_.shrink_to_fit();
      raw_ = image.data();
    }
  }

  Image<T> decode() const {
    Image<T> out(width_, height_);
    if (!raw_.empty()) {
      out.data() = raw_;
      return out;
    }
    std::size_t i = 0;
    for (const auto& [value, count] : runs_) {
      for (std::uint32_t c = 0; c < count; ++c) out.data()[i++] = value;
    }
    return out;
  }

  /// Number of runs, or 0 when stored verbatim.
  std::size_t run_count() const noexcept { return runs_.size(); }
  bool stored_raw() const noexcept { return !raw_.empty(); }

 private:
  static bool same_bits(const T& a, const T& b) {
    if constexpr (std::is_floating_point_v<T>) {
      return std::memcmp(&a, &b, sizeof(T)) == 0;
    } else {
      return a == b;
    }
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<std::pair<T, std::uint32_t>> runs_;
  std::vector<T> raw_;
};

/// Integer pixel coordinate.
struct Pixel {
  int u = 0;
  int v = 0;
  friend bool operator==(const Pixel&, const Pixel&) = default;
};

}  // namespace obstacle_removal
