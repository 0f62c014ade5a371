#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <ostream>
#include <string>

#include "obstacle_removal/image.hpp"

namespace obstacle_removal {

using Rgb = std::array<std::uint8_t, 3>;

inline constexpr Rgb kBrickColor{200, 60, 40};
inline constexpr Rgb kPipeColor{40, 90, 200};
inline constexpr Rgb kUnlabeledColor{30, 30, 30};

inline Rgb palette(Label label) {
  switch (label) {
    case Label::Brick: return kBrickColor;
    case Label::Pipe: return kPipeColor;
    case Label::Unlabeled: break;
  }
  return kUnlabeledColor;
}

/// P5, maxval 65535, big-endian millimeters; invalid pixels are 0 and values
/// saturate at 65535.
inline void write_depth_pgm(std::ostream& os, const DepthImage& depth) {
  os << "P5\n" << depth.width() << ' ' << depth.height() << "\n65535\n";
  for (double z : depth.data()) {
    std::uint16_t mm = 0;
    if (is_valid_depth(z)) {
      const double scaled = std::round(z * 1000.0);
      mm = scaled >= 65535.0 ? 65535 : static_cast<std::uint16_t>(scaled);
    }
    const char bytes[2] = {static_cast<char>(mm >> 8), static_cast<char>(mm & 0xff)};
    os.write(bytes, 2);
  }
}

/// P6, maxval 255, flat class colors.
inline void write_label_ppm(std::ostream& os, const LabelImage& labels) {
  os << "P6\n" << labels.width() << ' ' << labels.height() << "\n255\n";
  for (Label l : labels.data()) {
    const Rgb c = palette(l);
    os.write(reinterpret_cast<const char*>(c.data()), 3);
  }
}

}  // namespace obstacle_removal
