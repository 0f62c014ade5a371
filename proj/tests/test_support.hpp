#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Geometry>

#include "obstacle_removal/geometry.hpp"
#include "obstacle_removal/image.hpp"

namespace test_support {

using namespace obstacle_removal;

inline RigidTransform random_transform(std::mt19937_64& gen, double t_scale = 1.0) {
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::Quaterniond q(n(gen), n(gen), n(gen), n(gen));
  q.normalize();
  return {q.toRotationMatrix(), Eigen::Vector3d(n(gen), n(gen), n(gen)) * t_scale};
}

/// Pixels of a w x h rectangle centered at (cu, cv) rotated by `angle`,
/// sampled at pixel centers.
inline std::vector<Pixel> raster_rectangle(double cu, double cv, double w, double h, double angle) {
  std::vector<Pixel> out;
  const double c = std::cos(angle), s = std::sin(angle);
  const int r = static_cast<int>(std::ceil(std::hypot(w, h))) + 2;
  for (int v = static_cast<int>(cv) - r; v <= static_cast<int>(cv) + r; ++v) {
    for (int u = static_cast<int>(cu) - r; u <= static_cast<int>(cu) + r; ++u) {
      const double du = u - cu, dv = v - cv;
      const double a = du * c + dv * s, b = -du * s + dv * c;
      if (std::abs(a) <= 0.5 * w && std::abs(b) <= 0.5 * h) out.push_back({u, v});
    }
  }
  return out;
}

inline LabelImage paint(int width, int height, const std::vector<Pixel>& pixels, Label label) {
  LabelImage img(width, height, Label::Unlabeled);
  for (const auto& p : pixels) {
    if (img.contains(p.u, p.v)) img(p.u, p.v) = label;
  }
  return img;
}

/// Plain recursive-free flood fill with 8-connectivity: component sizes of
/// one label, in discovery order.
inline std::vector<int> flood_fill_sizes(const LabelImage& img, Label label) {
  Image<std::uint8_t> seen(img.width(), img.height(), 0);
  std::vector<int> sizes;
  for (int v = 0; v < img.height(); ++v) {
    for (int u = 0; u < img.width(); ++u) {
      if (seen(u, v) || img(u, v) != label) continue;
      int count = 0;
      std::vector<Pixel> stack{{u, v}};
      seen(u, v) = 1;
      while (!stack.empty()) {
        const Pixel p = stack.back();
        stack.pop_back();
        ++count;
        for (int dv = -1; dv <= 1; ++dv) {
          for (int du = -1; du <= 1; ++du) {
            const int nu = p.u + du, nv = p.v + dv;
            if (img.contains(nu, nv) && !seen(nu, nv) && img(nu, nv) == label) {
              seen(nu, nv) = 1;
              stack.push_back({nu, nv});
            }
          }
        }
      }
      sizes.push_back(count);
    }
  }
  return sizes;
}

}  // namespace test_support
