#pragma once

#include <numbers>

#include "obstacle_removal/config.hpp"

namespace obstacle_removal {

/// The built-in ten-object run: five bricks and five pipes along an 8 m
/// drive. Three objects carry an injected defect:
///   pipe-edge   sits near the outer edge of the reach envelope, in reach
///               from the first frame;
///   brick-bias  is seen 2 cm too deep;
///   brick-cut   has a band cut through its mask by the segmentation stage.
inline SimulationConfig builtin_benchmark_config(bool adaptive_order = false) {
  constexpr double deg = std::numbers::pi / 180.0;
  SimulationConfig cfg;
  cfg.seed = 21;
  cfg.noise.sigma = 0.001;
  cfg.arm.adaptive_order = adaptive_order;
  cfg.ugv.start = {0.0, 0.0};
  cfg.ugv.end = {7.8, 0.0};

  const BrickDims brick;
  const PipeDims pipe;
  cfg.objects = {
      ObjectSpec::pipe("pipe-edge", pipe, {0.628, 0.49, 0.0}),
      ObjectSpec::brick("brick-1", brick, {1.70, -0.35, 10.0 * deg}),
      ObjectSpec::pipe("pipe-1", pipe, {2.40, -0.32, -30.0 * deg}),
      ObjectSpec::brick("brick-bias", brick, {3.10, -0.38, 90.0 * deg}),
      ObjectSpec::pipe("pipe-2", pipe, {3.80, -0.35, 20.0 * deg}),
      ObjectSpec::brick("brick-cut", brick, {4.50, -0.33, 0.0}),
      ObjectSpec::pipe("pipe-3", pipe, {5.20, -0.37, 45.0 * deg}),
      ObjectSpec::brick("brick-2", brick, {5.90, -0.35, -60.0 * deg}),
      ObjectSpec::pipe("pipe-4", pipe, {6.60, -0.34, -10.0 * deg}),
      ObjectSpec::brick("brick-3", brick, {7.30, -0.36, 35.0 * deg}),
  };
  cfg.object_depth_bias["brick-bias"] = 0.02;
  cfg.corruptions.ops.push_back(CutBand{"brick-cut", 15.0});
  return cfg;
}

}  // namespace obstacle_removal
