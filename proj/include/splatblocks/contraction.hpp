// Copyright Contributors to the splatblocks Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <span>
#include <vector>

#include "splatblocks/camera.hpp"
#include "splatblocks/errors.hpp"
#include "splatblocks/gaussian.hpp"
#include "splatblocks/types.hpp"

namespace splat {

// Axis-aligned internal region: the box whose normalization maps it to
// [-1,1]^3.
struct SceneBounds {
  Vec3d min = Vec3d::Zero();
  Vec3d max = Vec3d::Zero();

  bool valid() const { return (max.array() > min.array()).all(); }
  Vec3d center() const { return 0.5 * (min + max); }
  Vec3d extent() const { return max - min; }
};

struct BoundsReport {
  int degenerate_axes = 0;
};

// Bounding box of camera positions, each half-extent grown by `margin`.
// Degenerate axes are widened by 1e-3 world units (reported as a warning).
inline SceneBounds compute_bounds(std::span<const CameraView> cameras, double margin,
                                  BoundsReport* report = nullptr) {
  if (cameras.size() < 2) throw ArgumentError("compute_bounds needs at least 2 cameras");
  SceneBounds b;
  b.min = cameras[0].world_position();
  b.max = b.min;
  for (const CameraView& cam : cameras.subspan(1)) {
    const Vec3d p = cam.world_position();
    b.min = b.min.cwiseMin(p);
    b.max = b.max.cwiseMax(p);
  }
  const Vec3d c = b.center();
  Vec3d half = 0.5 * b.extent() * (1.0 + margin);
  int degenerate = 0;
  for (int a = 0; a < 3; ++a) {
    if (half[a] <= 0.0) {
      half[a] = 1e-3;
      ++degenerate;
    }
  }
  if (report) report->degenerate_axes = degenerate;
  b.min = c - half;
  b.max = c + half;
  return b;
}

// Alternative internal region: per-axis percentile box of Gaussian positions.
inline SceneBounds compute_bounds_percentile(const GaussianScene& scene, double lo = 0.01,
                                             double hi = 0.99, double margin = 0.0) {
  if (scene.empty()) throw ArgumentError("empty scene");
  SceneBounds b;
  std::vector<double> axis(scene.size());
  for (int a = 0; a < 3; ++a) {
    for (size_t i = 0; i < scene.size(); ++i) axis[i] = scene[i].position[a];
    std::sort(axis.begin(), axis.end());
    const auto pick = [&](double q) {
      const double idx = q * static_cast<double>(axis.size() - 1);
      const size_t i0 = static_cast<size_t>(idx);
      const size_t i1 = std::min(axis.size() - 1, i0 + 1);
      const double t = idx - static_cast<double>(i0);
      return axis[i0] * (1.0 - t) + axis[i1] * t;
    };
    b.min[a] = pick(lo);
    b.max[a] = pick(hi);
  }
  const Vec3d c = b.center();
  Vec3d half = 0.5 * b.extent() * (1.0 + margin);
  for (int a = 0; a < 3; ++a) half[a] = std::max(half[a], 1e-3);
  b.min = c - half;
  b.max = c + half;
  return b;
}

// p_hat = 2 (p - min) / (max - min) - 1; maps the internal region to [-1,1]^3.
template <typename Derived>
Vec3<typename Derived::Scalar> normalize_position(const Eigen::MatrixBase<Derived>& p,
                                                  const SceneBounds& bounds) {
  using T = typename Derived::Scalar;
  const Vec3<T> mn = bounds.min.cast<T>();
  const Vec3<T> mx = bounds.max.cast<T>();
  return (T(2) * (p - mn).array() / (mx - mn).array() - T(1)).matrix();
}

template <typename Derived>
Vec3<typename Derived::Scalar> denormalize_position(const Eigen::MatrixBase<Derived>& p_hat,
                                                    const SceneBounds& bounds) {
  using T = typename Derived::Scalar;
  const Vec3<T> mn = bounds.min.cast<T>();
  const Vec3<T> mx = bounds.max.cast<T>();
  return (mn.array() + (p_hat.array() + T(1)) * T(0.5) * (mx - mn).array()).matrix();
}

// Identity on the unit infinity-norm ball; outside, compresses radially (in
// the infinity norm) onto the shell between 1 and 2. Output infinity norm is
// < 2 for all finite inputs and the map is continuous across the shell.
template <typename Derived>
Vec3<typename Derived::Scalar> contract(const Eigen::MatrixBase<Derived>& p_hat) {
  using T = typename Derived::Scalar;
  const T n = p_hat.template lpNorm<Eigen::Infinity>();
  if (n <= T(1)) return p_hat;
  return ((T(2) - T(1) / n) / n) * p_hat;
}

}  // namespace splat
