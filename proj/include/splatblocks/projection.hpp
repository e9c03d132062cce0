// Copyright Contributors to the splatblocks Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <optional>

#include "splatblocks/camera.hpp"
#include "splatblocks/gaussian.hpp"
#include "splatblocks/sh.hpp"
#include "splatblocks/types.hpp"

namespace splat {

inline constexpr double kNearPlane = 0.01;       // world units along the view axis
inline constexpr double kFrustumGuard = 1.3;     // image rect grown by this factor
inline constexpr double kLowPassFloor = 0.3;     // px^2 added to cov2d diagonal
inline constexpr double kAlphaCutoff = 1.0 / 255.0;
inline constexpr double kTransmittanceStop = 1e-4;

// Culling radius in sigmas: exp(-r^2/2) = kAlphaCutoff, so a splat culled
// from a tile can never contribute above the compositing cutoff.
inline const double kCullSigmas = std::sqrt(2.0 * std::log(255.0));

template <typename T>
struct Splat2D {
  int source_index = -1;
  Vec2<T> mean2d = Vec2<T>::Zero();
  Mat2<T> cov2d = Mat2<T>::Zero();      // includes the low-pass floor
  Mat2<T> cov2d_inv = Mat2<T>::Zero();
  T depth = T(0);                        // camera-space distance along the view axis
  Vec3<T> color = Vec3<T>::Zero();
  T opacity = T(0);
  T radius = T(0);                       // culling radius in pixels
};

// EWA-style perspective projection of one Gaussian. Returns nothing when the
// center is behind the near plane or the footprint lies entirely outside the
// guard-band frustum.
template <typename T>
std::optional<Splat2D<T>> project_gaussian(const GaussianPrimitive& g, const Intrinsics& intr,
                                           const Mat3d& world_to_cam, const Vec3d& cam_translation,
                                           int source_index) {
  const Mat3<T> rot = world_to_cam.cast<T>();
  const Vec3<T> p_cam = rot * g.position.cast<T>() + cam_translation.cast<T>();
  const T depth = -p_cam.z();
  if (!(depth > T(kNearPlane))) return std::nullopt;

  const T fx = T(intr.fx), fy = T(intr.fy);
  const Vec2<T> mean(fx * p_cam.x() / depth + T(intr.cx),
                     T(intr.cy) - fy * p_cam.y() / depth);

  // Tangents clamped to the guard band keep the Jacobian stable for splats
  // far outside the frustum.
  const T lim_x = T(kFrustumGuard) * T(0.5) * T(intr.width) / fx;
  const T lim_y = T(kFrustumGuard) * T(0.5) * T(intr.height) / fy;
  const T tx = std::min(lim_x, std::max(-lim_x, p_cam.x() / depth));
  const T ty = std::min(lim_y, std::max(-lim_y, p_cam.y() / depth));
  const T x = tx * depth, y = ty * depth;
  const T z = -depth;

  Eigen::Matrix<T, 2, 3> jac;
  jac << -fx / z, T(0), fx * x / (z * z),
         T(0), fy / z, -fy * y / (z * z);

  const Mat3<T> cov3d = g.covariance().template cast<T>();
  Mat2<T> cov2d = jac * rot * cov3d * rot.transpose() * jac.transpose();
  cov2d(0, 0) += T(kLowPassFloor);
  cov2d(1, 1) += T(kLowPassFloor);

  const T det = cov2d(0, 0) * cov2d(1, 1) - cov2d(0, 1) * cov2d(1, 0);
  if (!(det > T(0))) return std::nullopt;

  Splat2D<T> s;
  s.source_index = source_index;
  s.mean2d = mean;
  s.cov2d = cov2d;
  s.cov2d_inv << cov2d(1, 1) / det, -cov2d(0, 1) / det, -cov2d(1, 0) / det, cov2d(0, 0) / det;
  s.depth = depth;
  s.opacity = T(g.opacity);

  const T mid = T(0.5) * (cov2d(0, 0) + cov2d(1, 1));
  const T disc = std::sqrt(std::max(T(1e-12), mid * mid - det));
  s.radius = T(kCullSigmas) * std::sqrt(mid + disc);

  const T guard_x = (T(kFrustumGuard) - T(1)) * T(0.5) * T(intr.width);
  const T guard_y = (T(kFrustumGuard) - T(1)) * T(0.5) * T(intr.height);
  if (mean.x() + s.radius < -guard_x || mean.x() - s.radius > T(intr.width) + guard_x ||
      mean.y() + s.radius < -guard_y || mean.y() - s.radius > T(intr.height) + guard_y)
    return std::nullopt;

  const Vec3d cam_pos = -world_to_cam.transpose() * cam_translation;
  const Vec3<T> dir = (g.position.cast<T>() - cam_pos.cast<T>()).normalized();
  s.color = eval_sh<T>(g.sh.cast<T>(), dir);
  return s;
}

template <typename T>
std::optional<Splat2D<T>> project_gaussian(const GaussianPrimitive& g, const CameraView& cam,
                                           int source_index = -1) {
  return project_gaussian<T>(g, intrinsics_of(cam), cam.rotation, cam.translation, source_index);
}

}  // namespace splat
