// Copyright Contributors to the splatblocks Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "splatblocks/camera.hpp"
#include "splatblocks/types.hpp"

namespace splat {

template <typename T>
struct DNormalResult {
  Image3<T> normal;  // view frame; (0,0,-1) faces the camera
  Mask valid;
};

// Surface normals from a rendered depth map: back-project each pixel to a
// view-frame 3D point and take the normalized cross product of the vertical
// and horizontal finite differences. Central differences inside, one-sided
// at the image border. Pixels whose stencil touches the zero depth sentinel
// are masked invalid with a zero normal.
template <typename T>
DNormalResult<T> depth_to_dnormal(const ImagePlane<T>& depth, const Intrinsics& intr) {
  const Eigen::Index h = depth.rows(), w = depth.cols();
  DNormalResult<T> res;
  res.normal.resize(h, w);
  res.valid.setZero(h, w);

  const auto back_project = [&](Eigen::Index y, Eigen::Index x) -> Vec3<T> {
    const T d = depth(y, x);
    const T u = T(x) + T(0.5), v = T(y) + T(0.5);
    return {(u - T(intr.cx)) / T(intr.fx) * d, (v - T(intr.cy)) / T(intr.fy) * d, d};
  };

  for (Eigen::Index y = 0; y < h; ++y) {
    for (Eigen::Index x = 0; x < w; ++x) {
      const Eigen::Index xl = x > 0 ? x - 1 : x;
      const Eigen::Index xr = x + 1 < w ? x + 1 : x;
      const Eigen::Index yu = y > 0 ? y - 1 : y;
      const Eigen::Index yd = y + 1 < h ? y + 1 : y;
      if (xl == xr || yu == yd) continue;  // 1-pixel axis, no gradient
      if (depth(y, xl) <= T(0) || depth(y, xr) <= T(0) || depth(yu, x) <= T(0) ||
          depth(yd, x) <= T(0) || depth(y, x) <= T(0))
        continue;
      const Vec3<T> grad_h = back_project(y, xr) - back_project(y, xl);
      const Vec3<T> grad_v = back_project(yd, x) - back_project(yu, x);
      Vec3<T> n = grad_v.cross(grad_h);
      const T len = n.norm();
      if (len < T(1e-12)) continue;
      res.normal.set_pixel(y, x, n / len);
      res.valid(y, x) = 1;
    }
  }
  return res;
}

}  // namespace splat
