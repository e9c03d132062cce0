// Copyright Contributors to the splatblocks Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <optional>

#include "splatblocks/errors.hpp"
#include "splatblocks/types.hpp"

namespace splat {

// Camera convention (used everywhere in this repo):
//   * pose is world-to-camera: p_cam = rotation * p_world + translation
//   * camera frame: x right, y up, looking down -z (identity pose looks
//     down the world -z axis)
//   * image coordinates: u right, v down, pixel (i, j) samples at
//     (i + 0.5, j + 0.5); depth is distance along the viewing axis (-z)
//   * projection: u = fx * x / d + cx, v = cy - fy * y / d with d = -z
//
// Normal maps (priors and rendered) live in the image-aligned view frame:
// x along +u, y along +v, z along the viewing direction, so a surface
// facing the camera has normal (0, 0, -1).
struct CameraView {
  int id = -1;
  int width = 0;
  int height = 0;
  double fx = 0, fy = 0, cx = 0, cy = 0;
  Mat3d rotation = Mat3d::Identity();  // world-to-camera
  Vec3d translation = Vec3d::Zero();
  Image3f image;
  std::optional<Image3f> normal_prior;        // view-frame unit vectors
  std::optional<ImagePlane<float>> confidence;  // [0, 1]
  bool is_eval = false;

  Vec3d world_position() const { return -rotation.transpose() * translation; }

  // Map a camera-frame vector into the view frame (x=+u, y=+v, z=forward).
  static Vec3d camera_to_view(const Vec3d& v) { return {v.x(), -v.y(), -v.z()}; }
};

struct Intrinsics {
  double fx = 0, fy = 0, cx = 0, cy = 0;
  int width = 0, height = 0;
};

inline Intrinsics intrinsics_of(const CameraView& cam) {
  return {cam.fx, cam.fy, cam.cx, cam.cy, cam.width, cam.height};
}

// Scale intrinsics to a new resolution. Axis factors are derived from the
// rounded integer sizes so repeated calls stay consistent.
inline Intrinsics scale_intrinsics(const Intrinsics& in, double scale) {
  if (scale <= 0.0) throw ArgumentError("resolution scale must be positive");
  Intrinsics out;
  out.width = std::max(1, static_cast<int>(std::lround(in.width * scale)));
  out.height = std::max(1, static_cast<int>(std::lround(in.height * scale)));
  const double sx = static_cast<double>(out.width) / in.width;
  const double sy = static_cast<double>(out.height) / in.height;
  out.fx = in.fx * sx;
  out.cx = in.cx * sx;
  out.fy = in.fy * sy;
  out.cy = in.cy * sy;
  return out;
}

// Area-average resample (exact coverage weights). Used for producing
// reduced-resolution training targets; deterministic.
template <typename T>
ImagePlane<T> resize_plane(const ImagePlane<T>& src, Eigen::Index out_h, Eigen::Index out_w) {
  const Eigen::Index in_h = src.rows(), in_w = src.cols();
  ImagePlane<T> out(out_h, out_w);
  const double ry = static_cast<double>(in_h) / out_h;
  const double rx = static_cast<double>(in_w) / out_w;
  for (Eigen::Index oy = 0; oy < out_h; ++oy) {
    const double y0 = oy * ry, y1 = (oy + 1) * ry;
    for (Eigen::Index ox = 0; ox < out_w; ++ox) {
      const double x0 = ox * rx, x1 = (ox + 1) * rx;
      double acc = 0.0, area = 0.0;
      for (Eigen::Index iy = static_cast<Eigen::Index>(y0); iy < in_h && iy < y1; ++iy) {
        const double wy = std::min<double>(y1, iy + 1) - std::max<double>(y0, iy);
        if (wy <= 0) continue;
        for (Eigen::Index ix = static_cast<Eigen::Index>(x0); ix < in_w && ix < x1; ++ix) {
          const double wx = std::min<double>(x1, ix + 1) - std::max<double>(x0, ix);
          if (wx <= 0) continue;
          acc += wx * wy * static_cast<double>(src(iy, ix));
          area += wx * wy;
        }
      }
      out(oy, ox) = static_cast<T>(area > 0 ? acc / area : 0.0);
    }
  }
  return out;
}

template <typename T>
Image3<T> resize_image(const Image3<T>& src, Eigen::Index out_h, Eigen::Index out_w) {
  Image3<T> out;
  for (int c = 0; c < 3; ++c) out.ch[c] = resize_plane(src.ch[c], out_h, out_w);
  return out;
}

// Camera resampled to `scale`, including its image and optional prior maps.
// Normal priors are renormalized after resampling.
inline CameraView scale_camera(const CameraView& cam, double scale) {
  if (scale == 1.0) return cam;
  CameraView out = cam;
  const Intrinsics s = scale_intrinsics(intrinsics_of(cam), scale);
  out.width = s.width;
  out.height = s.height;
  out.fx = s.fx;
  out.fy = s.fy;
  out.cx = s.cx;
  out.cy = s.cy;
  if (cam.image.height() > 0) out.image = resize_image(cam.image, s.height, s.width);
  if (cam.normal_prior) {
    Image3f n = resize_image(*cam.normal_prior, s.height, s.width);
    for (Eigen::Index y = 0; y < n.height(); ++y) {
      for (Eigen::Index x = 0; x < n.width(); ++x) {
        Vec3f v = n.pixel(y, x);
        const float len = v.norm();
        n.set_pixel(y, x, len > 0.5f ? Vec3f(v / len) : Vec3f::Zero());
      }
    }
    out.normal_prior = std::move(n);
  }
  if (cam.confidence) out.confidence = resize_plane(*cam.confidence, s.height, s.width);
  return out;
}

}  // namespace splat
