// Copyright Contributors to the splatblocks Project
// SPDX-License-Identifier: Apache-2.0
//
// Test-only oracles, kept independent of the implementation paths they
// check: a per-pixel brute-force compositor (no tiling, no cutoffs) and a
// direct windowed SSIM.

#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "splatblocks/camera.hpp"
#include "splatblocks/gaussian.hpp"
#include "splatblocks/metrics.hpp"
#include "splatblocks/renderer.hpp"
#include "splatblocks/rng.hpp"

namespace splat::testing {

// Full compositing sum per pixel: every projected splat in depth order,
// alpha threshold 0, no transmittance early-out, no tiles.
template <typename T>
Image3<T> brute_force_render(const GaussianScene& scene, const CameraView& cam,
                             const Vec3<T>& background, double resolution_scale = 1.0) {
  const Intrinsics intr = scale_intrinsics(intrinsics_of(cam), resolution_scale);
  const std::vector<Splat2D<T>> splats =
      project_scene<T>(scene, intr, cam.rotation, cam.translation);
  Image3<T> out(intr.height, intr.width);
  for (int y = 0; y < intr.height; ++y) {
    for (int x = 0; x < intr.width; ++x) {
      const Vec2<T> px(T(x) + T(0.5), T(y) + T(0.5));
      T transmittance = T(1);
      Vec3<T> color = Vec3<T>::Zero();
      for (const Splat2D<T>& s : splats) {
        const Vec2<T> d = px - s.mean2d;
        const T power = T(-0.5) * d.dot(s.cov2d_inv * d);
        const T alpha = std::min(T(1), s.opacity * std::exp(power));
        color += s.color * (alpha * transmittance);
        transmittance *= (T(1) - alpha);
      }
      out.set_pixel(y, x, color + transmittance * background);
    }
  }
  return out;
}

// Same compositing semantics as the production renderer (1/255 alpha cutoff,
// 1e-4 transmittance stop) but without tiles: iterate every splat at every
// pixel. Any deviation from the tiled path means tile culling dropped a
// contributing splat.
template <typename T>
Image3<T> untiled_render(const GaussianScene& scene, const CameraView& cam,
                         const Vec3<T>& background) {
  const Intrinsics intr = intrinsics_of(cam);
  const std::vector<Splat2D<T>> splats =
      project_scene<T>(scene, intr, cam.rotation, cam.translation);
  Image3<T> out(intr.height, intr.width);
  for (int y = 0; y < intr.height; ++y) {
    for (int x = 0; x < intr.width; ++x) {
      const Vec2<T> px(T(x) + T(0.5), T(y) + T(0.5));
      T transmittance = T(1);
      Vec3<T> color = Vec3<T>::Zero();
      for (const Splat2D<T>& s : splats) {
        const Vec2<T> d = px - s.mean2d;
        const T power = T(-0.5) * d.dot(s.cov2d_inv * d);
        if (power > T(0)) continue;
        const T alpha = s.opacity * std::exp(power);
        if (alpha < T(kAlphaCutoff)) continue;
        color += s.color * (alpha * transmittance);
        transmittance *= (T(1) - alpha);
        if (transmittance < T(kTransmittanceStop)) break;
      }
      const T alpha_total = T(1) - transmittance;
      out.set_pixel(y, x, alpha_total == T(0) ? background : Vec3<T>(color + transmittance * background));
    }
  }
  return out;
}

// Textbook per-window SSIM with the 11x11 Gaussian kernel, no separable
// shortcut; statistics in double.
template <typename T>
double reference_ssim(const Image3<T>& a, const Image3<T>& b) {
  constexpr int kWin = 11, kRad = 5;
  double kernel[kWin][kWin];
  double ksum = 0.0;
  for (int i = 0; i < kWin; ++i)
    for (int j = 0; j < kWin; ++j) {
      const double dy = i - kRad, dx = j - kRad;
      kernel[i][j] = std::exp(-(dx * dx + dy * dy) / (2.0 * 1.5 * 1.5));
      ksum += kernel[i][j];
    }
  for (int i = 0; i < kWin; ++i)
    for (int j = 0; j < kWin; ++j) kernel[i][j] /= ksum;

  const double c1 = 0.01 * 0.01, c2 = 0.03 * 0.03;
  double total = 0.0;
  for (int c = 0; c < 3; ++c) {
    double acc = 0.0;
    int64_t count = 0;
    for (Eigen::Index y = kRad; y + kRad < a.height(); ++y)
      for (Eigen::Index x = kRad; x + kRad < a.width(); ++x) {
        double ma = 0, mb = 0, maa = 0, mbb = 0, mab = 0;
        for (int i = 0; i < kWin; ++i)
          for (int j = 0; j < kWin; ++j) {
            const double w = kernel[i][j];
            const double va = a.ch[c](y + i - kRad, x + j - kRad);
            const double vb = b.ch[c](y + i - kRad, x + j - kRad);
            ma += w * va;
            mb += w * vb;
            maa += w * va * va;
            mbb += w * vb * vb;
            mab += w * va * vb;
          }
        const double var_a = maa - ma * ma, var_b = mbb - mb * mb, cov = mab - ma * mb;
        acc += ((2 * ma * mb + c1) * (2 * cov + c2)) /
               ((ma * ma + mb * mb + c1) * (var_a + var_b + c2));
        ++count;
      }
    total += acc / double(count);
  }
  return total / 3.0;
}

struct RandomSceneOptions {
  int count = 10;
  double position_radius = 1.0;
  double min_scale = 0.05, max_scale = 0.5;
  double min_opacity = 0.1, max_opacity = 0.9;
  bool higher_sh = false;
};

inline GaussianScene make_random_scene(Rng& rng, const RandomSceneOptions& opt = {}) {
  GaussianScene scene;
  for (int i = 0; i < opt.count; ++i) {
    GaussianPrimitive g;
    for (int a = 0; a < 3; ++a)
      g.position[a] = float(rng.uniform(-opt.position_radius, opt.position_radius));
    Eigen::Quaternionf q(float(rng.normal()), float(rng.normal()), float(rng.normal()),
                         float(rng.normal()));
    if (q.norm() < 1e-3f) q = Eigen::Quaternionf::Identity();
    g.rotation = q.normalized();
    for (int a = 0; a < 3; ++a) g.scale[a] = float(rng.uniform(opt.min_scale, opt.max_scale));
    g.opacity = float(rng.uniform(opt.min_opacity, opt.max_opacity));
    g.set_dc_color(Vec3f(float(rng.uniform(0.15, 0.85)), float(rng.uniform(0.15, 0.85)),
                         float(rng.uniform(0.15, 0.85))));
    if (opt.higher_sh)
      for (int c = 0; c < 3; ++c)
        for (int k = 1; k < kShCoeffs; ++k) g.sh(c, k) = float(0.05 * rng.normal());
    scene.primitives.push_back(g);
  }
  return scene;
}

// Camera at `eye` looking at `target`, z-up world.
inline CameraView make_camera(int id, const Vec3d& eye, const Vec3d& target, int width, int height,
                              double focal) {
  CameraView cam;
  cam.id = id;
  cam.width = width;
  cam.height = height;
  cam.fx = cam.fy = focal;
  cam.cx = width / 2.0;
  cam.cy = height / 2.0;
  Vec3d up(0, 0, 1);
  Vec3d back = (eye - target).normalized();
  if (std::abs(back.dot(up)) > 0.99) up = Vec3d(0, 1, 0);
  const Vec3d right = up.cross(back).normalized();
  const Vec3d cam_up = back.cross(right);
  cam.rotation.row(0) = right;
  cam.rotation.row(1) = cam_up;
  cam.rotation.row(2) = back;
  cam.translation = -cam.rotation * eye;
  return cam;
}

// Camera on the -z world axis looking toward +z... identity rotation looks
// down world -z, so scenes placed at negative z are visible.
inline CameraView make_identity_camera(int id, int width, int height, double focal) {
  CameraView cam;
  cam.id = id;
  cam.width = width;
  cam.height = height;
  cam.fx = cam.fy = focal;
  cam.cx = width / 2.0;
  cam.cy = height / 2.0;
  return cam;
}

inline Image3f make_pattern_image(int height, int width, int phase = 0) {
  Image3f img(height, width);
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < height; ++y)
      for (int x = 0; x < width; ++x)
        img.ch[c](y, x) =
            float(0.5 + 0.25 * std::sin(0.31 * x + 0.47 * y + 0.9 * c + 0.7 * phase));
  return img;
}

}  // namespace splat::testing
