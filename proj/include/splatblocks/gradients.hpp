// Copyright Contributors to the splatblocks Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <span>
#include <vector>

#include "splatblocks/errors.hpp"
#include "splatblocks/renderer.hpp"
#include "splatblocks/sh.hpp"

namespace splat {

template <typename T>
struct ColorOpacityGradients {
  // d loss / d sh.col(0) and d loss / d opacity, indexed by scene primitive;
  // only subset entries are accumulated.
  std::vector<Vec3<T>> d_dc;
  std::vector<T> d_opacity;
};

// Analytic gradients of the mean-L1 photometric term through the compositing
// sum, for DC color and opacity of the subset primitives. Per pixel,
//   dC/dc_k     = alpha_k T_k
//   dC/dsigma_k = G_k (c_k T_k - S_k / (1 - alpha_k))
// where S_k collects the suffix contributions behind k including the
// residual-background term and G_k = alpha_k / sigma_k. The 1/(1 - alpha)
// factor is evaluated with alpha clamped to 1 - 1e-4. Channels whose SH
// evaluation saturated the [0,1] clamp contribute no DC gradient.
template <typename T>
ColorOpacityGradients<T> gradients_color_opacity(const GaussianScene& scene,
                                                 std::span<const int> subset,
                                                 const CameraView& cam, const Image3<T>& target,
                                                 const RenderOutput<T>& rendered,
                                                 const RenderOptions& opts) {
  if (!rendered.has_traces)
    throw ArgumentError("gradients_color_opacity: render traces are required");
  const Eigen::Index h = rendered.height(), w = rendered.width();
  if (target.height() != h || target.width() != w)
    throw ArgumentError("gradients_color_opacity: target dimensions differ from render");

  ColorOpacityGradients<T> grads;
  grads.d_dc.assign(scene.size(), Vec3<T>::Zero());
  grads.d_opacity.assign(scene.size(), T(0));

  std::vector<uint8_t> in_subset(scene.size(), 0);
  for (int i : subset) in_subset[static_cast<size_t>(i)] = 1;

  // Per-splat view-dependent colors and clamp indicators, as composited.
  const Vec3d cam_pos = cam.world_position();
  std::vector<Vec3<T>> colors(scene.size());
  std::vector<Vec3<T>> clamp_open(scene.size());  // 1 where the clamp is inactive
  for (size_t i = 0; i < scene.size(); ++i) {
    const Vec3<T> dir = (scene[i].position.cast<T>() - cam_pos.cast<T>()).normalized();
    const Vec3<T> raw = (eval_sh_unclamped<T>(scene[i].sh.cast<T>(), dir).array() + T(0.5)).matrix();
    colors[i] = raw.cwiseMax(T(0)).cwiseMin(T(1));
    for (int c = 0; c < 3; ++c)
      clamp_open[i][c] = (raw[c] > T(0) && raw[c] < T(1)) ? T(1) : T(0);
  }

  const Vec3<T> bg = opts.background.cast<T>();
  const T norm = T(1) / (T(3) * T(h) * T(w));
  for (Eigen::Index y = 0; y < h; ++y) {
    for (Eigen::Index x = 0; x < w; ++x) {
      const auto trace = rendered.trace(y, x);
      if (trace.empty()) continue;
      Vec3<T> sign;
      for (int c = 0; c < 3; ++c) {
        const T diff = rendered.color.ch[c](y, x) - target.ch[c](y, x);
        sign[c] = diff > T(0) ? T(1) : (diff < T(0) ? T(-1) : T(0));
      }
      const TraceEntry<T>& last = trace.back();
      const T residual_transmittance = last.transmittance * (T(1) - last.alpha);
      Vec3<T> suffix = bg * residual_transmittance;
      for (size_t e = trace.size(); e-- > 0;) {
        const TraceEntry<T>& entry = trace[e];
        const size_t src = static_cast<size_t>(entry.source);
        if (in_subset[src]) {
          const T weight = entry.alpha * entry.transmittance;
          grads.d_dc[src] += norm * T(kShC0) * weight * sign.cwiseProduct(clamp_open[src]);
          const T sigma = T(scene[src].opacity);
          const T gauss = entry.alpha / sigma;
          const T alpha_safe = std::min(entry.alpha, T(1) - T(1e-4));
          const Vec3<T> d_alpha =
              colors[src] * entry.transmittance - suffix / (T(1) - alpha_safe);
          grads.d_opacity[src] += norm * gauss * sign.dot(d_alpha);
        }
        suffix += colors[src] * (entry.alpha * entry.transmittance);
      }
    }
  }
  return grads;
}

}  // namespace splat
