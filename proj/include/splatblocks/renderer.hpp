// Copyright Contributors to the splatblocks Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cstdint>
#include <span>
#include <vector>

#include "splatblocks/camera.hpp"
#include "splatblocks/errors.hpp"
#include "splatblocks/gaussian.hpp"
#include "splatblocks/parallel.hpp"
#include "splatblocks/projection.hpp"
#include "splatblocks/types.hpp"

namespace splat {

inline constexpr int kTileSize = 16;

struct RenderOptions {
  Vec3d background = Vec3d::Zero();
  double resolution_scale = 1.0;
  bool capture_traces = false;
  int workers = 1;
  // Primitives to leave out, e.g. a block's expanded set. Indices into the
  // scene; order irrelevant.
  std::span<const int> exclude = {};
};

template <typename T>
struct TraceEntry {
  int32_t source;     // scene primitive index
  T alpha;            // composited alpha of this splat at the pixel
  T transmittance;    // transmittance immediately before this splat
};

// Per-pixel trace lists in row-major CSR form: pixel (y, x) owns entries
// [offsets[y*W+x], offsets[y*W+x+1]).
template <typename T>
struct RenderOutput {
  Image3<T> color;
  ImagePlane<T> depth;  // alpha-weighted expected depth; 0 where alpha == 0
  ImagePlane<T> alpha;
  bool has_traces = false;
  std::vector<int64_t> trace_offsets;
  std::vector<TraceEntry<T>> trace_entries;

  Eigen::Index height() const { return color.height(); }
  Eigen::Index width() const { return color.width(); }

  std::span<const TraceEntry<T>> trace(Eigen::Index y, Eigen::Index x) const {
    const size_t p = static_cast<size_t>(y) * static_cast<size_t>(width()) + static_cast<size_t>(x);
    return {trace_entries.data() + trace_offsets[p],
            static_cast<size_t>(trace_offsets[p + 1] - trace_offsets[p])};
  }
};

// Projects and depth-sorts the scene for a camera. Shared by render and the
// per-pixel brute-force oracle in the tests.
template <typename T>
std::vector<Splat2D<T>> project_scene(const GaussianScene& scene, const Intrinsics& intr,
                                      const Mat3d& rot, const Vec3d& trans,
                                      std::span<const int> exclude = {}) {
  std::vector<uint8_t> skip;
  if (!exclude.empty()) {
    skip.assign(scene.size(), 0);
    for (int i : exclude)
      if (i >= 0 && static_cast<size_t>(i) < scene.size()) skip[static_cast<size_t>(i)] = 1;
  }
  std::vector<Splat2D<T>> splats;
  splats.reserve(scene.size());
  for (size_t i = 0; i < scene.size(); ++i) {
    if (!skip.empty() && skip[i]) continue;
    if (auto s = project_gaussian<T>(scene[i], intr, rot, trans, static_cast<int>(i)))
      splats.push_back(*s);
  }
  // Canonical compositing order: depth ascending, ties by source index.
  std::sort(splats.begin(), splats.end(), [](const Splat2D<T>& a, const Splat2D<T>& b) {
    if (a.depth != b.depth) return a.depth < b.depth;
    return a.source_index < b.source_index;
  });
  return splats;
}

// Tile-based forward splatting. Per pixel, splats composite front to back:
// alpha = opacity * exp(-0.5 d^T cov2d^-1 d), contributions below 1/255 are
// skipped, and compositing stops once transmittance falls below 1e-4.
// Remaining transmittance goes to the background color. Deterministic for
// any worker count.
template <typename T>
RenderOutput<T> render(const GaussianScene& scene, const CameraView& cam,
                       const RenderOptions& opts = {}) {
  if (scene.empty()) throw ArgumentError("render: empty scene");
  if (cam.width <= 0 || cam.height <= 0) throw ArgumentError("render: zero-area image");
  const Intrinsics intr = scale_intrinsics(intrinsics_of(cam), opts.resolution_scale);
  const int w = intr.width, h = intr.height;

  RenderOutput<T> out;
  out.color.resize(h, w);
  out.depth.setZero(h, w);
  out.alpha.setZero(h, w);
  out.has_traces = opts.capture_traces;

  const std::vector<Splat2D<T>> splats =
      project_scene<T>(scene, intr, cam.rotation, cam.translation, opts.exclude);

  const int tiles_x = (w + kTileSize - 1) / kTileSize;
  const int tiles_y = (h + kTileSize - 1) / kTileSize;
  std::vector<std::vector<int>> tile_lists(static_cast<size_t>(tiles_x) * tiles_y);
  for (size_t si = 0; si < splats.size(); ++si) {
    const Splat2D<T>& s = splats[si];
    // Conservative pixel-center bbox (+/-1 pixel for the half-pixel offset).
    const int px_lo_x = static_cast<int>(std::floor(s.mean2d.x() - s.radius)) - 1;
    const int px_hi_x = static_cast<int>(std::ceil(s.mean2d.x() + s.radius)) + 1;
    const int px_lo_y = static_cast<int>(std::floor(s.mean2d.y() - s.radius)) - 1;
    const int px_hi_y = static_cast<int>(std::ceil(s.mean2d.y() + s.radius)) + 1;
    const int tx0 = std::max(0, px_lo_x / kTileSize);
    const int tx1 = std::min(tiles_x - 1, px_hi_x / kTileSize);
    const int ty0 = std::max(0, px_lo_y / kTileSize);
    const int ty1 = std::min(tiles_y - 1, px_hi_y / kTileSize);
    if (px_hi_x < 0 || px_hi_y < 0 || px_lo_x >= w || px_lo_y >= h) continue;
    for (int ty = ty0; ty <= ty1; ++ty)
      for (int tx = tx0; tx <= tx1; ++tx)
        tile_lists[static_cast<size_t>(ty) * tiles_x + tx].push_back(static_cast<int>(si));
  }

  const Vec3<T> bg = opts.background.cast<T>();
  std::vector<std::vector<TraceEntry<T>>> pixel_traces;
  if (opts.capture_traces) pixel_traces.resize(static_cast<size_t>(w) * h);

  parallel_for(static_cast<int64_t>(tile_lists.size()), opts.workers, [&](int64_t tile) {
    const int tx = static_cast<int>(tile % tiles_x);
    const int ty = static_cast<int>(tile / tiles_x);
    const std::vector<int>& list = tile_lists[static_cast<size_t>(tile)];
    const int x0 = tx * kTileSize, x1 = std::min(w, x0 + kTileSize);
    const int y0 = ty * kTileSize, y1 = std::min(h, y0 + kTileSize);
    for (int y = y0; y < y1; ++y) {
      for (int x = x0; x < x1; ++x) {
        const Vec2<T> px(T(x) + T(0.5), T(y) + T(0.5));
        T transmittance = T(1);
        Vec3<T> color = Vec3<T>::Zero();
        T depth_sum = T(0);
        std::vector<TraceEntry<T>>* trace =
            opts.capture_traces ? &pixel_traces[static_cast<size_t>(y) * w + x] : nullptr;
        for (int si : list) {
          const Splat2D<T>& s = splats[static_cast<size_t>(si)];
          const Vec2<T> d = px - s.mean2d;
          const T power = T(-0.5) * d.dot(s.cov2d_inv * d);
          if (power > T(0)) continue;
          const T alpha = s.opacity * std::exp(power);
          if (alpha < T(kAlphaCutoff)) continue;
          color += s.color * (alpha * transmittance);
          depth_sum += s.depth * alpha * transmittance;
          if (trace) trace->push_back({s.source_index, alpha, transmittance});
          transmittance *= (T(1) - alpha);
          if (transmittance < T(kTransmittanceStop)) break;
        }
        const T alpha_total = T(1) - transmittance;
        if (alpha_total == T(0)) {
          out.color.set_pixel(y, x, bg);
          out.depth(y, x) = T(0);
        } else {
          out.color.set_pixel(y, x, color + transmittance * bg);
          out.depth(y, x) = depth_sum / std::max(alpha_total, T(1e-10));
        }
        out.alpha(y, x) = alpha_total;
      }
    }
  });

  if (opts.capture_traces) {
    out.trace_offsets.resize(static_cast<size_t>(w) * h + 1);
    out.trace_offsets[0] = 0;
    for (size_t p = 0; p < pixel_traces.size(); ++p)
      out.trace_offsets[p + 1] = out.trace_offsets[p] + static_cast<int64_t>(pixel_traces[p].size());
    out.trace_entries.resize(static_cast<size_t>(out.trace_offsets.back()));
    for (size_t p = 0; p < pixel_traces.size(); ++p)
      std::copy(pixel_traces[p].begin(), pixel_traces[p].end(),
                out.trace_entries.begin() + out.trace_offsets[p]);
  }
  return out;
}

// Alpha-composited splat normal map from render traces, in the view frame.
// Each splat's normal is its smallest-scale axis, flipped to face the
// camera. Valid where alpha > 0.5 and the composite is well conditioned.
template <typename T>
struct NormalMapResult {
  Image3<T> normal;
  Mask valid;
};

template <typename T>
NormalMapResult<T> composite_normal_map(const GaussianScene& scene, const CameraView& cam,
                                        const RenderOutput<T>& rendered) {
  if (!rendered.has_traces) throw ArgumentError("composite_normal_map needs render traces");
  const Eigen::Index h = rendered.height(), w = rendered.width();

  std::vector<Vec3<T>> view_normals(scene.size());
  const Mat3<T> rot = cam.rotation.cast<T>();
  for (size_t i = 0; i < scene.size(); ++i) {
    const GaussianPrimitive& g = scene[i];
    int axis = 0;
    g.scale.minCoeff(&axis);
    const Vec3<T> n_cam = rot * g.rotation_matrix().col(axis).cast<T>();
    Vec3<T> n_view(n_cam.x(), -n_cam.y(), -n_cam.z());
    if (n_view.z() > T(0)) n_view = -n_view;
    view_normals[i] = n_view;
  }

  NormalMapResult<T> res;
  res.normal.resize(h, w);
  res.valid.setZero(h, w);
  for (Eigen::Index y = 0; y < h; ++y) {
    for (Eigen::Index x = 0; x < w; ++x) {
      Vec3<T> acc = Vec3<T>::Zero();
      for (const TraceEntry<T>& e : rendered.trace(y, x))
        acc += view_normals[static_cast<size_t>(e.source)] * (e.alpha * e.transmittance);
      const T len = acc.norm();
      if (rendered.alpha(y, x) > T(0.5) && len > T(1e-6)) {
        res.normal.set_pixel(y, x, acc / len);
        res.valid(y, x) = 1;
      }
    }
  }
  return res;
}

}  // namespace splat
