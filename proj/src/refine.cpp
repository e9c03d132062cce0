// Copyright Contributors to the splatblocks Project
// SPDX-License-Identifier: Apache-2.0

#include "splatblocks/refine.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "splatblocks/depth_normal.hpp"
#include "splatblocks/errors.hpp"
#include "splatblocks/gradients.hpp"
#include "splatblocks/importance.hpp"
#include "splatblocks/renderer.hpp"
#include "splatblocks/rng.hpp"

namespace splat {

namespace {

// Prior validity: unit-ish vectors mark supervised pixels, zeros mark holes.
Mask prior_valid_mask(const Image3f& prior) {
  Mask m(prior.height(), prior.width());
  for (Eigen::Index y = 0; y < prior.height(); ++y)
    for (Eigen::Index x = 0; x < prior.width(); ++x)
      m(y, x) = prior.pixel(y, x).squaredNorm() > 0.25f ? 1 : 0;
  return m;
}

}  // namespace

std::vector<int> schedule_iterations(std::span<const double> schedule, int iterations) {
  std::vector<int> points;
  for (double f : schedule) {
    if (f < 0.0 || f >= 1.0) throw ArgumentError("refine: prune schedule fraction outside [0,1)");
    points.push_back(static_cast<int>(std::floor(f * iterations)));
  }
  std::sort(points.begin(), points.end());
  points.erase(std::unique(points.begin(), points.end()), points.end());
  return points;
}

RefineResult refine_block(const BlockSpec& block, const GaussianScene& scene,
                          std::span<const CameraView> views, const RefineConfig& cfg,
                          uint64_t seed) {
  RefineResult res;
  res.scene = scene;
  res.original_indices.resize(scene.size());
  for (size_t i = 0; i < scene.size(); ++i) res.original_indices[i] = static_cast<int>(i);

  // Trainable set: member union expanded.
  std::set<int> trainable_set(block.member_indices.begin(), block.member_indices.end());
  trainable_set.insert(block.expanded_indices.begin(), block.expanded_indices.end());
  std::vector<int> trainable(trainable_set.begin(), trainable_set.end());

  if (views.empty() || trainable.empty()) {
    res.skipped = true;
    return res;
  }

  // Scaled copies of the assigned views, rendered against at every iteration.
  std::vector<CameraView> scaled;
  scaled.reserve(views.size());
  for (const CameraView& v : views) scaled.push_back(scale_camera(v, cfg.resolution_scale));

  Rng rng(seed);
  std::vector<int> view_order(views.size());
  for (size_t i = 0; i < view_order.size(); ++i) view_order[i] = static_cast<int>(i);
  rng.shuffle(view_order);

  const std::vector<int> prune_at = schedule_iterations(cfg.prune_schedule, cfg.iterations);
  size_t next_prune = 0;

  RenderOptions ropts;
  ropts.capture_traces = true;
  ropts.workers = cfg.render_workers;

  for (int iter = 0; iter < cfg.iterations; ++iter) {
    if (next_prune < prune_at.size() && iter == prune_at[next_prune] && cfg.prune_fraction > 0.0 &&
        !trainable.empty()) {
      ++next_prune;
      std::vector<ImportanceRecord> records =
          accumulate_hits(res.scene, views, trainable, cfg.idgp_scale, cfg.render_workers);
      score_records(records, res.scene);
      PruneResult pruned = prune(res.scene, trainable, records, cfg.prune_fraction);

      // Remap bookkeeping through the surviving index list.
      std::vector<int> new_of_old(res.scene.size(), -1);
      for (size_t n = 0; n < pruned.surviving_indices.size(); ++n)
        new_of_old[static_cast<size_t>(pruned.surviving_indices[n])] = static_cast<int>(n);
      std::vector<int> new_original(pruned.surviving_indices.size());
      for (size_t n = 0; n < pruned.surviving_indices.size(); ++n)
        new_original[n] = res.original_indices[static_cast<size_t>(pruned.surviving_indices[n])];
      std::vector<int> new_trainable;
      new_trainable.reserve(trainable.size());
      for (int t : trainable)
        if (new_of_old[static_cast<size_t>(t)] >= 0)
          new_trainable.push_back(new_of_old[static_cast<size_t>(t)]);

      const int removed = static_cast<int>(pruned.removed_indices.size());
      res.scene = std::move(pruned.scene);
      res.original_indices = std::move(new_original);
      trainable = std::move(new_trainable);
      res.prune_events.push_back({iter, removed, static_cast<int>(trainable.size())});
      if (trainable.empty()) break;
    }

    const size_t vi = static_cast<size_t>(view_order[static_cast<size_t>(iter) % views.size()]);
    const CameraView& cam = scaled[vi];

    const RenderOutput<float> out = render<float>(res.scene, cam, ropts);

    int empty_masks = 0;
    double l_n = 0.0, l_dn = 0.0;
    if (cam.normal_prior) {
      const Mask prior_ok = prior_valid_mask(*cam.normal_prior);
      {
        const NormalMapResult<float> composed = composite_normal_map(res.scene, cam, out);
        Mask valid = composed.valid;
        for (Eigen::Index y = 0; y < valid.rows(); ++y)
          for (Eigen::Index x = 0; x < valid.cols(); ++x)
            valid(y, x) = valid(y, x) && prior_ok(y, x);
        if ((valid.array() != 0).any())
          l_n = loss_normal(composed.normal, *cam.normal_prior, valid);
        else
          ++empty_masks;
      }
      {
        const Intrinsics intr = intrinsics_of(cam);
        const DNormalResult<float> dn = depth_to_dnormal(out.depth, intr);
        Mask valid = dn.valid;
        for (Eigen::Index y = 0; y < valid.rows(); ++y)
          for (Eigen::Index x = 0; x < valid.cols(); ++x)
            valid(y, x) = valid(y, x) && prior_ok(y, x);
        if ((valid.array() != 0).any()) {
          const ImagePlane<float>* conf = cam.confidence ? &*cam.confidence : nullptr;
          l_dn = loss_dnormal(dn.normal, *cam.normal_prior, conf, valid);
        } else {
          ++empty_masks;
        }
      }
    }

    const double l_rgb = loss_rgb(out.color, cam.image, cfg.rgb_ssim_weight);
    const double l_s = loss_scale_flatten(res.scene, trainable);
    const LossBreakdown loss =
        combine_losses(l_rgb, l_s, l_n, l_dn, cfg.lambda1, cfg.lambda2, cfg.lambda3);

    const ColorOpacityGradients<float> grads =
        gradients_color_opacity<float>(res.scene, trainable, cam, cam.image, out, ropts);
    // Plain SGD on the summed absolute error: gradients carry the per-pixel
    // mean normalization, so the step scales by the pixel count.
    const float color_step = static_cast<float>(
        cfg.lr_color * static_cast<double>(out.height()) * static_cast<double>(out.width()));
    const float opacity_step = static_cast<float>(
        cfg.lr_opacity * static_cast<double>(out.height()) * static_cast<double>(out.width()));
    for (int t : trainable) {
      GaussianPrimitive& g = res.scene[static_cast<size_t>(t)];
      g.sh.col(0) -= color_step * grads.d_dc[static_cast<size_t>(t)];
      const float sigma = g.opacity - opacity_step * grads.d_opacity[static_cast<size_t>(t)];
      g.opacity = std::min(1.0f - 1e-4f, std::max(1e-4f, sigma));
    }

    res.iteration_logs.push_back(
        {iter, views[vi].id, loss, static_cast<int>(trainable.size()), empty_masks});
  }
  return res;
}

}  // namespace splat
