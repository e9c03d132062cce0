// Copyright Contributors to the splatblocks Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <span>
#include <vector>

#include "splatblocks/camera.hpp"
#include "splatblocks/gaussian.hpp"
#include "splatblocks/losses.hpp"
#include "splatblocks/partition.hpp"

namespace splat {

struct RefineConfig {
  int iterations = 600;
  double lr_color = 0.01;
  double lr_opacity = 0.005;
  double lambda1 = 1.0;     // scale flattening
  double lambda2 = 0.01;    // normal prior
  double lambda3 = 0.015;   // depth-derived normal
  double rgb_ssim_weight = 0.2;
  std::vector<double> prune_schedule = {1.0 / 3.0, 1.0 / 2.0, 5.0 / 6.0};  // iteration fractions
  double prune_fraction = 0.2;
  double idgp_scale = 0.5;       // hit-accumulation resolution
  double resolution_scale = 1.0;
  int render_workers = 1;
};

struct RefineIterationLog {
  int iteration = 0;
  int view_id = -1;
  LossBreakdown loss;
  int trainable = 0;
  int empty_normal_masks = 0;  // loss terms that saw an empty valid mask
};

struct PruneEventLog {
  int iteration = 0;
  int removed = 0;
  int trainable_after = 0;
};

struct RefineResult {
  GaussianScene scene;
  std::vector<int> original_indices;  // refined index -> input scene index
  std::vector<RefineIterationLog> iteration_logs;
  std::vector<PruneEventLog> prune_events;
  bool skipped = false;  // no assigned views or no members
};

// Schedule fractions mapped onto concrete iteration indices (sorted,
// deduplicated): {1/3, 1/2, 5/6} of 30000 is {10000, 15000, 25000}.
std::vector<int> schedule_iterations(std::span<const double> schedule, int iterations);

// Per-block photometric refinement. The block initializes from the full
// input scene (occluders stay in place); only the trainable set (member and
// expanded indices) receives DC-color/opacity gradient steps, driven by the
// L1 photometric term. Losses are evaluated and logged per the full
// breakdown. At each schedule point the trainable set is scored against the
// assigned views and the lowest-scored fraction pruned. Deterministic given
// the seed.
RefineResult refine_block(const BlockSpec& block, const GaussianScene& scene,
                          std::span<const CameraView> views, const RefineConfig& cfg,
                          uint64_t seed);

}  // namespace splat
