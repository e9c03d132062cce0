// Copyright Contributors to the splatblocks Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <map>
#include <span>
#include <vector>

#include "splatblocks/camera.hpp"
#include "splatblocks/gaussian.hpp"
#include "splatblocks/partition.hpp"

namespace splat {

struct AssignmentReport {
  int block_index = -1;
  std::vector<int> p1_ids;  // SSIM criterion
  std::vector<int> p2_ids;  // boundary criterion
  std::vector<int> final_ids;
  std::map<int, double> per_view_ssim_loss;
};

struct SsimAssignment {
  std::vector<int> ids;
  std::map<int, double> loss;  // 1 - ssim(full, without block) for every view
};

// A view passes when removing the block's expanded index set changes its
// rendering by more than `epsilon` in SSIM loss. Both renders use the full
// coarse scene at `scale` times the training resolution.
SsimAssignment assign_by_ssim(const GaussianScene& scene, const BlockSpec& block,
                              std::span<const CameraView> cameras, double epsilon, double scale,
                              int workers = 1);

// A view passes when its mapped camera position lies in the block's expanded
// bounds (half-open).
std::vector<int> assign_by_bounds(const BlockSpec& block, std::span<const CameraView> cameras,
                                  const SpaceMap& space);

// Order-stable union: p1 order first, then p2 entries not already present.
std::vector<int> merge_assignments(std::span<const int> p1, std::span<const int> p2);

// Per-block P1/P2/final lists plus per-view losses, with an explicit section
// for views assigned to no block.
void write_assignment_report(const std::filesystem::path& path,
                             std::span<const AssignmentReport> reports,
                             std::span<const int> unassigned_view_ids);

}  // namespace splat
