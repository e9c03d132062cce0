// Copyright Contributors to the splatblocks Project
// SPDX-License-Identifier: Apache-2.0

#include "splatblocks/assignment.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <set>

#include "splatblocks/errors.hpp"
#include "splatblocks/metrics.hpp"
#include "splatblocks/parallel.hpp"
#include "splatblocks/renderer.hpp"

namespace splat {

SsimAssignment assign_by_ssim(const GaussianScene& scene, const BlockSpec& block,
                              std::span<const CameraView> cameras, double epsilon, double scale,
                              int workers) {
  if (epsilon < 0.0) throw ArgumentError("assign_by_ssim: epsilon must be >= 0");

  std::vector<double> losses(cameras.size(), 0.0);
  if (!block.expanded_indices.empty() && !scene.empty()) {
    parallel_for(static_cast<int64_t>(cameras.size()), workers, [&](int64_t i) {
      const CameraView& cam = cameras[static_cast<size_t>(i)];
      RenderOptions opts;
      // Keep the comparison renders no smaller than the SSIM window.
      opts.resolution_scale = scale;
      if (cam.width > 0 && cam.height > 0)
        opts.resolution_scale =
            std::min(1.0, std::max({scale, double(kSsimWindow) / cam.width,
                                    double(kSsimWindow) / cam.height}));
      const RenderOutput<float> full = render<float>(scene, cam, opts);
      opts.exclude = block.expanded_indices;
      const RenderOutput<float> without = render<float>(scene, cam, opts);
      losses[static_cast<size_t>(i)] = 1.0 - ssim(full.color, without.color);
    });
  }

  SsimAssignment out;
  for (size_t i = 0; i < cameras.size(); ++i) {
    out.loss[cameras[i].id] = losses[i];
    if (losses[i] > epsilon) out.ids.push_back(cameras[i].id);
  }
  return out;
}

std::vector<int> assign_by_bounds(const BlockSpec& block, std::span<const CameraView> cameras,
                                  const SpaceMap& space) {
  std::vector<int> ids;
  for (const CameraView& cam : cameras) {
    const Vec3d mapped = space.map(cam.world_position());
    if (in_box_half_open(mapped, block.expanded_min, block.expanded_max, space.domain_max))
      ids.push_back(cam.id);
  }
  return ids;
}

std::vector<int> merge_assignments(std::span<const int> p1, std::span<const int> p2) {
  std::vector<int> out(p1.begin(), p1.end());
  std::set<int> seen(p1.begin(), p1.end());
  for (int id : p2)
    if (seen.insert(id).second) out.push_back(id);
  return out;
}

void write_assignment_report(const std::filesystem::path& path,
                             std::span<const AssignmentReport> reports,
                             std::span<const int> unassigned_view_ids) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write assignment report: " + path.string());
  out << "# view assignment report\n";
  char buf[32];
  for (const AssignmentReport& r : reports) {
    out << "block " << r.block_index << "\n";
    out << "  p1";
    for (int id : r.p1_ids) out << " " << id;
    out << "\n  p2";
    for (int id : r.p2_ids) out << " " << id;
    out << "\n  final";
    for (int id : r.final_ids) out << " " << id;
    out << "\n";
    for (const auto& [view, loss] : r.per_view_ssim_loss) {
      std::snprintf(buf, sizeof(buf), "%.9f", loss);
      out << "  ssim_loss " << view << " " << buf << "\n";
    }
  }
  out << "unassigned";
  for (int id : unassigned_view_ids) out << " " << id;
  out << "\n";
}

}  // namespace splat
