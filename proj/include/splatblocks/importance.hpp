// Copyright Contributors to the splatblocks Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include "splatblocks/camera.hpp"
#include "splatblocks/gaussian.hpp"

namespace splat {

struct ImportanceRecord {
  int source_index = -1;
  double hit_weight = 0.0;  // sum over rays of the transmittance in front
  double volume = 0.0;      // product of the three scale factors
  double log_volume = 0.0;  // ln(1 + volume)
  double opacity = 0.0;
  double score = 0.0;       // opacity * log_volume * hit_weight
};

// Casts one ray per pixel of every view (rendered at `scale`); a primitive is
// hit when its composited per-pixel alpha reaches the 1/255 cutoff, and each
// hit contributes the renderer's transmittance immediately in front of it.
// Records are produced for every index in `subset`, zero-hit ones included.
// Deterministic for any worker count (per-view partials summed in view order).
std::vector<ImportanceRecord> accumulate_hits(const GaussianScene& scene,
                                              std::span<const CameraView> views,
                                              std::span<const int> subset, double scale,
                                              int workers = 1);

// Fills volume, log compression and the final score in place.
void score_records(std::vector<ImportanceRecord>& records, const GaussianScene& scene);

struct PruneResult {
  GaussianScene scene;
  std::vector<int> removed_indices;        // ascending, indices into the input scene
  std::vector<int> surviving_indices;      // pruned index -> input index
};

// Sorts the subset by score descending (ties by index ascending) and removes
// the floor(fraction * |subset|) lowest-scored primitives. Survivors keep
// their relative order; primitives outside the subset are untouched.
PruneResult prune(const GaussianScene& scene, std::span<const int> subset,
                  std::span<const ImportanceRecord> records, double fraction);

// Audit dump: index, H, v, v~, alpha, S.
void write_importance_csv(const std::filesystem::path& path,
                          std::span<const ImportanceRecord> records);

}  // namespace splat
