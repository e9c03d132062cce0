// Copyright Contributors to the splatblocks Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <span>
#include <utility>
#include <vector>

#include "splatblocks/contraction.hpp"
#include "splatblocks/gaussian.hpp"
#include "splatblocks/types.hpp"

namespace splat {

// Mapping from world space into the partition domain. Contracted mode is
// normalize + contract over [-2,2]^3; world mode is the identity over an
// explicit axis-aligned box (the "disable contraction" ablation).
struct SpaceMap {
  bool contracted = true;
  SceneBounds internal;  // internal region (contracted mode only)
  Vec3d domain_min = Vec3d::Constant(-2.0);
  Vec3d domain_max = Vec3d::Constant(2.0);

  Vec3d map(const Vec3d& world) const {
    if (!contracted) return world;
    return contract(normalize_position(world, internal));
  }

  static SpaceMap make_contracted(const SceneBounds& internal_region) {
    SpaceMap m;
    m.contracted = true;
    m.internal = internal_region;
    return m;
  }

  static SpaceMap make_world(const SceneBounds& domain) {
    SpaceMap m;
    m.contracted = false;
    m.internal = domain;
    m.domain_min = domain.min;
    m.domain_max = domain.max;
    return m;
  }
};

struct GridShape {
  int nx = 1, ny = 1, nz = 1;
  int count() const { return nx * ny * nz; }
};

// One partition cell. Bounds live in the mapped (usually contracted) space.
// Intervals are half-open [min, max) with the domain's upper face closed.
struct BlockSpec {
  int index = -1;
  Vec3d b_min = Vec3d::Zero();
  Vec3d b_max = Vec3d::Zero();
  Vec3d expanded_min = Vec3d::Zero();
  Vec3d expanded_max = Vec3d::Zero();
  std::vector<int> member_indices;
  std::vector<int> expanded_indices;
  std::vector<int> assigned_view_ids;
};

inline bool in_box_half_open(const Vec3d& p, const Vec3d& lo, const Vec3d& hi,
                             const Vec3d& domain_max) {
  for (int a = 0; a < 3; ++a) {
    if (p[a] < lo[a]) return false;
    const bool closed_face = hi[a] >= domain_max[a];
    if (closed_face ? p[a] > hi[a] : p[a] >= hi[a]) return false;
  }
  return true;
}

inline std::vector<Vec3d> mapped_positions(const GaussianScene& scene, const SpaceMap& space) {
  std::vector<Vec3d> out(scene.size());
  for (size_t i = 0; i < scene.size(); ++i) out[i] = space.map(scene[i].position.cast<double>());
  return out;
}

// Uniform grid over the mapped domain; every Gaussian lands in exactly one
// block. Blocks are ordered row-major (x slowest, z fastest).
std::vector<BlockSpec> partition(const GaussianScene& scene, const SpaceMap& space,
                                 const GridShape& grid);

struct ExpandResult {
  BlockSpec block;
  double factor = 1.0;     // isotropic expansion factor found
  bool saturated = false;  // threshold unreachable; expanded to full domain
};

// Grows the block symmetrically about its center by the smallest isotropic
// factor (binary search, <= 32 iterations, 1e-4 tolerance) whose half-open
// expanded bounds contain at least k_threshold of `positions`; bounds are
// clipped to the domain. Member indices are untouched.
ExpandResult expand_block(const BlockSpec& block, std::span<const Vec3d> positions,
                          int k_threshold, const SpaceMap& space);

struct MergeReport {
  size_t discarded = 0;  // refined primitives outside every original bound
  std::vector<size_t> kept_per_block;
};

// Keeps, from each refined block scene, the primitives whose mapped position
// lies inside the block's original (unexpanded) bounds, concatenated in
// block order. The half-open convention makes double-claims impossible.
GaussianScene merge_blocks(const std::vector<std::pair<BlockSpec, GaussianScene>>& refined,
                           const SpaceMap& space, MergeReport* report = nullptr);

// Human-readable partition report: per block, bounds, expanded bounds,
// member count, expanded count.
void write_block_report(const std::filesystem::path& path, const SpaceMap& space,
                        const GridShape& grid, std::span<const BlockSpec> blocks);

// Machine round trip of the full partition state (bounds, grid, blocks with
// index and view lists).
void save_blockset(const std::filesystem::path& path, const SpaceMap& space, const GridShape& grid,
                   std::span<const BlockSpec> blocks);
struct BlockSet {
  SpaceMap space;
  GridShape grid;
  std::vector<BlockSpec> blocks;
};
BlockSet load_blockset(const std::filesystem::path& path);

}  // namespace splat
