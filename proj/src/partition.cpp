// Copyright Contributors to the splatblocks Project
// SPDX-License-Identifier: Apache-2.0

#include "splatblocks/partition.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "splatblocks/errors.hpp"

namespace splat {

namespace {

int count_in_box(std::span<const Vec3d> positions, const Vec3d& lo, const Vec3d& hi,
                 const Vec3d& domain_max) {
  int n = 0;
  for (const Vec3d& p : positions)
    if (in_box_half_open(p, lo, hi, domain_max)) ++n;
  return n;
}

std::string fmt(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

std::vector<BlockSpec> partition(const GaussianScene& scene, const SpaceMap& space,
                                 const GridShape& grid) {
  if (grid.nx < 1 || grid.ny < 1 || grid.nz < 1) throw ArgumentError("partition: bad grid shape");

  const Vec3d dom_lo = space.domain_min, dom_hi = space.domain_max;
  const Vec3d cell = (dom_hi - dom_lo).cwiseQuotient(Vec3d(grid.nx, grid.ny, grid.nz));

  std::vector<BlockSpec> blocks(static_cast<size_t>(grid.count()));
  for (int ix = 0; ix < grid.nx; ++ix)
    for (int iy = 0; iy < grid.ny; ++iy)
      for (int iz = 0; iz < grid.nz; ++iz) {
        const int idx = (ix * grid.ny + iy) * grid.nz + iz;
        BlockSpec& b = blocks[static_cast<size_t>(idx)];
        b.index = idx;
        b.b_min = dom_lo + cell.cwiseProduct(Vec3d(ix, iy, iz));
        b.b_max = dom_lo + cell.cwiseProduct(Vec3d(ix + 1, iy + 1, iz + 1));
        // Close the outer faces exactly.
        if (ix + 1 == grid.nx) b.b_max.x() = dom_hi.x();
        if (iy + 1 == grid.ny) b.b_max.y() = dom_hi.y();
        if (iz + 1 == grid.nz) b.b_max.z() = dom_hi.z();
        b.expanded_min = b.b_min;
        b.expanded_max = b.b_max;
      }

  const std::vector<Vec3d> mapped = mapped_positions(scene, space);
  const Eigen::Vector3i grid_v(grid.nx, grid.ny, grid.nz);
  for (size_t i = 0; i < mapped.size(); ++i) {
    Eigen::Vector3i c;
    for (int a = 0; a < 3; ++a) {
      const double rel = (mapped[i][a] - dom_lo[a]) / cell[a];
      c[a] = std::clamp(static_cast<int>(std::floor(rel)), 0, grid_v[a] - 1);
    }
    const int idx = (c.x() * grid.ny + c.y()) * grid.nz + c.z();
    BlockSpec& b = blocks[static_cast<size_t>(idx)];
    b.member_indices.push_back(static_cast<int>(i));
  }
  for (BlockSpec& b : blocks) b.expanded_indices = b.member_indices;
  return blocks;
}

ExpandResult expand_block(const BlockSpec& block, std::span<const Vec3d> positions,
                          int k_threshold, const SpaceMap& space) {
  if (k_threshold > static_cast<int>(positions.size()))
    throw ArgumentError("expand_block: threshold exceeds population");

  const Vec3d center = 0.5 * (block.b_min + block.b_max);
  const Vec3d half = 0.5 * (block.b_max - block.b_min);
  const Vec3d dom_lo = space.domain_min, dom_hi = space.domain_max;

  const auto bounds_at = [&](double f) -> std::pair<Vec3d, Vec3d> {
    const Vec3d lo = (center - f * half).cwiseMax(dom_lo);
    const Vec3d hi = (center + f * half).cwiseMin(dom_hi);
    return {lo, hi};
  };
  const auto count_at = [&](double f) {
    const auto [lo, hi] = bounds_at(f);
    return count_in_box(positions, lo, hi, dom_hi);
  };

  ExpandResult res;
  res.block = block;
  if (count_at(1.0) >= k_threshold) {
    // Already satisfied: bounds stay put, only the index list is refreshed.
    res.factor = 1.0;
  } else {
    double cover = 1.0;
    for (int a = 0; a < 3; ++a) {
      if (half[a] <= 0.0) continue;
      cover = std::max(cover, (center[a] - dom_lo[a]) / half[a]);
      cover = std::max(cover, (dom_hi[a] - center[a]) / half[a]);
    }
    if (count_at(cover) < k_threshold) {
      res.saturated = true;
      res.factor = cover;
      res.block.expanded_min = dom_lo;
      res.block.expanded_max = dom_hi;
    } else {
      double lo = 1.0, hi = cover;
      for (int it = 0; it < 32 && (hi - lo) > 1e-4; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (count_at(mid) >= k_threshold)
          hi = mid;
        else
          lo = mid;
      }
      res.factor = hi;
    }
  }
  if (!res.saturated) {
    const auto [lo, hi] = bounds_at(res.factor);
    res.block.expanded_min = lo;
    res.block.expanded_max = hi;
  }

  res.block.expanded_indices.clear();
  for (size_t i = 0; i < positions.size(); ++i)
    if (in_box_half_open(positions[i], res.block.expanded_min, res.block.expanded_max, dom_hi))
      res.block.expanded_indices.push_back(static_cast<int>(i));
  return res;
}

GaussianScene merge_blocks(const std::vector<std::pair<BlockSpec, GaussianScene>>& refined,
                           const SpaceMap& space, MergeReport* report) {
  GaussianScene merged;
  MergeReport local;
  for (const auto& [block, scene] : refined) {
    size_t kept = 0;
    for (const GaussianPrimitive& g : scene.primitives) {
      const Vec3d m = space.map(g.position.cast<double>());
      if (in_box_half_open(m, block.b_min, block.b_max, space.domain_max)) {
        merged.primitives.push_back(g);
        ++kept;
      } else {
        ++local.discarded;
      }
    }
    local.kept_per_block.push_back(kept);
  }
  if (report) *report = local;
  if (merged.empty()) throw PipelineError("merge produced an empty scene");
  return merged;
}

void write_block_report(const std::filesystem::path& path, const SpaceMap& space,
                        const GridShape& grid, std::span<const BlockSpec> blocks) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write block report: " + path.string());
  out << "# partition report\n";
  out << "space " << (space.contracted ? "contracted" : "world") << "\n";
  out << "grid " << grid.nx << " " << grid.ny << " " << grid.nz << "\n";
  for (const BlockSpec& b : blocks) {
    out << "block " << b.index << "\n";
    out << "  bounds";
    for (int a = 0; a < 3; ++a) out << " " << fmt(b.b_min[a]);
    for (int a = 0; a < 3; ++a) out << " " << fmt(b.b_max[a]);
    out << "\n  expanded";
    for (int a = 0; a < 3; ++a) out << " " << fmt(b.expanded_min[a]);
    for (int a = 0; a < 3; ++a) out << " " << fmt(b.expanded_max[a]);
    out << "\n  members " << b.member_indices.size() << "\n";
    out << "  expanded_count " << b.expanded_indices.size() << "\n";
  }
}

namespace {

void write_vec(std::ofstream& out, const char* key, const Vec3d& v) {
  out << key << " " << fmt(v.x()) << " " << fmt(v.y()) << " " << fmt(v.z()) << "\n";
}

void write_list(std::ofstream& out, const char* key, const std::vector<int>& v) {
  out << key << " " << v.size();
  for (int i : v) out << " " << i;
  out << "\n";
}

}  // namespace

void save_blockset(const std::filesystem::path& path, const SpaceMap& space, const GridShape& grid,
                   std::span<const BlockSpec> blocks) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write blockset: " + path.string());
  out << "# splatblocks blockset v1\n";
  out << "contracted " << (space.contracted ? 1 : 0) << "\n";
  write_vec(out, "internal_min", space.internal.min);
  write_vec(out, "internal_max", space.internal.max);
  write_vec(out, "domain_min", space.domain_min);
  write_vec(out, "domain_max", space.domain_max);
  out << "grid " << grid.nx << " " << grid.ny << " " << grid.nz << "\n";
  out << "blocks " << blocks.size() << "\n";
  for (const BlockSpec& b : blocks) {
    out << "block " << b.index << "\n";
    write_vec(out, "b_min", b.b_min);
    write_vec(out, "b_max", b.b_max);
    write_vec(out, "e_min", b.expanded_min);
    write_vec(out, "e_max", b.expanded_max);
    write_list(out, "members", b.member_indices);
    write_list(out, "expanded", b.expanded_indices);
    write_list(out, "views", b.assigned_view_ids);
  }
}

BlockSet load_blockset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open blockset: " + path.string());
  BlockSet set;
  std::string line;
  BlockSpec* cur = nullptr;
  const auto read_vec = [](std::istringstream& ls, Vec3d& v) { ls >> v.x() >> v.y() >> v.z(); };
  const auto read_list = [](std::istringstream& ls, std::vector<int>& v) {
    size_t n = 0;
    ls >> n;
    v.resize(n);
    for (size_t i = 0; i < n; ++i) ls >> v[i];
  };
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    if (key == "contracted") {
      int c = 0;
      ls >> c;
      set.space.contracted = c != 0;
    } else if (key == "internal_min") read_vec(ls, set.space.internal.min);
    else if (key == "internal_max") read_vec(ls, set.space.internal.max);
    else if (key == "domain_min") read_vec(ls, set.space.domain_min);
    else if (key == "domain_max") read_vec(ls, set.space.domain_max);
    else if (key == "grid") ls >> set.grid.nx >> set.grid.ny >> set.grid.nz;
    else if (key == "blocks") {
      size_t n = 0;
      ls >> n;
      set.blocks.reserve(n);
    } else if (key == "block") {
      set.blocks.emplace_back();
      cur = &set.blocks.back();
      ls >> cur->index;
    } else if (cur && key == "b_min") read_vec(ls, cur->b_min);
    else if (cur && key == "b_max") read_vec(ls, cur->b_max);
    else if (cur && key == "e_min") read_vec(ls, cur->expanded_min);
    else if (cur && key == "e_max") read_vec(ls, cur->expanded_max);
    else if (cur && key == "members") read_list(ls, cur->member_indices);
    else if (cur && key == "expanded") read_list(ls, cur->expanded_indices);
    else if (cur && key == "views") read_list(ls, cur->assigned_view_ids);
    else throw FormatError("unknown blockset key '" + key + "': " + path.string());
    if (ls.fail()) throw FormatError("malformed blockset line '" + line + "': " + path.string());
  }
  return set;
}

}  // namespace splat
