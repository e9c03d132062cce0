// Copyright Contributors to the splatblocks Project
// SPDX-License-Identifier: Apache-2.0

#include "splatblocks/importance.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "splatblocks/errors.hpp"
#include "splatblocks/parallel.hpp"
#include "splatblocks/renderer.hpp"

namespace splat {

std::vector<ImportanceRecord> accumulate_hits(const GaussianScene& scene,
                                              std::span<const CameraView> views,
                                              std::span<const int> subset, double scale,
                                              int workers) {
  if (views.empty()) throw ArgumentError("accumulate_hits: no views");

  std::vector<std::vector<double>> partials(views.size());
  parallel_for(static_cast<int64_t>(views.size()), workers, [&](int64_t v) {
    RenderOptions opts;
    opts.resolution_scale = scale;
    opts.capture_traces = true;
    const RenderOutput<float> out = render<float>(scene, views[static_cast<size_t>(v)], opts);
    std::vector<double>& h = partials[static_cast<size_t>(v)];
    h.assign(scene.size(), 0.0);
    for (const TraceEntry<float>& e : out.trace_entries)
      h[static_cast<size_t>(e.source)] += static_cast<double>(e.transmittance);
  });

  std::vector<double> hits(scene.size(), 0.0);
  for (const auto& part : partials)
    for (size_t i = 0; i < hits.size(); ++i) hits[i] += part[i];

  std::vector<ImportanceRecord> records;
  records.reserve(subset.size());
  for (int idx : subset) {
    ImportanceRecord r;
    r.source_index = idx;
    r.hit_weight = hits[static_cast<size_t>(idx)];
    r.opacity = scene[static_cast<size_t>(idx)].opacity;
    records.push_back(r);
  }
  return records;
}

void score_records(std::vector<ImportanceRecord>& records, const GaussianScene& scene) {
  for (ImportanceRecord& r : records) {
    const GaussianPrimitive& g = scene[static_cast<size_t>(r.source_index)];
    r.volume = static_cast<double>(g.scale.x()) * g.scale.y() * g.scale.z();
    r.log_volume = std::log1p(r.volume);
    r.opacity = g.opacity;
    r.score = r.opacity * r.log_volume * r.hit_weight;
  }
}

PruneResult prune(const GaussianScene& scene, std::span<const int> subset,
                  std::span<const ImportanceRecord> records, double fraction) {
  if (fraction < 0.0 || fraction >= 1.0)
    throw ArgumentError("prune: fraction must be in [0, 1)");

  std::vector<double> score_of(scene.size(), 0.0);
  for (const ImportanceRecord& r : records) score_of[static_cast<size_t>(r.source_index)] = r.score;

  std::vector<int> order(subset.begin(), subset.end());
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    const double sa = score_of[static_cast<size_t>(a)], sb = score_of[static_cast<size_t>(b)];
    if (sa != sb) return sa > sb;
    return a < b;
  });

  const size_t remove_count = static_cast<size_t>(std::floor(fraction * double(order.size())));
  PruneResult res;
  res.removed_indices.assign(order.end() - static_cast<ptrdiff_t>(remove_count), order.end());
  std::sort(res.removed_indices.begin(), res.removed_indices.end());

  std::vector<uint8_t> removed(scene.size(), 0);
  for (int i : res.removed_indices) removed[static_cast<size_t>(i)] = 1;
  res.scene.source_path = scene.source_path;
  res.scene.primitives.reserve(scene.size() - remove_count);
  for (size_t i = 0; i < scene.size(); ++i) {
    if (removed[i]) continue;
    res.scene.primitives.push_back(scene.primitives[i]);
    res.surviving_indices.push_back(static_cast<int>(i));
  }
  return res;
}

void write_importance_csv(const std::filesystem::path& path,
                          std::span<const ImportanceRecord> records) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write importance csv: " + path.string());
  out << "index,hit_weight,volume,log_volume,opacity,score\n";
  char buf[160];
  for (const ImportanceRecord& r : records) {
    std::snprintf(buf, sizeof(buf), "%d,%.9g,%.9g,%.9g,%.9g,%.9g\n", r.source_index, r.hit_weight,
                  r.volume, r.log_volume, r.opacity, r.score);
    out << buf;
  }
}

}  // namespace splat
