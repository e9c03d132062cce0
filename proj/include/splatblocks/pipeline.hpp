// Copyright Contributors to the splatblocks Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "splatblocks/camera.hpp"
#include "splatblocks/gaussian.hpp"
#include "splatblocks/manifest.hpp"
#include "splatblocks/partition.hpp"
#include "splatblocks/refine.hpp"

namespace splat {

// Resolved run configuration. Every run writes the full key set as a sorted
// snapshot (config.resolved.txt) under the output directory. Schedules keep
// their a/b fraction spelling so snapshots are exact.
struct PipelineConfig {
  std::filesystem::path dataset_root;
  std::filesystem::path output_dir;
  std::filesystem::path initial_scene;  // empty = dataset_root/scene_init.ply

  uint64_t seed = 19;
  int workers = 0;  // 0 = hardware concurrency

  bool coarse_enabled = true;
  double coarse_scale = 0.3;
  int coarse_iterations = 300;
  std::string coarse_prune_schedule;  // empty = no pruning during coarse

  bool contraction = true;
  std::string grid = "auto";  // "auto" (blocks over the two widest hull axes) or "AxBxC"
  int blocks = 4;
  std::string bounds_source = "cameras";  // or "gaussians" (1st-99th percentile box)
  double bounds_margin = 0.0;
  int k_threshold = 0;  // 0 = K / (2 n)

  bool so_assignment = true;
  bool bo_assignment = true;
  double epsilon = 0.1;
  double assign_scale = 0.25;

  int refine_iterations = 600;
  double lr_color = 0.01;
  double lr_opacity = 0.005;
  double lambda1 = 1.0;
  double lambda2 = 0.01;
  double lambda3 = 0.015;
  double ssim_weight = 0.2;
  std::string refine_prune_schedule = "1/3 1/2 5/6";
  double prune_fraction = 0.2;
  bool idgp = true;  // false empties the block prune schedule
  double idgp_scale = 0.5;

  double evaluate_scale = 1.0;

  static PipelineConfig from_file(const std::filesystem::path& path);
  void apply(const std::string& key, const std::string& value);
  Manifest resolved() const;
  void write_resolved(const std::filesystem::path& path) const;
  uint64_t config_hash() const;

  RefineConfig block_refine_config() const;
  RefineConfig coarse_refine_config() const;
  int effective_workers() const;
  std::filesystem::path scene_path() const {
    return initial_scene.empty() ? dataset_root / "scene_init.ply" : initial_scene;
  }
};

double parse_fraction(const std::string& token);  // "1/3" or plain decimal
std::vector<double> parse_schedule(const std::string& text);

// Stage runner. Stages are resumable: outputs land under
// output_dir/<stage>/ with a manifest recording input/output content hashes
// and the seed; wall-clock timing goes to a timing.txt sidecar so manifests
// are byte-stable across reruns.
enum class Stage { Coarse, Partition, Assign, Refine, Merge, Evaluate };
inline constexpr Stage kAllStages[] = {Stage::Coarse,  Stage::Partition, Stage::Assign,
                                       Stage::Refine,  Stage::Merge,     Stage::Evaluate};

const char* stage_name(Stage s);
std::optional<Stage> stage_from_name(const std::string& name);

// Runs one stage; prerequisite stage manifests must exist (ordering error
// naming the missing stage otherwise). Returns the stage manifest.
Manifest run_stage(Stage stage, const PipelineConfig& config);

// Runs every stage in order, skipping stages whose manifest already matches
// the current config and input hashes.
void run_full(const PipelineConfig& config);

struct ViewMetrics {
  int view_id = -1;
  double psnr_db = 0.0;
  double ssim = 0.0;
};

struct EvalSummary {
  std::vector<ViewMetrics> per_view;
  double mean_psnr = 0.0;
  double mean_ssim = 0.0;
};

// Renders the given views, quantizes to the 8-bit grid (so targets stored as
// PNG compare losslessly) and reports PSNR/SSIM per view plus means.
EvalSummary evaluate_scene(const GaussianScene& scene, std::span<const CameraView> views,
                           double scale, int workers,
                           const std::filesystem::path* render_dir = nullptr);

// Standalone evaluation of any scene against the dataset's held-out views:
// writes metrics.csv (view_id,psnr_db,ssim with a mean row), renders, and a
// manifest under out_dir.
EvalSummary run_evaluate_scene(const PipelineConfig& config,
                               const std::filesystem::path& scene_ply,
                               const std::filesystem::path& out_dir);

// Standalone importance scoring over the train views: writes scores.csv and
// a pruned scene. `prune_highest` inverts the selection (control experiment).
struct ScoreRunResult {
  size_t input_count = 0;
  size_t removed = 0;
  std::filesystem::path pruned_ply;
  std::filesystem::path csv;
};
ScoreRunResult run_score(const PipelineConfig& config, const std::filesystem::path& scene_ply,
                         double fraction, bool prune_highest,
                         const std::filesystem::path& out_dir);

std::vector<CameraView> load_dataset_cameras(const PipelineConfig& config,
                                             bool load_images = true);
std::vector<CameraView> filter_views(std::span<const CameraView> cams, bool eval_split);

}  // namespace splat
