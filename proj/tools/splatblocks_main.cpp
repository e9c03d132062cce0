// Copyright Contributors to the splatblocks Project
// SPDX-License-Identifier: Apache-2.0

#include <CLI11.hpp>

#include <cstdio>
#include <exception>
#include <string>

#include "splatblocks/errors.hpp"
#include "splatblocks/pipeline.hpp"
#include "splatblocks/synthetic.hpp"

namespace {

using splat::PipelineConfig;

void add_config_options(CLI::App* app, PipelineConfig& cfg, std::string& config_file) {
  app->add_option("--config", config_file, "config file (key = value lines)");
  app->add_option("--dataset", cfg.dataset_root, "dataset root (holds cameras.txt)");
  app->add_option("--out", cfg.output_dir, "output directory");
  app->add_option("--scene", cfg.initial_scene, "initial/coarse scene PLY");
  app->add_option("--seed", cfg.seed, "run seed");
  app->add_option("--workers", cfg.workers, "worker threads (0 = hardware)");
  app->add_option("--grid", cfg.grid, "partition grid, AxBxC or auto");
  app->add_option("--epsilon", cfg.epsilon, "SSIM assignment threshold");
  app->add_option("--k-threshold", cfg.k_threshold, "expansion count threshold (0 = K/2n)");
  app->add_option("--coarse-iterations", cfg.coarse_iterations, "coarse stage iterations");
  app->add_option("--iterations", cfg.refine_iterations, "block refinement iterations");
  app->add_option("--bounds-margin", cfg.bounds_margin, "internal region margin fraction");
  app->add_option("--bounds-source", cfg.bounds_source, "internal region source: cameras|gaussians");
  app->add_flag("--no-coarse-train", [&cfg](int64_t) { cfg.coarse_enabled = false; },
                "copy the initial scene through the coarse stage untouched");
  app->add_flag("--no-contraction", [&cfg](int64_t) { cfg.contraction = false; },
                "partition in world space (ablation)");
  app->add_flag("--no-so", [&cfg](int64_t) { cfg.so_assignment = false; },
                "disable SSIM-based view assignment (ablation)");
  app->add_flag("--no-bo", [&cfg](int64_t) { cfg.bo_assignment = false; },
                "disable boundary-based view assignment (ablation)");
  app->add_flag("--no-idgp", [&cfg](int64_t) { cfg.idgp = false; },
                "disable pruning during refinement (ablation)");
}

PipelineConfig finalize_config(const std::string& config_file, const PipelineConfig& overrides,
                               const CLI::App* app) {
  if (config_file.empty()) return overrides;
  // File first, explicit flags override.
  PipelineConfig cfg = PipelineConfig::from_file(config_file);
  const PipelineConfig defaults;
  const auto passed = [app](const std::string& name) { return app->count(name) > 0; };
  if (passed("--dataset")) cfg.dataset_root = overrides.dataset_root;
  if (passed("--out")) cfg.output_dir = overrides.output_dir;
  if (passed("--scene")) cfg.initial_scene = overrides.initial_scene;
  if (passed("--seed")) cfg.seed = overrides.seed;
  if (passed("--workers")) cfg.workers = overrides.workers;
  if (passed("--grid")) cfg.grid = overrides.grid;
  if (passed("--epsilon")) cfg.epsilon = overrides.epsilon;
  if (passed("--k-threshold")) cfg.k_threshold = overrides.k_threshold;
  if (passed("--coarse-iterations")) cfg.coarse_iterations = overrides.coarse_iterations;
  if (passed("--iterations")) cfg.refine_iterations = overrides.refine_iterations;
  if (passed("--bounds-margin")) cfg.bounds_margin = overrides.bounds_margin;
  if (passed("--bounds-source")) cfg.bounds_source = overrides.bounds_source;
  if (passed("--no-coarse-train")) cfg.coarse_enabled = false;
  if (passed("--no-contraction")) cfg.contraction = false;
  if (passed("--no-so")) cfg.so_assignment = false;
  if (passed("--no-bo")) cfg.bo_assignment = false;
  if (passed("--no-idgp")) cfg.idgp = false;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"splatblocks: block-partitioned Gaussian splat refinement pipeline"};
  app.require_subcommand(1);

  PipelineConfig cfg;
  std::string config_file;

  // synth
  splat::SyntheticSpec synth_spec;
  std::string synth_out;
  CLI::App* synth = app.add_subcommand("synth", "generate the synthetic dataset");
  synth->add_option("--out", synth_out, "dataset output directory")->required();
  synth->add_option("--count", synth_spec.gaussian_count, "number of Gaussians");
  synth->add_option("--cameras", synth_spec.camera_count, "number of cameras");
  synth->add_option("--width", synth_spec.width, "image width");
  synth->add_option("--height", synth_spec.height, "image height");
  synth->add_option("--eval-every", synth_spec.eval_every, "hold out every k-th view");
  synth->add_option("--noise", synth_spec.noise_sigma, "color noise sigma for scene_init.ply");
  synth->add_option("--seed", synth_spec.seed, "generator seed");
  synth->add_option("--workers", synth_spec.workers, "render workers");

  // pipeline stages
  CLI::App* coarse = app.add_subcommand("coarse", "train/copy the global coarse scene");
  CLI::App* partition = app.add_subcommand("partition", "contract and grid-partition the scene");
  CLI::App* assign = app.add_subcommand("assign", "assign training views to blocks");
  CLI::App* refine = app.add_subcommand("refine", "refine all blocks");
  CLI::App* merge = app.add_subcommand("merge", "merge refined blocks");
  CLI::App* evaluate = app.add_subcommand("evaluate", "render held-out views and report metrics");
  CLI::App* full = app.add_subcommand("full", "run all stages (resumable)");
  for (CLI::App* sub : {coarse, partition, assign, refine, merge, evaluate, full})
    add_config_options(sub, cfg, config_file);
  std::string eval_scene;
  evaluate->add_option("--scene-ply", eval_scene,
                       "evaluate this scene directly instead of the merge output");

  // score
  CLI::App* score = app.add_subcommand("score", "importance-score and prune a scene");
  add_config_options(score, cfg, config_file);
  std::string score_scene, score_out;
  double score_fraction = 0.2;
  bool score_highest = false;
  score->add_option("--scene-ply", score_scene, "scene to score")->required();
  score->add_option("--score-out", score_out, "output directory")->required();
  score->add_option("--fraction", score_fraction, "fraction to remove");
  score->add_flag("--highest", score_highest, "remove the highest-scored instead (control)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (synth->parsed()) {
      const splat::SyntheticResult res = splat::generate_synthetic(synth_spec, synth_out);
      std::printf("synth: %zu primitives, %zu train views, %zu eval views -> %s\n",
                  res.primitive_count, res.train_views, res.eval_views, synth_out.c_str());
      return 0;
    }

    CLI::App* parsed = app.get_subcommands().front();
    const PipelineConfig final_cfg = finalize_config(config_file, cfg, parsed);

    if (score->parsed()) {
      const splat::ScoreRunResult res =
          splat::run_score(final_cfg, score_scene, score_fraction, score_highest, score_out);
      std::printf("score: removed %zu of %zu -> %s\n", res.removed, res.input_count,
                  res.pruned_ply.string().c_str());
      return 0;
    }
    if (full->parsed()) {
      splat::run_full(final_cfg);
      std::printf("full: pipeline complete under %s\n", final_cfg.output_dir.string().c_str());
      return 0;
    }
    if (evaluate->parsed() && !eval_scene.empty()) {
      const auto summary = splat::run_evaluate_scene(final_cfg, eval_scene,
                                                     final_cfg.output_dir / "evaluate_scene");
      std::printf("evaluate: mean psnr %.3f dB, mean ssim %.4f over %zu views\n",
                  summary.mean_psnr, summary.mean_ssim, summary.per_view.size());
      return 0;
    }
    for (splat::Stage s : splat::kAllStages) {
      CLI::App* sub = nullptr;
      switch (s) {
        case splat::Stage::Coarse: sub = coarse; break;
        case splat::Stage::Partition: sub = partition; break;
        case splat::Stage::Assign: sub = assign; break;
        case splat::Stage::Refine: sub = refine; break;
        case splat::Stage::Merge: sub = merge; break;
        case splat::Stage::Evaluate: sub = evaluate; break;
      }
      if (sub && sub->parsed()) {
        splat::run_stage(s, final_cfg);
        std::printf("%s: done\n", splat::stage_name(s));
        return 0;
      }
    }
    std::fprintf(stderr, "no subcommand handled\n");
    return 2;
  } catch (const splat::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "unexpected error: %s\n", e.what());
    return 1;
  }
}
