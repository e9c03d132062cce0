// Copyright Contributors to the splatblocks Project
// SPDX-License-Identifier: Apache-2.0

#include "splatblocks/pipeline.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "splatblocks/assignment.hpp"
#include "splatblocks/camera_io.hpp"
#include "splatblocks/contraction.hpp"
#include "splatblocks/errors.hpp"
#include "splatblocks/image_io.hpp"
#include "splatblocks/importance.hpp"
#include "splatblocks/metrics.hpp"
#include "splatblocks/parallel.hpp"
#include "splatblocks/ply_io.hpp"
#include "splatblocks/renderer.hpp"

namespace splat {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Config

double parse_fraction(const std::string& token) {
  const size_t slash = token.find('/');
  if (slash == std::string::npos) return std::stod(token);
  const double num = std::stod(token.substr(0, slash));
  const double den = std::stod(token.substr(slash + 1));
  if (den == 0.0) throw ArgumentError("fraction with zero denominator: " + token);
  return num / den;
}

std::vector<double> parse_schedule(const std::string& text) {
  std::vector<double> out;
  std::istringstream ss(text);
  std::string tok;
  while (ss >> tok) out.push_back(parse_fraction(tok));
  return out;
}

namespace {

bool parse_bool(const std::string& v) {
  if (v == "true" || v == "1" || v == "on") return true;
  if (v == "false" || v == "0" || v == "off") return false;
  throw ArgumentError("expected boolean, got '" + v + "'");
}

const char* bool_str(bool b) { return b ? "true" : "false"; }

GridShape parse_grid(const std::string& text) {
  GridShape g;
  if (std::sscanf(text.c_str(), "%dx%dx%d", &g.nx, &g.ny, &g.nz) != 3 || g.count() < 1)
    throw ArgumentError("bad grid spec '" + text + "' (want AxBxC)");
  return g;
}

}  // namespace

void PipelineConfig::apply(const std::string& key, const std::string& value) {
  if (key == "dataset_root") dataset_root = value;
  else if (key == "output_dir") output_dir = value;
  else if (key == "scene.initial") initial_scene = value;
  else if (key == "seed") seed = std::stoull(value);
  else if (key == "workers") workers = std::stoi(value);
  else if (key == "coarse.enabled") coarse_enabled = parse_bool(value);
  else if (key == "coarse.scale") coarse_scale = std::stod(value);
  else if (key == "coarse.iterations") coarse_iterations = std::stoi(value);
  else if (key == "coarse.prune_schedule") coarse_prune_schedule = value;
  else if (key == "partition.contraction") contraction = parse_bool(value);
  else if (key == "partition.grid") grid = value;
  else if (key == "partition.blocks") blocks = std::stoi(value);
  else if (key == "partition.bounds_source") bounds_source = value;
  else if (key == "partition.bounds_margin") bounds_margin = std::stod(value);
  else if (key == "partition.k_threshold") k_threshold = std::stoi(value);
  else if (key == "assign.so") so_assignment = parse_bool(value);
  else if (key == "assign.bo") bo_assignment = parse_bool(value);
  else if (key == "assign.epsilon") epsilon = std::stod(value);
  else if (key == "assign.scale") assign_scale = std::stod(value);
  else if (key == "refine.iterations") refine_iterations = std::stoi(value);
  else if (key == "refine.lr_color") lr_color = std::stod(value);
  else if (key == "refine.lr_opacity") lr_opacity = std::stod(value);
  else if (key == "refine.lambda1") lambda1 = std::stod(value);
  else if (key == "refine.lambda2") lambda2 = std::stod(value);
  else if (key == "refine.lambda3") lambda3 = std::stod(value);
  else if (key == "refine.ssim_weight") ssim_weight = std::stod(value);
  else if (key == "refine.prune_schedule") refine_prune_schedule = value;
  else if (key == "refine.prune_fraction") prune_fraction = std::stod(value);
  else if (key == "refine.idgp") idgp = parse_bool(value);
  else if (key == "refine.idgp_scale") idgp_scale = std::stod(value);
  else if (key == "evaluate.scale") evaluate_scale = std::stod(value);
  else throw ArgumentError("unknown config key '" + key + "'");
}

PipelineConfig PipelineConfig::from_file(const fs::path& path) {
  PipelineConfig cfg;
  const Manifest m = Manifest::load(path);
  for (const auto& [k, v] : m.entries()) cfg.apply(k, v);
  return cfg;
}

Manifest PipelineConfig::resolved() const {
  Manifest m;
  m.set("dataset_root", dataset_root.string());
  m.set("output_dir", output_dir.string());
  m.set("scene.initial", scene_path().string());
  m.set("seed", static_cast<int64_t>(seed));
  m.set("workers", static_cast<int64_t>(effective_workers()));
  m.set("coarse.enabled", bool_str(coarse_enabled));
  m.set_double("coarse.scale", coarse_scale);
  m.set("coarse.iterations", static_cast<int64_t>(coarse_iterations));
  m.set("coarse.prune_schedule", coarse_prune_schedule);
  m.set("partition.contraction", bool_str(contraction));
  m.set("partition.grid", grid);
  m.set("partition.blocks", static_cast<int64_t>(blocks));
  m.set("partition.bounds_source", bounds_source);
  m.set_double("partition.bounds_margin", bounds_margin);
  m.set("partition.k_threshold", static_cast<int64_t>(k_threshold));
  m.set("assign.so", bool_str(so_assignment));
  m.set("assign.bo", bool_str(bo_assignment));
  m.set_double("assign.epsilon", epsilon);
  m.set_double("assign.scale", assign_scale);
  m.set("refine.iterations", static_cast<int64_t>(refine_iterations));
  m.set_double("refine.lr_color", lr_color);
  m.set_double("refine.lr_opacity", lr_opacity);
  m.set_double("refine.lambda1", lambda1);
  m.set_double("refine.lambda2", lambda2);
  m.set_double("refine.lambda3", lambda3);
  m.set_double("refine.ssim_weight", ssim_weight);
  m.set("refine.prune_schedule", refine_prune_schedule);
  m.set_double("refine.prune_fraction", prune_fraction);
  m.set("refine.idgp", bool_str(idgp));
  m.set_double("refine.idgp_scale", idgp_scale);
  m.set_double("evaluate.scale", evaluate_scale);
  return m;
}

void PipelineConfig::write_resolved(const fs::path& path) const { resolved().save(path); }

uint64_t PipelineConfig::config_hash() const {
  std::ostringstream ss;
  const Manifest snapshot = resolved();
  for (const auto& [k, v] : snapshot.entries()) ss << k << "=" << v << "\n";
  const std::string s = ss.str();
  return fnv1a(s.data(), s.size());
}

RefineConfig PipelineConfig::block_refine_config() const {
  RefineConfig rc;
  rc.iterations = refine_iterations;
  rc.lr_color = lr_color;
  rc.lr_opacity = lr_opacity;
  rc.lambda1 = lambda1;
  rc.lambda2 = lambda2;
  rc.lambda3 = lambda3;
  rc.rgb_ssim_weight = ssim_weight;
  rc.prune_schedule = idgp ? parse_schedule(refine_prune_schedule) : std::vector<double>{};
  rc.prune_fraction = prune_fraction;
  rc.idgp_scale = idgp_scale;
  rc.resolution_scale = 1.0;
  rc.render_workers = 1;
  return rc;
}

RefineConfig PipelineConfig::coarse_refine_config() const {
  RefineConfig rc = block_refine_config();
  rc.iterations = coarse_iterations;
  rc.resolution_scale = coarse_scale;
  rc.prune_schedule = parse_schedule(coarse_prune_schedule);
  rc.render_workers = effective_workers();
  return rc;
}

int PipelineConfig::effective_workers() const {
  return workers > 0 ? workers : hardware_workers();
}

// ---------------------------------------------------------------------------
// Stage helpers

const char* stage_name(Stage s) {
  switch (s) {
    case Stage::Coarse: return "coarse";
    case Stage::Partition: return "partition";
    case Stage::Assign: return "assign";
    case Stage::Refine: return "refine";
    case Stage::Merge: return "merge";
    case Stage::Evaluate: return "evaluate";
  }
  return "?";
}

std::optional<Stage> stage_from_name(const std::string& name) {
  for (Stage s : kAllStages)
    if (name == stage_name(s)) return s;
  return std::nullopt;
}

std::vector<CameraView> load_dataset_cameras(const PipelineConfig& config, bool load_images) {
  return load_cameras(config.dataset_root / "cameras.txt", config.dataset_root, load_images);
}

std::vector<CameraView> filter_views(std::span<const CameraView> cams, bool eval_split) {
  std::vector<CameraView> out;
  for (const CameraView& c : cams)
    if (c.is_eval == eval_split) out.push_back(c);
  return out;
}

namespace {

fs::path stage_dir(const PipelineConfig& cfg, Stage s) { return cfg.output_dir / stage_name(s); }

fs::path stage_manifest_path(const PipelineConfig& cfg, Stage s) {
  return stage_dir(cfg, s) / "manifest.txt";
}

void require_stage(const PipelineConfig& cfg, Stage current, Stage needed) {
  if (!fs::exists(stage_manifest_path(cfg, needed)))
    throw PipelineError(std::string("stage '") + stage_name(current) + "' requires completed stage '" +
                        stage_name(needed) + "' (missing " +
                        stage_manifest_path(cfg, needed).string() + ")");
}

class StageTimer {
 public:
  explicit StageTimer(fs::path dir) : dir_(std::move(dir)), start_(clock::now()) {}
  ~StageTimer() {
    const auto ms =
        std::chrono::duration_cast<std::chrono::milliseconds>(clock::now() - start_).count();
    std::ofstream out(dir_ / "timing.txt");
    out << "wall_ms " << ms << "\n";
  }

 private:
  using clock = std::chrono::steady_clock;
  fs::path dir_;
  clock::time_point start_;
};

void record_input(Manifest& m, const std::string& name, const fs::path& path) {
  m.set("input." + name + ".path", path.string());
  m.set("input." + name + ".hash", hash_string(hash_file(path)));
}

void stamp(Manifest& m, const PipelineConfig& cfg, Stage s) {
  m.set("stage", stage_name(s));
  m.set("seed", static_cast<int64_t>(cfg.seed));
  m.set("config_hash", hash_string(cfg.config_hash()));
}

// Deterministic per-block seeds.
uint64_t mix_seed(uint64_t seed, uint64_t salt) {
  uint64_t z = seed ^ (0x9e3779b97f4a7c15ull * (salt + 0x51ull));
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  return z ^ (z >> 31);
}

SceneBounds gaussian_aabb(const GaussianScene& scene) {
  SceneBounds b;
  b.min = scene[0].position.cast<double>();
  b.max = b.min;
  for (const GaussianPrimitive& g : scene.primitives) {
    b.min = b.min.cwiseMin(g.position.cast<double>());
    b.max = b.max.cwiseMax(g.position.cast<double>());
  }
  for (int a = 0; a < 3; ++a)
    if (b.max[a] - b.min[a] <= 0) b.max[a] = b.min[a] + 1e-3;
  return b;
}

GridShape resolve_grid(const PipelineConfig& cfg, const SceneBounds& hull) {
  if (cfg.grid != "auto") return parse_grid(cfg.grid);
  if (cfg.blocks != 4)
    throw ArgumentError("partition.grid=auto supports 4 blocks; set partition.grid=AxBxC");
  // Split the two axes of largest hull extent.
  const Vec3d ext = hull.extent();
  int order[3] = {0, 1, 2};
  std::sort(order, order + 3, [&](int a, int b) { return ext[a] > ext[b]; });
  int counts[3] = {1, 1, 1};
  counts[order[0]] = 2;
  counts[order[1]] = 2;
  return GridShape{counts[0], counts[1], counts[2]};
}

void write_refine_log(const fs::path& path, const RefineResult& result) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write refine log: " + path.string());
  for (const RefineIterationLog& log : result.iteration_logs) {
    nlohmann::json j{{"iter", log.iteration},
                     {"view", log.view_id},
                     {"l_rgb", log.loss.l_rgb},
                     {"l_s", log.loss.l_s},
                     {"l_n", log.loss.l_n},
                     {"l_dn", log.loss.l_dn},
                     {"total", log.loss.total},
                     {"trainable", log.trainable}};
    if (log.empty_normal_masks > 0) j["empty_normal_masks"] = log.empty_normal_masks;
    out << j.dump() << "\n";
  }
  for (const PruneEventLog& ev : result.prune_events) {
    const nlohmann::json j{
        {"iter", ev.iteration}, {"event", "prune"}, {"removed", ev.removed},
        {"trainable", ev.trainable_after}};
    out << j.dump() << "\n";
  }
}

std::string csv_number(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

// ---------------------------------------------------------------------------
// Stages

Manifest run_coarse(const PipelineConfig& cfg) {
  const fs::path dir = stage_dir(cfg, Stage::Coarse);
  fs::create_directories(dir);
  StageTimer timer(dir);

  const fs::path cameras_path = cfg.dataset_root / "cameras.txt";
  const std::vector<CameraView> cameras = load_dataset_cameras(cfg, true);
  const std::vector<CameraView> train = filter_views(cameras, false);
  if (train.empty()) throw PipelineError("coarse: no training views in dataset");

  GaussianScene scene = load_scene_ply(cfg.scene_path());
  if (scene.empty()) throw PipelineError("coarse: initial scene is empty");
  const size_t input_count = scene.size();

  RefineResult result;
  if (cfg.coarse_enabled) {
    BlockSpec whole;
    whole.index = 0;
    whole.b_min = Vec3d::Constant(-2.0);
    whole.b_max = Vec3d::Constant(2.0);
    whole.expanded_min = whole.b_min;
    whole.expanded_max = whole.b_max;
    whole.member_indices.resize(scene.size());
    for (size_t i = 0; i < scene.size(); ++i) whole.member_indices[i] = static_cast<int>(i);
    whole.expanded_indices = whole.member_indices;
    result = refine_block(whole, scene, train, cfg.coarse_refine_config(),
                          mix_seed(cfg.seed, 0xc0a25eull));
    scene = result.scene;
  }

  save_scene_ply(scene, dir / "scene.ply");
  write_refine_log(dir / "refine.log.jsonl", result);

  Manifest m;
  stamp(m, cfg, Stage::Coarse);
  record_input(m, "cameras", cameras_path);
  record_input(m, "scene", cfg.scene_path());
  m.set("trained", bool_str(cfg.coarse_enabled));
  m.set("views.train", static_cast<int64_t>(train.size()));
  m.set("views.eval", static_cast<int64_t>(cameras.size() - train.size()));
  m.set("memory.input_primitives", static_cast<int64_t>(input_count));
  m.set("memory.primitives", static_cast<int64_t>(scene.size()));
  m.set("memory.bytes", static_cast<int64_t>(model_bytes(scene.size())));
  m.set_file_hash("output.scene", dir / "scene.ply");
  m.save(dir / "manifest.txt");
  return m;
}

Manifest run_partition(const PipelineConfig& cfg) {
  require_stage(cfg, Stage::Partition, Stage::Coarse);
  const fs::path dir = stage_dir(cfg, Stage::Partition);
  fs::create_directories(dir);
  StageTimer timer(dir);

  const fs::path scene_path = stage_dir(cfg, Stage::Coarse) / "scene.ply";
  const GaussianScene scene = load_scene_ply(scene_path);
  const std::vector<CameraView> cameras =
      load_cameras(cfg.dataset_root / "cameras.txt", cfg.dataset_root, false);

  const SceneBounds hull = compute_bounds(cameras, cfg.bounds_margin);
  SceneBounds internal = hull;
  if (cfg.bounds_source == "gaussians")
    internal = compute_bounds_percentile(scene, 0.01, 0.99, cfg.bounds_margin);
  else if (cfg.bounds_source != "cameras")
    throw ArgumentError("unknown bounds_source '" + cfg.bounds_source + "'");

  const SpaceMap space = cfg.contraction ? SpaceMap::make_contracted(internal)
                                         : SpaceMap::make_world(gaussian_aabb(scene));
  const GridShape grid = resolve_grid(cfg, hull);

  std::vector<BlockSpec> blocks = partition(scene, space, grid);
  const int k_threshold =
      cfg.k_threshold > 0
          ? cfg.k_threshold
          : static_cast<int>(scene.size() / (2 * static_cast<size_t>(grid.count())));
  const std::vector<Vec3d> mapped = mapped_positions(scene, space);

  Manifest m;
  stamp(m, cfg, Stage::Partition);
  int saturated = 0;
  for (BlockSpec& b : blocks) {
    ExpandResult res = expand_block(b, mapped, k_threshold, space);
    if (res.saturated) ++saturated;
    b = std::move(res.block);
    char key[64];
    std::snprintf(key, sizeof(key), "memory.block_%02d.members", b.index);
    m.set(key, static_cast<int64_t>(b.member_indices.size()));
    std::snprintf(key, sizeof(key), "memory.block_%02d.expanded", b.index);
    m.set(key, static_cast<int64_t>(b.expanded_indices.size()));
  }

  write_block_report(dir / "blocks.txt", space, grid, blocks);
  save_blockset(dir / "blockset.txt", space, grid, blocks);

  record_input(m, "cameras", cfg.dataset_root / "cameras.txt");
  record_input(m, "scene", scene_path);
  m.set("grid", std::to_string(grid.nx) + "x" + std::to_string(grid.ny) + "x" +
                    std::to_string(grid.nz));
  m.set("blocks", static_cast<int64_t>(grid.count()));
  m.set("k_threshold", static_cast<int64_t>(k_threshold));
  m.set("saturated_expansions", static_cast<int64_t>(saturated));
  m.set("memory.primitives", static_cast<int64_t>(scene.size()));
  m.set_file_hash("output.blockset", dir / "blockset.txt");
  m.save(dir / "manifest.txt");
  return m;
}

Manifest run_assign(const PipelineConfig& cfg) {
  require_stage(cfg, Stage::Assign, Stage::Partition);
  const fs::path dir = stage_dir(cfg, Stage::Assign);
  fs::create_directories(dir);
  StageTimer timer(dir);

  const fs::path scene_path = stage_dir(cfg, Stage::Coarse) / "scene.ply";
  const fs::path blockset_path = stage_dir(cfg, Stage::Partition) / "blockset.txt";
  const GaussianScene scene = load_scene_ply(scene_path);
  BlockSet set = load_blockset(blockset_path);
  const std::vector<CameraView> cameras =
      load_cameras(cfg.dataset_root / "cameras.txt", cfg.dataset_root, false);
  const std::vector<CameraView> train = filter_views(cameras, false);

  std::vector<AssignmentReport> reports;
  std::set<int> assigned_any;
  for (BlockSpec& block : set.blocks) {
    AssignmentReport rep;
    rep.block_index = block.index;
    if (cfg.so_assignment) {
      SsimAssignment so = assign_by_ssim(scene, block, train, cfg.epsilon, cfg.assign_scale,
                                         cfg.effective_workers());
      rep.p1_ids = std::move(so.ids);
      rep.per_view_ssim_loss = std::move(so.loss);
    }
    if (cfg.bo_assignment) rep.p2_ids = assign_by_bounds(block, train, set.space);
    rep.final_ids = merge_assignments(rep.p1_ids, rep.p2_ids);
    block.assigned_view_ids = rep.final_ids;
    assigned_any.insert(rep.final_ids.begin(), rep.final_ids.end());
    reports.push_back(std::move(rep));
  }

  std::vector<int> unassigned;
  for (const CameraView& v : train)
    if (!assigned_any.count(v.id)) unassigned.push_back(v.id);

  write_assignment_report(dir / "assignments.txt", reports, unassigned);
  save_blockset(dir / "blockset.txt", set.space, set.grid, set.blocks);

  Manifest m;
  stamp(m, cfg, Stage::Assign);
  record_input(m, "scene", scene_path);
  record_input(m, "blockset", blockset_path);
  for (const AssignmentReport& rep : reports) {
    char key[64];
    std::snprintf(key, sizeof(key), "block_%02d.views", rep.block_index);
    m.set(key, static_cast<int64_t>(rep.final_ids.size()));
  }
  m.set("unassigned_views", static_cast<int64_t>(unassigned.size()));
  m.set_file_hash("output.blockset", dir / "blockset.txt");
  m.set_file_hash("output.assignments", dir / "assignments.txt");
  m.save(dir / "manifest.txt");
  return m;
}

Manifest run_refine(const PipelineConfig& cfg) {
  require_stage(cfg, Stage::Refine, Stage::Assign);
  const fs::path dir = stage_dir(cfg, Stage::Refine);
  fs::create_directories(dir);
  StageTimer timer(dir);

  const fs::path scene_path = stage_dir(cfg, Stage::Coarse) / "scene.ply";
  const fs::path blockset_path = stage_dir(cfg, Stage::Assign) / "blockset.txt";
  const GaussianScene scene = load_scene_ply(scene_path);
  const BlockSet set = load_blockset(blockset_path);
  const std::vector<CameraView> cameras = load_dataset_cameras(cfg, true);

  const RefineConfig rc = cfg.block_refine_config();
  std::vector<RefineResult> results(set.blocks.size());
  parallel_for(static_cast<int64_t>(set.blocks.size()), cfg.effective_workers(), [&](int64_t i) {
    const BlockSpec& block = set.blocks[static_cast<size_t>(i)];
    std::vector<CameraView> views;
    for (int id : block.assigned_view_ids)
      for (const CameraView& cam : cameras)
        if (cam.id == id && !cam.is_eval) views.push_back(cam);
    results[static_cast<size_t>(i)] =
        refine_block(block, scene, views, rc, mix_seed(cfg.seed, static_cast<uint64_t>(block.index)));
  });

  Manifest m;
  stamp(m, cfg, Stage::Refine);
  record_input(m, "scene", scene_path);
  record_input(m, "blockset", blockset_path);
  int64_t peak_trainable = 0;
  for (size_t i = 0; i < results.size(); ++i) {
    const BlockSpec& block = set.blocks[i];
    char name[64];
    std::snprintf(name, sizeof(name), "block_%02d.ply", block.index);
    save_scene_ply(results[i].scene, dir / name);
    char key[64];
    std::snprintf(key, sizeof(key), "output.block_%02d", block.index);
    m.set_file_hash(key, dir / name);
    std::snprintf(name, sizeof(name), "block_%02d.log.jsonl", block.index);
    write_refine_log(dir / name, results[i]);

    std::set<int> trainable(block.member_indices.begin(), block.member_indices.end());
    trainable.insert(block.expanded_indices.begin(), block.expanded_indices.end());
    peak_trainable = std::max<int64_t>(peak_trainable, static_cast<int64_t>(trainable.size()));
    std::snprintf(key, sizeof(key), "memory.block_%02d.trainable", block.index);
    m.set(key, static_cast<int64_t>(trainable.size()));
    std::snprintf(key, sizeof(key), "block_%02d.skipped", block.index);
    m.set(key, bool_str(results[i].skipped));
  }
  m.set("memory.peak_trainable", peak_trainable);
  m.set("memory.coarse_primitives", static_cast<int64_t>(scene.size()));
  m.save(dir / "manifest.txt");
  return m;
}

Manifest run_merge(const PipelineConfig& cfg) {
  require_stage(cfg, Stage::Merge, Stage::Refine);
  const fs::path dir = stage_dir(cfg, Stage::Merge);
  fs::create_directories(dir);
  StageTimer timer(dir);

  const fs::path blockset_path = stage_dir(cfg, Stage::Assign) / "blockset.txt";
  const BlockSet set = load_blockset(blockset_path);

  std::vector<std::pair<BlockSpec, GaussianScene>> refined;
  Manifest m;
  stamp(m, cfg, Stage::Merge);
  record_input(m, "blockset", blockset_path);
  for (const BlockSpec& block : set.blocks) {
    char name[64];
    std::snprintf(name, sizeof(name), "block_%02d.ply", block.index);
    const fs::path ply = stage_dir(cfg, Stage::Refine) / name;
    char key[64];
    std::snprintf(key, sizeof(key), "block_%02d", block.index);
    record_input(m, key, ply);
    refined.emplace_back(block, load_scene_ply(ply));
  }

  MergeReport report;
  const GaussianScene merged = merge_blocks(refined, set.space, &report);
  save_scene_ply(merged, dir / "merged.ply");

  m.set("memory.final_primitives", static_cast<int64_t>(merged.size()));
  m.set("memory.final_bytes", static_cast<int64_t>(model_bytes(merged.size())));
  m.set("discarded", static_cast<int64_t>(report.discarded));
  m.set_file_hash("output.merged", dir / "merged.ply");
  m.save(dir / "manifest.txt");
  return m;
}

Manifest run_evaluate(const PipelineConfig& cfg) {
  require_stage(cfg, Stage::Evaluate, Stage::Merge);
  const fs::path dir = stage_dir(cfg, Stage::Evaluate);
  fs::create_directories(dir / "renders");
  StageTimer timer(dir);

  const std::vector<CameraView> cameras = load_dataset_cameras(cfg, true);
  const std::vector<CameraView> evals = filter_views(cameras, true);
  if (evals.empty()) throw PipelineError("evaluate: dataset has no eval views");

  // Held-out views must be disjoint from every assigned set.
  const BlockSet set = load_blockset(stage_dir(cfg, Stage::Assign) / "blockset.txt");
  for (const BlockSpec& b : set.blocks)
    for (int id : b.assigned_view_ids)
      for (const CameraView& ev : evals)
        if (ev.id == id)
          throw PipelineError("evaluate: eval view " + std::to_string(id) + " is assigned to block " +
                              std::to_string(b.index));

  const fs::path merged_path = stage_dir(cfg, Stage::Merge) / "merged.ply";
  const fs::path coarse_path = stage_dir(cfg, Stage::Coarse) / "scene.ply";
  const GaussianScene merged = load_scene_ply(merged_path);
  const GaussianScene coarse = load_scene_ply(coarse_path);

  const fs::path renders = dir / "renders";
  const EvalSummary sm = evaluate_scene(merged, evals, cfg.evaluate_scale,
                                        cfg.effective_workers(), &renders);
  const EvalSummary sc = evaluate_scene(coarse, evals, cfg.evaluate_scale, cfg.effective_workers());

  std::ofstream csv(dir / "metrics.csv");
  csv << "view_id,psnr_db,ssim\n";
  for (const ViewMetrics& vm : sm.per_view)
    csv << vm.view_id << "," << csv_number(vm.psnr_db) << "," << csv_number(vm.ssim) << "\n";
  csv << "mean," << csv_number(sm.mean_psnr) << "," << csv_number(sm.mean_ssim) << "\n";
  csv << "coarse_mean," << csv_number(sc.mean_psnr) << "," << csv_number(sc.mean_ssim) << "\n";
  csv.close();

  Manifest m;
  stamp(m, cfg, Stage::Evaluate);
  record_input(m, "merged", merged_path);
  record_input(m, "coarse", coarse_path);
  m.set_double("mean_psnr", sm.mean_psnr);
  m.set_double("mean_ssim", sm.mean_ssim);
  m.set_double("coarse_mean_psnr", sc.mean_psnr);
  m.set_double("coarse_mean_ssim", sc.mean_ssim);
  m.set_file_hash("output.metrics", dir / "metrics.csv");
  m.save(dir / "manifest.txt");
  return m;
}

}  // namespace

Manifest run_stage(Stage stage, const PipelineConfig& cfg) {
  fs::create_directories(cfg.output_dir);
  cfg.write_resolved(cfg.output_dir / "config.resolved.txt");
  switch (stage) {
    case Stage::Coarse: return run_coarse(cfg);
    case Stage::Partition: return run_partition(cfg);
    case Stage::Assign: return run_assign(cfg);
    case Stage::Refine: return run_refine(cfg);
    case Stage::Merge: return run_merge(cfg);
    case Stage::Evaluate: return run_evaluate(cfg);
  }
  throw ArgumentError("unknown stage");
}

namespace {

bool stage_satisfied(const PipelineConfig& cfg, Stage s) {
  const fs::path manifest_path = stage_manifest_path(cfg, s);
  if (!fs::exists(manifest_path)) return false;
  Manifest m;
  try {
    m = Manifest::load(manifest_path);
  } catch (const Error&) {
    return false;
  }
  if (!m.has("config_hash") || m.get("config_hash") != hash_string(cfg.config_hash())) return false;
  for (const auto& [key, value] : m.entries()) {
    if (key.size() > 5 && key.compare(key.size() - 5, 5, ".path") == 0) {
      const std::string hash_key = key.substr(0, key.size() - 5) + ".hash";
      if (!m.has(hash_key)) return false;
      try {
        if (hash_string(hash_file(value)) != m.get(hash_key)) return false;
      } catch (const Error&) {
        return false;
      }
    }
  }
  return true;
}

}  // namespace

void run_full(const PipelineConfig& cfg) {
  for (Stage s : kAllStages) {
    if (stage_satisfied(cfg, s)) continue;
    run_stage(s, cfg);
  }
}

EvalSummary evaluate_scene(const GaussianScene& scene, std::span<const CameraView> views,
                           double scale, int workers, const fs::path* render_dir) {
  EvalSummary summary;
  summary.per_view.resize(views.size());
  parallel_for(static_cast<int64_t>(views.size()), workers, [&](int64_t i) {
    const CameraView& cam = views[static_cast<size_t>(i)];
    RenderOptions opts;
    opts.resolution_scale = scale;
    const RenderOutput<float> out = render<float>(scene, cam, opts);
    const Image3f rendered = quantize8(out.color);
    Image3f target = cam.image;
    if (scale != 1.0) target = resize_image(target, out.height(), out.width());
    target = quantize8(target);
    ViewMetrics& vm = summary.per_view[static_cast<size_t>(i)];
    vm.view_id = cam.id;
    vm.psnr_db = psnr(rendered, target);
    vm.ssim = ssim(rendered, target);
    if (render_dir) {
      char name[64];
      std::snprintf(name, sizeof(name), "view_%03d.png", cam.id);
      save_png(*render_dir / name, rendered);
    }
  });
  for (const ViewMetrics& vm : summary.per_view) {
    summary.mean_psnr += vm.psnr_db;
    summary.mean_ssim += vm.ssim;
  }
  if (!summary.per_view.empty()) {
    summary.mean_psnr /= static_cast<double>(summary.per_view.size());
    summary.mean_ssim /= static_cast<double>(summary.per_view.size());
  }
  return summary;
}

EvalSummary run_evaluate_scene(const PipelineConfig& cfg, const fs::path& scene_ply,
                               const fs::path& out_dir) {
  fs::create_directories(out_dir / "renders");
  const GaussianScene scene = load_scene_ply(scene_ply);
  const std::vector<CameraView> cameras = load_dataset_cameras(cfg, true);
  const std::vector<CameraView> evals = filter_views(cameras, true);
  if (evals.empty()) throw PipelineError("evaluate: dataset has no eval views");
  const fs::path renders = out_dir / "renders";
  const EvalSummary summary =
      evaluate_scene(scene, evals, cfg.evaluate_scale, cfg.effective_workers(), &renders);

  std::ofstream csv(out_dir / "metrics.csv");
  csv << "view_id,psnr_db,ssim\n";
  for (const ViewMetrics& vm : summary.per_view)
    csv << vm.view_id << "," << csv_number(vm.psnr_db) << "," << csv_number(vm.ssim) << "\n";
  csv << "mean," << csv_number(summary.mean_psnr) << "," << csv_number(summary.mean_ssim) << "\n";
  csv.close();

  Manifest m;
  m.set("stage", "evaluate_scene");
  m.set("seed", static_cast<int64_t>(cfg.seed));
  record_input(m, "scene", scene_ply);
  m.set_double("mean_psnr", summary.mean_psnr);
  m.set_double("mean_ssim", summary.mean_ssim);
  m.set_file_hash("output.metrics", out_dir / "metrics.csv");
  m.save(out_dir / "manifest.txt");
  return summary;
}

ScoreRunResult run_score(const PipelineConfig& cfg, const fs::path& scene_ply, double fraction,
                         bool prune_highest, const fs::path& out_dir) {
  fs::create_directories(out_dir);
  const GaussianScene scene = load_scene_ply(scene_ply);
  const std::vector<CameraView> cameras =
      load_cameras(cfg.dataset_root / "cameras.txt", cfg.dataset_root, false);
  const std::vector<CameraView> train = filter_views(cameras, false);

  std::vector<int> subset(scene.size());
  for (size_t i = 0; i < subset.size(); ++i) subset[i] = static_cast<int>(i);
  std::vector<ImportanceRecord> records =
      accumulate_hits(scene, train, subset, cfg.idgp_scale, cfg.effective_workers());
  score_records(records, scene);
  write_importance_csv(out_dir / "scores.csv", records);

  std::vector<ImportanceRecord> for_prune = records;
  if (prune_highest)
    for (ImportanceRecord& r : for_prune) r.score = -r.score;
  const PruneResult pruned = prune(scene, subset, for_prune, fraction);
  save_scene_ply(pruned.scene, out_dir / "pruned.ply");

  Manifest m;
  m.set("stage", "score");
  m.set("seed", static_cast<int64_t>(cfg.seed));
  m.set("fraction", std::to_string(fraction));
  m.set("prune_highest", prune_highest ? "true" : "false");
  record_input(m, "scene", scene_ply);
  m.set("memory.input_primitives", static_cast<int64_t>(scene.size()));
  m.set("memory.primitives", static_cast<int64_t>(pruned.scene.size()));
  m.set("memory.bytes", static_cast<int64_t>(model_bytes(pruned.scene.size())));
  m.set_file_hash("output.pruned", out_dir / "pruned.ply");
  m.set_file_hash("output.scores", out_dir / "scores.csv");
  m.save(out_dir / "manifest.txt");

  ScoreRunResult res;
  res.input_count = scene.size();
  res.removed = pruned.removed_indices.size();
  res.pruned_ply = out_dir / "pruned.ply";
  res.csv = out_dir / "scores.csv";
  return res;
}

}  // namespace splat
