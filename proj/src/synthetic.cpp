// Copyright Contributors to the splatblocks Project
// SPDX-License-Identifier: Apache-2.0

#include "splatblocks/synthetic.hpp"

#include <cmath>
#include <cstdio>
#include <vector>

#include "splatblocks/camera_io.hpp"
#include "splatblocks/errors.hpp"
#include "splatblocks/image_io.hpp"
#include "splatblocks/manifest.hpp"
#include "splatblocks/ply_io.hpp"
#include "splatblocks/renderer.hpp"
#include "splatblocks/rng.hpp"

namespace splat {

namespace {

constexpr double kPi = 3.14159265358979323846;

Vec3f palette(double x, double y) {
  const double r = 0.50 + 0.27 * std::sin(1.3 * x) * std::cos(0.9 * y);
  const double g = 0.50 + 0.25 * std::sin(0.7 * x + 1.1 * y);
  const double b = 0.46 + 0.27 * std::cos(1.7 * x) * std::sin(0.5 * y + 0.3);
  return Vec3f(float(r), float(g), float(b));
}

Eigen::Quaternionf align_z_to(const Vec3f& dir) {
  return Eigen::Quaternionf::FromTwoVectors(Vec3f::UnitZ(), dir);
}

struct LayoutPrimitive {
  GaussianPrimitive g;
  Vec3f prior_normal = Vec3f::Zero();  // world frame; zero = no prior
};

CameraView make_orbit_camera(int id, double radius, double z, double angle, int width, int height,
                             double focal) {
  const Vec3d eye(radius * std::cos(angle), radius * std::sin(angle), z);
  const Vec3d target(0.0, 0.0, 0.7);
  const Vec3d up(0.0, 0.0, 1.0);
  const Vec3d back = (eye - target).normalized();  // camera +z
  const Vec3d right = up.cross(back).normalized();
  const Vec3d cam_up = back.cross(right);

  CameraView cam;
  cam.id = id;
  cam.width = width;
  cam.height = height;
  cam.fx = focal;
  cam.fy = focal;
  cam.cx = width / 2.0;
  cam.cy = height / 2.0;
  cam.rotation.row(0) = right;
  cam.rotation.row(1) = cam_up;
  cam.rotation.row(2) = back;
  cam.translation = -cam.rotation * eye;
  return cam;
}

}  // namespace

GaussianScene add_color_noise(const GaussianScene& scene, double sigma, uint64_t seed) {
  Rng rng(seed);
  GaussianScene noisy = scene;
  const double dc_sigma = sigma / kShC0;
  for (GaussianPrimitive& g : noisy.primitives)
    for (int c = 0; c < 3; ++c) g.sh(c, 0) += static_cast<float>(dc_sigma * rng.normal());
  return noisy;
}

SyntheticResult generate_synthetic(const SyntheticSpec& spec,
                                   const std::filesystem::path& out_dir) {
  if (spec.gaussian_count < 50) throw ArgumentError("synthetic scene needs >= 50 primitives");
  if (spec.camera_count < 4) throw ArgumentError("synthetic scene needs >= 4 cameras");

  namespace fs = std::filesystem;
  fs::create_directories(out_dir / "images");
  fs::create_directories(out_dir / "normals");
  fs::create_directories(out_dir / "conf");

  Rng rng(spec.seed);
  const int n = spec.gaussian_count;
  const int plane_side = std::max(3, static_cast<int>(std::lround(std::sqrt(0.338 * n))));
  const int plane_count = plane_side * plane_side;
  const int plane_jitter = static_cast<int>(std::lround(0.168 * n));
  const int per_sphere = std::max(4, static_cast<int>(std::lround(0.064 * n)));
  const int per_sphere_jitter = per_sphere / 2;
  const int shell_count = static_cast<int>(std::lround(0.09 * n));
  const int used = plane_count + plane_jitter + 3 * (per_sphere + per_sphere_jitter) + shell_count;
  const int dust_count = std::max(0, n - used);

  std::vector<LayoutPrimitive> layout;
  layout.reserve(static_cast<size_t>(n));

  // Textured ground plane.
  const double span = 8.0;
  const double spacing = span / plane_side;
  for (int iy = 0; iy < plane_side; ++iy)
    for (int ix = 0; ix < plane_side; ++ix) {
      LayoutPrimitive p;
      const double x = -span / 2 + (ix + 0.5) * spacing;
      const double y = -span / 2 + (iy + 0.5) * spacing;
      p.g.position = Vec3f(float(x), float(y), 0.0f);
      p.g.scale = Vec3f(float(0.68 * spacing), float(0.68 * spacing), 0.015f);
      p.g.opacity = 0.93f;
      p.g.set_dc_color(palette(x, y));
      p.prior_normal = Vec3f::UnitZ();
      layout.push_back(p);
    }

  // Redundant second layer over random tiles; prunable without holes.
  for (int i = 0; i < plane_jitter; ++i) {
    LayoutPrimitive p;
    const double x = rng.uniform(-span / 2 + 0.3, span / 2 - 0.3);
    const double y = rng.uniform(-span / 2 + 0.3, span / 2 - 0.3);
    p.g.position = Vec3f(float(x), float(y), 0.012f);
    p.g.scale = Vec3f(float(0.55 * spacing), float(0.55 * spacing), 0.015f);
    p.g.opacity = 0.45f;
    p.g.set_dc_color(palette(x, y));
    p.prior_normal = Vec3f::UnitZ();
    layout.push_back(p);
  }

  // Three tangent-disc spheres.
  const Vec3f centers[3] = {{2.2f, 2.2f, 0.9f}, {-2.4f, 1.8f, 0.7f}, {0.4f, -2.5f, 0.8f}};
  const float radii[3] = {0.75f, 0.6f, 0.7f};
  const Vec3f hues[3] = {{0.78f, 0.32f, 0.25f}, {0.25f, 0.62f, 0.78f}, {0.72f, 0.68f, 0.22f}};
  for (int s = 0; s < 3; ++s) {
    const auto sphere_point = [&](double u, double v) {
      const double z = 1.0 - 2.0 * u;           // [-1, 1]
      const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
      const double a = 2.0 * kPi * v;
      return Vec3f(float(r * std::cos(a)), float(r * std::sin(a)), float(z));
    };
    const double golden = (1.0 + std::sqrt(5.0)) / 2.0;
    for (int i = 0; i < per_sphere; ++i) {
      LayoutPrimitive p;
      const Vec3f dir = sphere_point((i + 0.5) / per_sphere, std::fmod(i / golden, 1.0));
      p.g.position = centers[s] + radii[s] * dir;
      p.g.rotation = align_z_to(dir);
      p.g.scale = Vec3f(0.33f * radii[s], 0.33f * radii[s], 0.02f);
      p.g.opacity = 0.92f;
      Vec3f c = hues[s] + 0.16f * Vec3f(dir.x(), dir.y(), dir.z());
      p.g.set_dc_color(c.cwiseMax(0.06f).cwiseMin(0.94f));
      // Mild view dependence on the clusters.
      for (int ch = 0; ch < 3; ++ch)
        for (int k = 1; k <= 3; ++k) p.g.sh(ch, k) = float(0.05 * rng.normal());
      p.prior_normal = dir;
      layout.push_back(p);
    }
    for (int i = 0; i < per_sphere_jitter; ++i) {
      LayoutPrimitive p;
      const Vec3f dir = sphere_point(rng.uniform(), rng.uniform());
      p.g.position = centers[s] + radii[s] * 1.01f * dir;
      p.g.rotation = align_z_to(dir);
      p.g.scale = Vec3f(0.26f * radii[s], 0.26f * radii[s], 0.02f);
      p.g.opacity = 0.4f;
      Vec3f c = hues[s] + 0.16f * Vec3f(dir.x(), dir.y(), dir.z());
      p.g.set_dc_color(c.cwiseMax(0.06f).cwiseMin(0.94f));
      p.prior_normal = dir;
      layout.push_back(p);
    }
  }

  // Low-importance dust inside the scene volume.
  for (int i = 0; i < dust_count; ++i) {
    LayoutPrimitive p;
    p.g.position = Vec3f(float(rng.uniform(-3.5, 3.5)), float(rng.uniform(-3.5, 3.5)),
                         float(rng.uniform(0.3, 2.6)));
    const float s = float(rng.uniform(0.015, 0.04));
    p.g.scale = Vec3f(s, s, s);
    p.g.opacity = float(rng.uniform(0.02, 0.06));
    p.g.set_dc_color(Vec3f(float(rng.uniform(0.3, 0.7)), float(rng.uniform(0.3, 0.7)),
                           float(rng.uniform(0.3, 0.7))));
    layout.push_back(p);
  }

  // Far shell points, biased to one octant so the world-space bounding box
  // is strongly skewed while the contracted grid stays balanced.
  for (int i = 0; i < shell_count; ++i) {
    LayoutPrimitive p;
    const double az = rng.uniform(5.0, 85.0) * kPi / 180.0;
    const double el = rng.uniform(10.0, 35.0) * kPi / 180.0;
    const double r = rng.uniform(40.0, 70.0);
    p.g.position = Vec3f(float(r * std::cos(el) * std::cos(az)),
                         float(r * std::cos(el) * std::sin(az)), float(r * std::sin(el)));
    p.g.scale = Vec3f(0.5f, 0.5f, 0.5f);
    p.g.opacity = 0.02f;
    p.g.set_dc_color(Vec3f(0.5f, 0.5f, 0.55f));
    layout.push_back(p);
  }

  GaussianScene scene;
  scene.primitives.reserve(layout.size());
  for (const LayoutPrimitive& p : layout) scene.primitives.push_back(p.g);

  // Cameras: two orbit rings, eval views every eval_every.
  std::vector<CameraView> cameras;
  const int half = spec.camera_count / 2;
  for (int i = 0; i < spec.camera_count; ++i) {
    const bool low = i < half;
    const int k = low ? i : i - half;
    const int ring_n = low ? half : spec.camera_count - half;
    const double angle = 2.0 * kPi * k / ring_n + (low ? 0.0 : kPi / ring_n);
    CameraView cam = make_orbit_camera(i, low ? 9.2 : 7.4, low ? 1.4 : 6.8, angle, spec.width,
                                       spec.height, 0.92 * spec.width);
    cam.is_eval = spec.eval_every > 0 && (i % spec.eval_every == 0);
    cameras.push_back(cam);
  }

  // Ground-truth renders; priors from the dominant contributor per pixel.
  // Black background, matching the pipeline's training and evaluation
  // renders, so a perfect scene reproduces the stored images exactly.
  RenderOptions opts;
  opts.capture_traces = true;
  opts.workers = spec.workers;
  std::vector<CameraRecord> records(cameras.size());
  char name[64];
  for (size_t v = 0; v < cameras.size(); ++v) {
    const RenderOutput<float> out = render<float>(scene, cameras[v], opts);
    std::snprintf(name, sizeof(name), "images/view_%03d.png", cameras[v].id);
    const std::string image_rel = name;
    save_png(out_dir / image_rel, out.color);

    Image3f normals(spec.height, spec.width);
    ImagePlane<float> conf(spec.height, spec.width);
    conf.setZero();
    const Mat3f rot = cameras[v].rotation.cast<float>();
    for (int y = 0; y < spec.height; ++y)
      for (int x = 0; x < spec.width; ++x) {
        float best_w = 0.0f;
        int best = -1;
        for (const TraceEntry<float>& e : out.trace(y, x)) {
          const float wgt = e.alpha * e.transmittance;
          if (wgt > best_w) {
            best_w = wgt;
            best = e.source;
          }
        }
        if (best < 0) continue;
        const Vec3f n_world = layout[static_cast<size_t>(best)].prior_normal;
        if (n_world.squaredNorm() < 0.25f) continue;  // dust/shell: no prior
        const Vec3f n_cam = rot * n_world;
        Vec3f n_view(n_cam.x(), -n_cam.y(), -n_cam.z());
        if (n_view.z() > 0.0f) n_view = -n_view;
        normals.set_pixel(y, x, n_view);
        conf(y, x) = std::min(1.0f, out.alpha(y, x));
      }
    std::snprintf(name, sizeof(name), "normals/view_%03d.pfm", cameras[v].id);
    const std::string normal_rel = name;
    save_pfm(out_dir / normal_rel, normals);
    std::snprintf(name, sizeof(name), "conf/view_%03d.pfm", cameras[v].id);
    const std::string conf_rel = name;
    save_pfm(out_dir / conf_rel, conf);

    records[v] = CameraRecord{&cameras[v], image_rel, normal_rel, conf_rel};
  }
  save_cameras(out_dir / "cameras.txt", records);

  save_scene_ply(scene, out_dir / "scene_gt.ply");
  const GaussianScene noisy = add_color_noise(scene, spec.noise_sigma, spec.seed ^ 0x5eedf00dULL);
  save_scene_ply(noisy, out_dir / "scene_init.ply");

  Manifest manifest;
  manifest.set("stage", "synth");
  manifest.set("seed", static_cast<int64_t>(spec.seed));
  manifest.set("primitives", static_cast<int64_t>(scene.size()));
  manifest.set("cameras", static_cast<int64_t>(cameras.size()));
  manifest.set_double("noise_sigma", spec.noise_sigma);
  manifest.set_file_hash("output.cameras", out_dir / "cameras.txt");
  manifest.set_file_hash("output.scene_gt", out_dir / "scene_gt.ply");
  manifest.set_file_hash("output.scene_init", out_dir / "scene_init.ply");
  manifest.save(out_dir / "manifest.txt");

  SyntheticResult res;
  res.primitive_count = scene.size();
  for (const CameraView& cam : cameras) (cam.is_eval ? res.eval_views : res.train_views) += 1;
  return res;
}

}  // namespace splat
