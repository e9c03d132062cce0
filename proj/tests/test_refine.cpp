// Copyright Contributors to the splatblocks Project
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <set>

#include "oracle_utils.hpp"
#include "splatblocks/metrics.hpp"
#include "splatblocks/refine.hpp"
#include "splatblocks/renderer.hpp"
#include "splatblocks/synthetic.hpp"

using namespace splat;

namespace {

struct SmallWorld {
  GaussianScene scene;
  std::vector<CameraView> views;
  BlockSpec whole;
  BlockSpec left_half;
};

// A small cloud rendered from a handful of orbiting cameras; targets are the
// clean renders, so refinement of a corrupted copy has a known optimum.
SmallWorld make_world(uint64_t seed, int n = 24, int n_views = 5) {
  SmallWorld w;
  Rng rng(seed);
  testing::RandomSceneOptions opt;
  opt.count = n;
  opt.position_radius = 0.8;
  opt.min_opacity = 0.35;
  opt.max_opacity = 0.9;
  opt.min_scale = 0.08;
  opt.max_scale = 0.35;
  w.scene = testing::make_random_scene(rng, opt);
  for (int i = 0; i < n_views; ++i) {
    const double a = 2.0 * 3.14159265 * i / n_views;
    CameraView cam = testing::make_camera(i, Vec3d(2.6 * std::cos(a), 2.6 * std::sin(a), 1.0),
                                          Vec3d::Zero(), 32, 24, 20.0);
    cam.image = render<float>(w.scene, cam).color;
    w.views.push_back(cam);
  }
  w.whole.index = 0;
  w.whole.b_min = Vec3d::Constant(-2);
  w.whole.b_max = Vec3d::Constant(2);
  w.whole.expanded_min = w.whole.b_min;
  w.whole.expanded_max = w.whole.b_max;
  for (int i = 0; i < n; ++i) w.whole.member_indices.push_back(i);
  w.whole.expanded_indices = w.whole.member_indices;

  w.left_half = w.whole;
  w.left_half.member_indices.clear();
  w.left_half.expanded_indices.clear();
  for (int i = 0; i < n; ++i)
    if (w.scene[size_t(i)].position.x() < 0) w.left_half.member_indices.push_back(i);
  w.left_half.expanded_indices = w.left_half.member_indices;
  return w;
}

RefineConfig quick_config(int iterations) {
  RefineConfig cfg;
  cfg.iterations = iterations;
  cfg.prune_schedule.clear();
  cfg.resolution_scale = 1.0;
  return cfg;
}

bool same_primitive(const GaussianPrimitive& a, const GaussianPrimitive& b) {
  return a.position == b.position && a.scale == b.scale && a.opacity == b.opacity &&
         a.rotation.coeffs() == b.rotation.coeffs() && a.sh == b.sh;
}

}  // namespace

TEST_SUITE("refine_block") {
  TEST_CASE("default schedule lands on the reference iteration thirds") {
    const std::vector<double> schedule{1.0 / 3.0, 1.0 / 2.0, 5.0 / 6.0};
    CHECK(schedule_iterations(schedule, 30000) == std::vector<int>{10000, 15000, 25000});
    CHECK(schedule_iterations(schedule, 600) == std::vector<int>{200, 300, 500});
    CHECK(schedule_iterations({}, 100).empty());
    CHECK_THROWS_AS(schedule_iterations(std::vector<double>{1.0}, 10), ArgumentError);
  }

  TEST_CASE("primitives outside the trainable set are untouched") {
    SmallWorld w = make_world(81);
    const GaussianScene corrupted = add_color_noise(w.scene, 0.1, 123);
    const RefineResult res = refine_block(w.left_half, corrupted, w.views, quick_config(30), 7);
    REQUIRE(res.scene.size() == corrupted.size());
    const std::set<int> trainable(w.left_half.member_indices.begin(),
                                  w.left_half.member_indices.end());
    bool any_changed = false;
    for (size_t i = 0; i < corrupted.size(); ++i) {
      if (trainable.count(int(i))) {
        any_changed = any_changed || !same_primitive(res.scene[i], corrupted[i]);
      } else {
        CHECK(same_primitive(res.scene[i], corrupted[i]));
      }
    }
    CHECK(any_changed);
  }

  TEST_CASE("prune events land at the schedule fractions") {
    SmallWorld w = make_world(82, 30);
    RefineConfig cfg = quick_config(60);
    cfg.prune_schedule = {1.0 / 3.0, 1.0 / 2.0, 5.0 / 6.0};
    cfg.prune_fraction = 0.2;
    const RefineResult res = refine_block(w.whole, w.scene, w.views, cfg, 3);
    REQUIRE(res.prune_events.size() == 3);
    CHECK(res.prune_events[0].iteration == 20);
    CHECK(res.prune_events[1].iteration == 30);
    CHECK(res.prune_events[2].iteration == 50);
    // floor(0.2 * 30) = 6, then floor(0.2 * 24) = 4, then floor(0.2 * 20) = 4.
    CHECK(res.prune_events[0].removed == 6);
    CHECK(res.prune_events[1].removed == 4);
    CHECK(res.prune_events[2].removed == 4);
    CHECK(res.scene.size() == 16);
    CHECK(res.original_indices.size() == 16);
  }

  TEST_CASE("deterministic given the seed") {
    SmallWorld w = make_world(83);
    const GaussianScene corrupted = add_color_noise(w.scene, 0.08, 9);
    RefineConfig cfg = quick_config(25);
    cfg.prune_schedule = {0.5};
    const RefineResult a = refine_block(w.whole, corrupted, w.views, cfg, 42);
    const RefineResult b = refine_block(w.whole, corrupted, w.views, cfg, 42);
    REQUIRE(a.scene.size() == b.scene.size());
    for (size_t i = 0; i < a.scene.size(); ++i) CHECK(same_primitive(a.scene[i], b.scene[i]));
    const RefineResult c = refine_block(w.whole, corrupted, w.views, cfg, 43);
    bool differs = c.scene.size() != a.scene.size();
    for (size_t i = 0; !differs && i < a.scene.size(); ++i)
      differs = !same_primitive(a.scene[i], c.scene[i]);
    CHECK(differs);
  }

  TEST_CASE("refining a color-noised scene improves held-out fidelity") {
    SmallWorld w = make_world(84, 28, 6);
    // Held-out view not passed to the refiner.
    const CameraView heldout =
        testing::make_camera(99, Vec3d(1.8, -1.9, 1.2), Vec3d::Zero(), 32, 24, 20.0);
    const Image3f target = render<float>(w.scene, heldout).color;

    const GaussianScene corrupted = add_color_noise(w.scene, 0.1, 17);
    const double before = psnr(render<float>(corrupted, heldout).color, target);

    RefineConfig cfg = quick_config(150);
    const RefineResult res = refine_block(w.whole, corrupted, w.views, cfg, 5);
    const double after = psnr(render<float>(res.scene, heldout).color, target);
    CHECK(after >= before);
    CHECK(after > before + 1.0);  // expect a real recovery, not a tie
  }

  TEST_CASE("loss log decomposes and trainable counts track pruning") {
    SmallWorld w = make_world(85, 20);
    for (CameraView& v : w.views) {
      // Synthetic fronto-ish priors so the normal losses are exercised.
      Image3f n(v.height, v.width);
      n.fill(Vec3f(0, 0, -1));
      v.normal_prior = n;
      ImagePlane<float> conf(v.height, v.width);
      conf.setConstant(0.7f);
      v.confidence = conf;
    }
    RefineConfig cfg = quick_config(12);
    cfg.prune_schedule = {0.5};
    const RefineResult res = refine_block(w.whole, w.scene, w.views, cfg, 11);
    REQUIRE(!res.iteration_logs.empty());
    for (const RefineIterationLog& log : res.iteration_logs) {
      const LossBreakdown& b = log.loss;
      CHECK(std::abs(b.total - (b.l_rgb + cfg.lambda1 * b.l_s + cfg.lambda2 * b.l_n +
                                cfg.lambda3 * b.l_dn)) < 1e-9);
      CHECK(b.l_n > 0.0);
    }
    CHECK(res.iteration_logs.front().trainable == 20);
    CHECK(res.iteration_logs.back().trainable == 16);
  }

  TEST_CASE("a block with no views is skipped intact") {
    SmallWorld w = make_world(86, 10);
    const RefineResult res = refine_block(w.whole, w.scene, {}, quick_config(10), 1);
    CHECK(res.skipped);
    REQUIRE(res.scene.size() == w.scene.size());
    for (size_t i = 0; i < w.scene.size(); ++i) CHECK(same_primitive(res.scene[i], w.scene[i]));
  }
}
