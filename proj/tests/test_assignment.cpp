// Copyright Contributors to the splatblocks Project
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <set>

#include "oracle_utils.hpp"
#include "splatblocks/assignment.hpp"

using namespace splat;

namespace {

// Internal box [-1,1]^3 so normalization is the identity there.
SpaceMap unit_space() {
  SceneBounds b;
  b.min = Vec3d(-1, -1, -1);
  b.max = Vec3d(1, 1, 1);
  return SpaceMap::make_contracted(b);
}

}  // namespace

TEST_SUITE("assign_by_ssim") {
  TEST_CASE("empty block assigns nothing and reports zero loss") {
    Rng rng(51);
    testing::RandomSceneOptions opt;
    opt.count = 20;
    opt.position_radius = 0.5;
    const GaussianScene scene = testing::make_random_scene(rng, opt);
    BlockSpec block;
    block.index = 0;
    std::vector<CameraView> cams = {
        testing::make_camera(0, Vec3d(3, 0, 1), Vec3d::Zero(), 48, 48, 30.0),
        testing::make_camera(1, Vec3d(-3, 1, 1), Vec3d::Zero(), 48, 48, 30.0)};
    const SsimAssignment res = assign_by_ssim(scene, block, cams, 0.1, 1.0);
    CHECK(res.ids.empty());
    CHECK(res.loss.at(0) == 0.0);
    CHECK(res.loss.at(1) == 0.0);
  }

  TEST_CASE("block holding everything a view sees is retained at the 0.1 threshold") {
    Rng rng(52);
    testing::RandomSceneOptions opt;
    opt.count = 30;
    opt.position_radius = 0.5;
    opt.min_opacity = 0.7;
    opt.max_opacity = 0.95;
    const GaussianScene scene = testing::make_random_scene(rng, opt);
    BlockSpec block;
    block.index = 0;
    block.expanded_indices.resize(scene.size());
    for (size_t i = 0; i < scene.size(); ++i) block.expanded_indices[i] = int(i);
    std::vector<CameraView> cams = {
        testing::make_camera(0, Vec3d(2.5, 0.3, 0.8), Vec3d::Zero(), 48, 48, 36.0)};
    const SsimAssignment res = assign_by_ssim(scene, block, cams, 0.1, 1.0);
    REQUIRE(res.ids == std::vector<int>{0});
    CHECK(res.loss.at(0) > 0.1);
  }

  TEST_CASE("loss is exactly zero for a block invisible to the view") {
    // Block content far behind the camera: removing it cannot change pixels.
    GaussianScene scene;
    for (int i = 0; i < 10; ++i) {
      GaussianPrimitive g;
      g.position = Vec3f(0.1f * i, 0, 0);
      g.scale = Vec3f::Constant(0.1f);
      g.opacity = 0.8f;
      scene.primitives.push_back(g);
    }
    GaussianPrimitive far;
    far.position = Vec3f(40, 0, 0);  // behind a camera at x=3 looking at origin
    far.scale = Vec3f::Constant(0.2f);
    far.opacity = 0.9f;
    scene.primitives.push_back(far);

    BlockSpec block;
    block.expanded_indices = {int(scene.size()) - 1};
    std::vector<CameraView> cams = {
        testing::make_camera(0, Vec3d(3, 0, 0.5), Vec3d::Zero(), 32, 32, 24.0)};
    const SsimAssignment res = assign_by_ssim(scene, block, cams, 0.0, 1.0);
    CHECK(res.loss.at(0) == 0.0);
  }

  TEST_CASE("assignment shrinks monotonically in epsilon") {
    Rng rng(53);
    testing::RandomSceneOptions opt;
    opt.count = 40;
    opt.position_radius = 0.8;
    const GaussianScene scene = testing::make_random_scene(rng, opt);
    BlockSpec block;
    for (int i = 0; i < 12; ++i) block.expanded_indices.push_back(i);
    std::vector<CameraView> cams;
    for (int i = 0; i < 6; ++i)
      cams.push_back(testing::make_camera(i, Vec3d(2.5 * std::cos(i), 2.5 * std::sin(i), 1.0),
                                          Vec3d::Zero(), 32, 32, 24.0));
    const SsimAssignment strict = assign_by_ssim(scene, block, cams, 0.12, 0.5);
    const SsimAssignment loose = assign_by_ssim(scene, block, cams, 0.04, 0.5);
    const std::set<int> loose_set(loose.ids.begin(), loose.ids.end());
    for (int id : strict.ids) CHECK(loose_set.count(id) == 1);
    for (const auto& [view, loss] : strict.loss)
      CHECK(loss == loose.loss.at(view));  // identical renders, identical losses
  }
}

TEST_SUITE("assign_by_bounds") {
  TEST_CASE("camera inside the block is retained; far cameras are not") {
    const SpaceMap space = unit_space();
    GaussianScene scene;
    GaussianPrimitive g;
    g.position = Vec3f(-0.5f, -0.5f, 0.0f);
    scene.primitives.push_back(g);
    auto blocks = partition(scene, space, GridShape{2, 2, 1});
    // Block 0 covers [-2,0) x [-2,0) x [-2,2).
    std::vector<CameraView> cams = {
        testing::make_camera(0, Vec3d(-0.5, -0.5, 0.2), Vec3d(-0.4, -0.4, 0), 8, 8, 10.0),
        testing::make_camera(1, Vec3d(15, 15, 0.5), Vec3d::Zero(), 8, 8, 10.0)};
    const std::vector<int> ids = assign_by_bounds(blocks[0], cams, space);
    CHECK(ids == std::vector<int>{0});
  }

  TEST_CASE("camera on a shared face belongs to exactly one block") {
    const SpaceMap space = unit_space();
    GaussianScene scene;
    GaussianPrimitive g;
    g.position = Vec3f(0.5f, 0.5f, 0.0f);
    scene.primitives.push_back(g);
    auto blocks = partition(scene, space, GridShape{2, 1, 1});
    // Face between blocks is the x = 0 plane in contracted space.
    std::vector<CameraView> cams = {
        testing::make_camera(0, Vec3d(0.0, 0.3, 0.2), Vec3d(0.1, 0, 0), 8, 8, 10.0)};
    int hits = 0;
    for (const BlockSpec& b : blocks) hits += assign_by_bounds(b, cams, space).size();
    CHECK(hits == 1);
    CHECK(assign_by_bounds(blocks[1], cams, space) == std::vector<int>{0});  // upper block
  }
}

TEST_SUITE("merge_assignments") {
  TEST_CASE("union with duplicates removed, order stable") {
    const std::vector<int> p1{1, 2}, p2{2, 3};
    CHECK(merge_assignments(p1, p2) == std::vector<int>{1, 2, 3});
  }

  TEST_CASE("empty second operand is the identity") {
    const std::vector<int> p1{5, 3, 9};
    CHECK(merge_assignments(p1, {}) == p1);
  }

  TEST_CASE("idempotent and duplicate-free") {
    const std::vector<int> p{4, 1, 7};
    const auto merged = merge_assignments(p, p);
    CHECK(merged == p);
    const auto twice = merge_assignments(merged, merged);
    CHECK(twice == merged);
  }
}
