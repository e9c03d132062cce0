// Copyright Contributors to the splatblocks Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>

#include "splatblocks/gaussian.hpp"

namespace splat {

// Procedural desk-scale dataset: a textured ground plane with clustered
// objects near the origin, low-importance dust, and far shell points that
// land outside the internal region (skewed to one octant so a world-space
// grid is unbalanced while the contracted grid stays even). Cameras orbit on
// two rings; every eval_every-th view is held out. Ground-truth renders,
// analytic normal priors, confidence maps and a color-noised copy of the
// scene are written alongside.
struct SyntheticSpec {
  int gaussian_count = 500;
  int camera_count = 24;
  int width = 96;
  int height = 72;
  int eval_every = 8;
  double noise_sigma = 0.1;  // DC color noise for scene_init.ply
  uint64_t seed = 19;
  int workers = 1;
};

struct SyntheticResult {
  size_t primitive_count = 0;
  size_t train_views = 0;
  size_t eval_views = 0;
};

SyntheticResult generate_synthetic(const SyntheticSpec& spec,
                                   const std::filesystem::path& out_dir);

// The noise injection used for scene_init.ply, exposed for tests: perturbs
// DC coefficients so rendered color shifts by N(0, sigma^2) per channel.
GaussianScene add_color_noise(const GaussianScene& scene, double sigma, uint64_t seed);

}  // namespace splat
