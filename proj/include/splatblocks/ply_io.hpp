// Copyright Contributors to the splatblocks Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>

#include "splatblocks/gaussian.hpp"

namespace splat {

struct SaveReport {
  size_t clamped_opacities = 0;  // values at exactly 0 or 1 clamped before logit
};

// Binary little-endian splat PLY with the de facto layout:
// x,y,z,nx,ny,nz,f_dc_0..2,f_rest_0..44,opacity,scale_0..2,rot_0..3, all
// float32. On disk opacity is pre-sigmoid and scale pre-exp; loading applies
// sigmoid/exp and renormalizes the quaternion, so external splat scenes load
// directly. f_rest is channel-major (15 coefficients for R, then G, then B).
GaussianScene load_scene_ply(const std::filesystem::path& path);

SaveReport save_scene_ply(const GaussianScene& scene, const std::filesystem::path& path);

}  // namespace splat
