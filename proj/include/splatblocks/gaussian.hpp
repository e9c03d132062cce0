// Copyright Contributors to the splatblocks Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

#include "splatblocks/sh.hpp"
#include "splatblocks/types.hpp"

namespace splat {

// One splat. In-memory values are always post-activation: opacity in [0,1],
// scale strictly positive, rotation unit length.
struct GaussianPrimitive {
  Vec3f position = Vec3f::Zero();
  Eigen::Quaternionf rotation = Eigen::Quaternionf::Identity();  // (w,x,y,z) on disk
  Vec3f scale = Vec3f::Ones();  // per-axis extents, world units
  float opacity = 1.0f;
  Eigen::Matrix<float, 3, kShCoeffs> sh = Eigen::Matrix<float, 3, kShCoeffs>::Zero();

  Mat3f rotation_matrix() const { return rotation.toRotationMatrix(); }

  // R * diag(scale^2) * R^T
  Mat3f covariance() const {
    const Mat3f r = rotation_matrix();
    return r * scale.array().square().matrix().asDiagonal() * r.transpose();
  }

  float volume() const { return scale.prod(); }

  Vec3f dc_color() const {
    Vec3f c = (float(kShC0) * sh.col(0)).array() + 0.5f;
    return c.cwiseMax(0.0f).cwiseMin(1.0f);
  }

  void set_dc_color(const Vec3f& rgb) {
    sh.col(0) = (rgb.array() - 0.5f) / float(kShC0);
  }
};

struct GaussianScene {
  std::vector<GaussianPrimitive> primitives;
  std::string source_path;

  size_t size() const { return primitives.size(); }
  bool empty() const { return primitives.empty(); }
  GaussianPrimitive& operator[](size_t i) { return primitives[i]; }
  const GaussianPrimitive& operator[](size_t i) const { return primitives[i]; }
};

// 59 model floats per primitive: 3 position + 4 rotation + 3 scale +
// 1 opacity + 48 SH. Normals stored on disk are placeholders, not model state.
inline constexpr size_t kFieldsPerPrimitive = 59;
inline constexpr size_t kBytesPerPrimitive = kFieldsPerPrimitive * sizeof(float);

inline size_t model_bytes(size_t primitive_count) { return primitive_count * kBytesPerPrimitive; }

}  // namespace splat
