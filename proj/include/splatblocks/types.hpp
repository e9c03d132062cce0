// Copyright Contributors to the splatblocks Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <array>
#include <cstdint>

namespace splat {

template <typename T> using Vec2 = Eigen::Matrix<T, 2, 1>;
template <typename T> using Vec3 = Eigen::Matrix<T, 3, 1>;
template <typename T> using Vec4 = Eigen::Matrix<T, 4, 1>;
template <typename T> using Mat2 = Eigen::Matrix<T, 2, 2>;
template <typename T> using Mat3 = Eigen::Matrix<T, 3, 3>;

using Vec2f = Vec2<float>;
using Vec3f = Vec3<float>;
using Vec2d = Vec2<double>;
using Vec3d = Vec3<double>;
using Mat2f = Mat2<float>;
using Mat3f = Mat3<float>;
using Mat2d = Mat2<double>;
using Mat3d = Mat3<double>;

// Single image plane, (row, col) = (y, x), row-contiguous.
template <typename T>
using ImagePlane = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using Mask = ImagePlane<uint8_t>;

// Planar three-channel image.
template <typename T>
struct Image3 {
  std::array<ImagePlane<T>, 3> ch;

  Image3() = default;
  Image3(Eigen::Index height, Eigen::Index width) { resize(height, width); }

  void resize(Eigen::Index height, Eigen::Index width) {
    for (auto& p : ch) p.setZero(height, width);
  }

  Eigen::Index height() const { return ch[0].rows(); }
  Eigen::Index width() const { return ch[0].cols(); }

  Vec3<T> pixel(Eigen::Index y, Eigen::Index x) const {
    return {ch[0](y, x), ch[1](y, x), ch[2](y, x)};
  }
  void set_pixel(Eigen::Index y, Eigen::Index x, const Vec3<T>& v) {
    ch[0](y, x) = v[0];
    ch[1](y, x) = v[1];
    ch[2](y, x) = v[2];
  }

  void fill(const Vec3<T>& v) {
    for (int c = 0; c < 3; ++c) ch[c].setConstant(ch[c].rows(), ch[c].cols(), v[c]);
  }

  template <typename U>
  Image3<U> cast() const {
    Image3<U> out;
    for (int c = 0; c < 3; ++c) out.ch[c] = ch[c].template cast<U>();
    return out;
  }
};

using Image3f = Image3<float>;
using Image3d = Image3<double>;

}  // namespace splat
