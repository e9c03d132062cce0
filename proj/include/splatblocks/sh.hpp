// Copyright Contributors to the splatblocks Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "splatblocks/types.hpp"

namespace splat {

inline constexpr int kShCoeffs = 16;  // degree 3, per channel

inline constexpr double kShC0 = 0.28209479177387814;
inline constexpr double kShC1 = 0.4886025119029199;
inline constexpr double kShC2[5] = {1.0925484305920792, -1.0925484305920792,
                                    0.31539156525252005, -1.0925484305920792,
                                    0.5462742152960396};
inline constexpr double kShC3[7] = {-0.5900435899266435, 2.890611442640554,
                                    -0.4570457994644658, 0.3731763325901154,
                                    -0.4570457994644658, 1.445305721320277,
                                    -0.5900435899266435};

// Real SH basis up to degree 3 combined per channel, without the 0.5 offset
// or clamping. `dir` must be unit length. Coefficient rows are channels,
// column 0 is the DC term.
template <typename T>
Vec3<T> eval_sh_unclamped(const Eigen::Matrix<T, 3, kShCoeffs>& coeffs, const Vec3<T>& dir) {
  const T x = dir.x(), y = dir.y(), z = dir.z();
  Vec3<T> rgb = T(kShC0) * coeffs.col(0);

  rgb += T(kShC1) * (-y * coeffs.col(1) + z * coeffs.col(2) - x * coeffs.col(3));

  const T xx = x * x, yy = y * y, zz = z * z;
  const T xy = x * y, yz = y * z, xz = x * z;
  rgb += T(kShC2[0]) * xy * coeffs.col(4) + T(kShC2[1]) * yz * coeffs.col(5) +
         T(kShC2[2]) * (T(2) * zz - xx - yy) * coeffs.col(6) +
         T(kShC2[3]) * xz * coeffs.col(7) + T(kShC2[4]) * (xx - yy) * coeffs.col(8);

  rgb += T(kShC3[0]) * y * (T(3) * xx - yy) * coeffs.col(9) +
         T(kShC3[1]) * xy * z * coeffs.col(10) +
         T(kShC3[2]) * y * (T(4) * zz - xx - yy) * coeffs.col(11) +
         T(kShC3[3]) * z * (T(2) * zz - T(3) * xx - T(3) * yy) * coeffs.col(12) +
         T(kShC3[4]) * x * (T(4) * zz - xx - yy) * coeffs.col(13) +
         T(kShC3[5]) * z * (xx - yy) * coeffs.col(14) +
         T(kShC3[6]) * x * (xx - T(3) * yy) * coeffs.col(15);
  return rgb;
}

// View-dependent color: SH evaluation offset by 0.5 and clamped to [0, 1].
template <typename T>
Vec3<T> eval_sh(const Eigen::Matrix<T, 3, kShCoeffs>& coeffs, const Vec3<T>& dir) {
  Vec3<T> rgb = eval_sh_unclamped(coeffs, dir).array() + T(0.5);
  return rgb.cwiseMax(T(0)).cwiseMin(T(1));
}

}  // namespace splat
