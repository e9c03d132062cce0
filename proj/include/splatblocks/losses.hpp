// Copyright Contributors to the splatblocks Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <span>

#include "splatblocks/errors.hpp"
#include "splatblocks/gaussian.hpp"
#include "splatblocks/metrics.hpp"
#include "splatblocks/types.hpp"

namespace splat {

struct LossBreakdown {
  double l_rgb = 0.0;
  double l_s = 0.0;
  double l_n = 0.0;
  double l_dn = 0.0;
  double total = 0.0;
};

inline LossBreakdown combine_losses(double l_rgb, double l_s, double l_n, double l_dn,
                                    double lambda1, double lambda2, double lambda3) {
  LossBreakdown b;
  b.l_rgb = l_rgb;
  b.l_s = l_s;
  b.l_n = l_n;
  b.l_dn = l_dn;
  b.total = l_rgb + lambda1 * l_s + lambda2 * l_n + lambda3 * l_dn;
  return b;
}

// (1 - w) * L1 + w * (1 - SSIM), the standard photometric term. Images
// smaller than the SSIM window fall back to pure L1.
template <typename T>
double loss_rgb(const Image3<T>& rendered, const Image3<T>& target, double ssim_weight) {
  if (rendered.height() != target.height() || rendered.width() != target.width())
    throw ArgumentError("loss_rgb: image dimensions differ");
  double l1 = 0.0;
  for (int c = 0; c < 3; ++c)
    l1 += (rendered.ch[c].template cast<double>() - target.ch[c].template cast<double>())
              .array()
              .abs()
              .sum();
  l1 /= 3.0 * static_cast<double>(rendered.height()) * static_cast<double>(rendered.width());
  if (ssim_weight == 0.0 || rendered.height() < kSsimWindow || rendered.width() < kSsimWindow)
    return l1;
  return (1.0 - ssim_weight) * l1 + ssim_weight * (1.0 - ssim(rendered, target));
}

// Mean over valid pixels of |n - prior|_1 + (1 - n . prior). Both maps must
// hold unit vectors where valid. Empty mask yields 0 (reported by callers).
template <typename T>
double loss_normal(const Image3<T>& normal, const Image3<T>& prior, const Mask& valid) {
  double acc = 0.0;
  int64_t count = 0;
  for (Eigen::Index y = 0; y < normal.height(); ++y)
    for (Eigen::Index x = 0; x < normal.width(); ++x) {
      if (!valid(y, x)) continue;
      const Vec3<double> n = normal.pixel(y, x).template cast<double>();
      const Vec3<double> p = prior.pixel(y, x).template cast<double>();
      acc += (n - p).template lpNorm<1>() + (1.0 - n.dot(p));
      ++count;
    }
  return count > 0 ? acc / static_cast<double>(count) : 0.0;
}

// Confidence-weighted variant for the depth-derived normal: mean over valid
// pixels of w * (|n_d - prior|_1 + (1 - n_d . prior)); missing confidence
// means w = 1.
template <typename T>
double loss_dnormal(const Image3<T>& depth_normal, const Image3<T>& prior,
                    const ImagePlane<float>* confidence, const Mask& valid) {
  double acc = 0.0;
  int64_t count = 0;
  for (Eigen::Index y = 0; y < depth_normal.height(); ++y)
    for (Eigen::Index x = 0; x < depth_normal.width(); ++x) {
      if (!valid(y, x)) continue;
      const Vec3<double> n = depth_normal.pixel(y, x).template cast<double>();
      const Vec3<double> p = prior.pixel(y, x).template cast<double>();
      const double w = confidence ? static_cast<double>((*confidence)(y, x)) : 1.0;
      acc += w * ((n - p).template lpNorm<1>() + (1.0 - n.dot(p)));
      ++count;
    }
  return count > 0 ? acc / static_cast<double>(count) : 0.0;
}

// Flattening regularizer: mean over the subset of each primitive's smallest
// scale axis.
inline double loss_scale_flatten(const GaussianScene& scene, std::span<const int> subset) {
  if (subset.empty()) return 0.0;
  double acc = 0.0;
  for (int i : subset) acc += static_cast<double>(scene[static_cast<size_t>(i)].scale.minCoeff());
  return acc / static_cast<double>(subset.size());
}

}  // namespace splat
