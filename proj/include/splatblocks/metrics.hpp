// Copyright Contributors to the splatblocks Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cmath>
#include <limits>

#include "splatblocks/errors.hpp"
#include "splatblocks/types.hpp"

namespace splat {

inline constexpr int kSsimWindow = 11;
inline constexpr double kSsimSigma = 1.5;
inline constexpr double kSsimC1 = 0.01 * 0.01;  // (K1 * L)^2 on [0,1] range
inline constexpr double kSsimC2 = 0.03 * 0.03;

namespace detail {

inline std::array<double, kSsimWindow> ssim_kernel() {
  std::array<double, kSsimWindow> k{};
  double sum = 0.0;
  for (int i = 0; i < kSsimWindow; ++i) {
    const double d = i - (kSsimWindow - 1) / 2.0;
    k[static_cast<size_t>(i)] = std::exp(-d * d / (2.0 * kSsimSigma * kSsimSigma));
    sum += k[static_cast<size_t>(i)];
  }
  for (double& v : k) v /= sum;
  return k;
}

// Separable "valid" convolution with the SSIM kernel, double accumulation.
template <typename T>
ImagePlane<double> ssim_filter(const ImagePlane<T>& src) {
  static const std::array<double, kSsimWindow> kernel = ssim_kernel();
  const Eigen::Index h = src.rows(), w = src.cols();
  const Eigen::Index vw = w - kSsimWindow + 1, vh = h - kSsimWindow + 1;
  ImagePlane<double> horiz(h, vw);
  for (Eigen::Index y = 0; y < h; ++y)
    for (Eigen::Index x = 0; x < vw; ++x) {
      double acc = 0.0;
      for (int k = 0; k < kSsimWindow; ++k)
        acc += kernel[static_cast<size_t>(k)] * static_cast<double>(src(y, x + k));
      horiz(y, x) = acc;
    }
  ImagePlane<double> out(vh, vw);
  for (Eigen::Index y = 0; y < vh; ++y)
    for (Eigen::Index x = 0; x < vw; ++x) {
      double acc = 0.0;
      for (int k = 0; k < kSsimWindow; ++k) acc += kernel[static_cast<size_t>(k)] * horiz(y + k, x);
      out(y, x) = acc;
    }
  return out;
}

}  // namespace detail

// Mean SSIM over channels: 11x11 Gaussian window (sigma 1.5), C1=0.01^2,
// C2=0.03^2 on unit dynamic range, statistics over the valid interior.
template <typename T>
double ssim(const Image3<T>& a, const Image3<T>& b) {
  if (a.height() != b.height() || a.width() != b.width())
    throw ArgumentError("ssim: image dimensions differ");
  if (a.height() < kSsimWindow || a.width() < kSsimWindow)
    throw ArgumentError("ssim: images must be at least 11x11");

  double total = 0.0;
  for (int c = 0; c < 3; ++c) {
    const ImagePlane<double> mu_a = detail::ssim_filter(a.ch[c]);
    const ImagePlane<double> mu_b = detail::ssim_filter(b.ch[c]);
    const ImagePlane<T> aa = a.ch[c].cwiseProduct(a.ch[c]);
    const ImagePlane<T> bb = b.ch[c].cwiseProduct(b.ch[c]);
    const ImagePlane<T> ab = a.ch[c].cwiseProduct(b.ch[c]);
    const ImagePlane<double> m_aa = detail::ssim_filter(aa);
    const ImagePlane<double> m_bb = detail::ssim_filter(bb);
    const ImagePlane<double> m_ab = detail::ssim_filter(ab);

    double acc = 0.0;
    for (Eigen::Index y = 0; y < mu_a.rows(); ++y)
      for (Eigen::Index x = 0; x < mu_a.cols(); ++x) {
        const double ma = mu_a(y, x), mb = mu_b(y, x);
        const double va = m_aa(y, x) - ma * ma;
        const double vb = m_bb(y, x) - mb * mb;
        const double cov = m_ab(y, x) - ma * mb;
        const double num = (2.0 * ma * mb + kSsimC1) * (2.0 * cov + kSsimC2);
        const double den = (ma * ma + mb * mb + kSsimC1) * (va + vb + kSsimC2);
        acc += num / den;
      }
    total += acc / (static_cast<double>(mu_a.rows()) * static_cast<double>(mu_a.cols()));
  }
  return total / 3.0;
}

// 10 log10(1 / MSE) on [0,1] range; +infinity for identical images.
template <typename T>
double psnr(const Image3<T>& a, const Image3<T>& b) {
  if (a.height() != b.height() || a.width() != b.width())
    throw ArgumentError("psnr: image dimensions differ");
  double mse = 0.0;
  for (int c = 0; c < 3; ++c)
    mse += (a.ch[c].template cast<double>() - b.ch[c].template cast<double>()).array().square().sum();
  mse /= 3.0 * static_cast<double>(a.height()) * static_cast<double>(a.width());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(1.0 / mse);
}

}  // namespace splat
