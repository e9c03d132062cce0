// Copyright Contributors to the splatblocks Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>

#include "splatblocks/types.hpp"

namespace splat {

// 8-bit PNG or PPM (P3/P6), converted to linear float [0,1]; no gamma
// handling. Grayscale and palette PNGs are expanded to RGB.
Image3f load_image(const std::filesystem::path& path);

// 8-bit RGB PNG; values are clamped to [0,1] and rounded to the 255 grid.
void save_png(const std::filesystem::path& path, const Image3f& image);

// Quantize to the 8-bit grid without writing, matching save_png + load_image.
Image3f quantize8(const Image3f& image);

// Portable float map, used for normal-prior (PF, 3 channel) and confidence
// (Pf, 1 channel) maps. Stored little-endian, top row first.
Image3f load_pfm3(const std::filesystem::path& path);
ImagePlane<float> load_pfm1(const std::filesystem::path& path);
void save_pfm(const std::filesystem::path& path, const Image3f& image);
void save_pfm(const std::filesystem::path& path, const ImagePlane<float>& plane);

}  // namespace splat
