// Copyright Contributors to the splatblocks Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <vector>

#include "splatblocks/camera.hpp"

namespace splat {

// Camera list file: `# splatblocks cameras v1` followed by `view { ... }`
// blocks with keys id, size, focal, principal, rotation (world-to-camera,
// row-major), translation, image, and optional normal, confidence, split
// (train|eval). Paths are relative to `root` (defaults to the file's
// directory).
std::vector<CameraView> load_cameras(const std::filesystem::path& path,
                                     const std::filesystem::path& root = {},
                                     bool load_images = true);

// Writes the camera list; image/map paths are recorded as given.
struct CameraRecord {
  const CameraView* view;
  std::string image_path;
  std::string normal_path;      // empty = none
  std::string confidence_path;  // empty = none
};
void save_cameras(const std::filesystem::path& path, const std::vector<CameraRecord>& records);

}  // namespace splat
