// Copyright Contributors to the splatblocks Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

namespace splat {

// FNV-1a over raw bytes; stable, dependency-free content hashing for
// manifests.
uint64_t fnv1a(const void* data, size_t size, uint64_t seed = 0xcbf29ce484222325ull);
uint64_t hash_file(const std::filesystem::path& path);
std::string hash_string(uint64_t h);  // "fnv:%016x"

// Sorted key = value text file. Values must not contain newlines.
class Manifest {
 public:
  void set(const std::string& key, const std::string& value) { entries_[key] = value; }
  void set(const std::string& key, int64_t value) { entries_[key] = std::to_string(value); }
  void set_double(const std::string& key, double value);
  void set_file_hash(const std::string& key, const std::filesystem::path& path);

  bool has(const std::string& key) const { return entries_.count(key) > 0; }
  const std::string& get(const std::string& key) const;
  int64_t get_int(const std::string& key) const;
  double get_double(const std::string& key) const;

  void save(const std::filesystem::path& path) const;
  static Manifest load(const std::filesystem::path& path);

  const std::map<std::string, std::string>& entries() const { return entries_; }

 private:
  std::map<std::string, std::string> entries_;
};

}  // namespace splat
