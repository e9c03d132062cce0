// Copyright Contributors to the splatblocks Project
// SPDX-License-Identifier: Apache-2.0

#include "splatblocks/manifest.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <vector>

#include "splatblocks/errors.hpp"

namespace splat {

uint64_t fnv1a(const void* data, size_t size, uint64_t seed) {
  const auto* bytes = static_cast<const unsigned char*>(data);
  uint64_t h = seed;
  for (size_t i = 0; i < size; ++i) {
    h ^= bytes[i];
    h *= 0x100000001b3ull;
  }
  return h;
}

uint64_t hash_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot hash missing file: " + path.string());
  uint64_t h = 0xcbf29ce484222325ull;
  std::vector<char> buf(1 << 16);
  while (in) {
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    const std::streamsize got = in.gcount();
    if (got > 0) h = fnv1a(buf.data(), static_cast<size_t>(got), h);
  }
  return h;
}

std::string hash_string(uint64_t h) {
  char buf[24];
  std::snprintf(buf, sizeof(buf), "fnv:%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void Manifest::set_double(const std::string& key, double value) {
  // Shortest representation that round-trips.
  char buf[48];
  for (int precision = 1; precision <= 17; ++precision) {
    std::snprintf(buf, sizeof(buf), "%.*g", precision, value);
    if (std::strtod(buf, nullptr) == value) break;
  }
  entries_[key] = buf;
}

void Manifest::set_file_hash(const std::string& key, const std::filesystem::path& path) {
  entries_[key] = hash_string(hash_file(path));
}

const std::string& Manifest::get(const std::string& key) const {
  const auto it = entries_.find(key);
  if (it == entries_.end()) throw PipelineError("manifest key missing: " + key);
  return it->second;
}

int64_t Manifest::get_int(const std::string& key) const { return std::stoll(get(key)); }

double Manifest::get_double(const std::string& key) const { return std::stod(get(key)); }

void Manifest::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write manifest: " + path.string());
  for (const auto& [k, v] : entries_) out << k << " = " << v << "\n";
}

Manifest Manifest::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest: " + path.string());
  Manifest m;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    const size_t eq = line.find(" = ");
    if (eq == std::string::npos) throw FormatError("malformed manifest line: " + line);
    m.entries_[line.substr(0, eq)] = line.substr(eq + 3);
  }
  return m;
}

}  // namespace splat
