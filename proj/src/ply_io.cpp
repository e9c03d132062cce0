// Copyright Contributors to the splatblocks Project
// SPDX-License-Identifier: Apache-2.0

#include "splatblocks/ply_io.hpp"

#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "splatblocks/errors.hpp"

static_assert(std::endian::native == std::endian::little,
              "splat PLY I/O assumes a little-endian host");

namespace splat {

namespace {

constexpr int kProps = 62;

std::array<std::string, kProps> property_names() {
  std::array<std::string, kProps> n;
  int i = 0;
  for (const char* s : {"x", "y", "z", "nx", "ny", "nz"}) n[i++] = s;
  for (int c = 0; c < 3; ++c) n[i++] = "f_dc_" + std::to_string(c);
  for (int c = 0; c < 45; ++c) n[i++] = "f_rest_" + std::to_string(c);
  n[i++] = "opacity";
  for (int c = 0; c < 3; ++c) n[i++] = "scale_" + std::to_string(c);
  for (int c = 0; c < 4; ++c) n[i++] = "rot_" + std::to_string(c);
  return n;
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }
double logit(double p) { return std::log(p / (1.0 - p)); }

}  // namespace

GaussianScene load_scene_ply(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open PLY: " + path.string());

  std::string line;
  if (!std::getline(in, line) || line != "ply") throw FormatError("not a PLY file: " + path.string());

  size_t vertex_count = 0;
  bool format_ok = false, in_vertex = false, header_done = false;
  std::vector<std::string> props;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream ls(line);
    std::string tok;
    ls >> tok;
    if (tok == "comment") continue;
    if (tok == "format") {
      std::string fmt, ver;
      ls >> fmt >> ver;
      if (fmt != "binary_little_endian" || ver != "1.0")
        throw FormatError("unsupported PLY format '" + fmt + "': " + path.string());
      format_ok = true;
    } else if (tok == "element") {
      std::string name;
      ls >> name;
      if (name == "vertex") {
        ls >> vertex_count;
        in_vertex = true;
      } else {
        in_vertex = false;
      }
    } else if (tok == "property") {
      if (!in_vertex) throw SchemaError("unexpected non-vertex property: " + path.string());
      std::string type, name;
      ls >> type >> name;
      if (type != "float")
        throw SchemaError("property '" + name + "' is not float32: " + path.string());
      props.push_back(name);
    } else if (tok == "end_header") {
      header_done = true;
      break;
    } else if (!tok.empty()) {
      throw FormatError("unrecognized header line '" + line + "': " + path.string());
    }
  }
  if (!header_done || !format_ok) throw FormatError("truncated PLY header: " + path.string());

  const auto expected = property_names();
  if (props.size() != expected.size())
    throw SchemaError("expected " + std::to_string(expected.size()) + " vertex properties, got " +
                      std::to_string(props.size()) + ": " + path.string());
  for (int i = 0; i < kProps; ++i)
    if (props[static_cast<size_t>(i)] != expected[static_cast<size_t>(i)])
      throw SchemaError("property " + std::to_string(i) + " is '" + props[static_cast<size_t>(i)] +
                        "', expected '" + expected[static_cast<size_t>(i)] + "': " + path.string());

  GaussianScene scene;
  scene.source_path = path.string();
  scene.primitives.resize(vertex_count);
  std::vector<float> row(kProps);
  for (size_t v = 0; v < vertex_count; ++v) {
    in.read(reinterpret_cast<char*>(row.data()), kProps * sizeof(float));
    if (!in) throw FormatError("truncated PLY payload at vertex " + std::to_string(v) + ": " +
                               path.string());
    for (int i = 0; i < kProps; ++i)
      if (!std::isfinite(row[static_cast<size_t>(i)]))
        throw DataError("non-finite field '" + expected[static_cast<size_t>(i)] +
                        "' in primitive " + std::to_string(v) + ": " + path.string());

    GaussianPrimitive& g = scene.primitives[v];
    g.position = {row[0], row[1], row[2]};
    for (int c = 0; c < 3; ++c) g.sh(c, 0) = row[6 + c];
    for (int c = 0; c < 3; ++c)
      for (int k = 0; k < 15; ++k) g.sh(c, k + 1) = row[9 + c * 15 + k];
    g.opacity = static_cast<float>(sigmoid(row[54]));
    for (int a = 0; a < 3; ++a) g.scale[a] = static_cast<float>(std::exp(double(row[55 + a])));
    // (w, x, y, z) on disk; renormalize only when measurably off so that a
    // round trip leaves well-formed files byte-stable.
    Eigen::Quaternionf q(row[58], row[59], row[60], row[61]);
    const float norm = q.norm();
    if (norm < 1e-6f)
      throw DataError("zero quaternion in primitive " + std::to_string(v) + ": " + path.string());
    if (std::abs(norm - 1.0f) > 1e-6f) q.coeffs() /= norm;
    g.rotation = q;
  }
  return scene;
}

SaveReport save_scene_ply(const GaussianScene& scene, const std::filesystem::path& path) {
  if (scene.empty()) throw ArgumentError("refusing to save an empty scene");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write PLY: " + path.string());

  out << "ply\nformat binary_little_endian 1.0\nelement vertex " << scene.size() << "\n";
  for (const auto& name : property_names()) out << "property float " << name << "\n";
  out << "end_header\n";

  SaveReport report;
  std::vector<float> row(kProps);
  for (const GaussianPrimitive& g : scene.primitives) {
    row[0] = g.position.x();
    row[1] = g.position.y();
    row[2] = g.position.z();
    row[3] = row[4] = row[5] = 0.0f;
    for (int c = 0; c < 3; ++c) row[6 + c] = g.sh(c, 0);
    for (int c = 0; c < 3; ++c)
      for (int k = 0; k < 15; ++k) row[9 + c * 15 + k] = g.sh(c, k + 1);
    double opacity = g.opacity;
    if (opacity < 1e-6 || opacity > 1.0 - 1e-6) {
      opacity = std::min(1.0 - 1e-6, std::max(1e-6, opacity));
      ++report.clamped_opacities;
    }
    row[54] = static_cast<float>(logit(opacity));
    for (int a = 0; a < 3; ++a) row[55 + a] = static_cast<float>(std::log(double(g.scale[a])));
    row[58] = g.rotation.w();
    row[59] = g.rotation.x();
    row[60] = g.rotation.y();
    row[61] = g.rotation.z();
    out.write(reinterpret_cast<const char*>(row.data()), kProps * sizeof(float));
  }
  if (!out) throw IoError("short write: " + path.string());
  return report;
}

}  // namespace splat
