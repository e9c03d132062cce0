// Copyright Contributors to the splatblocks Project
// SPDX-License-Identifier: Apache-2.0

#include "splatblocks/camera_io.hpp"

#include <Eigen/SVD>

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <string>

#include "splatblocks/errors.hpp"
#include "splatblocks/image_io.hpp"

namespace splat {

namespace {

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

void validate_and_fix_rotation(CameraView& cam) {
  const Mat3d err = cam.rotation.transpose() * cam.rotation - Mat3d::Identity();
  const double dev = err.cwiseAbs().maxCoeff();
  if (dev > 1e-3)
    throw ValidationError("view " + std::to_string(cam.id) + ": rotation not orthonormal (max dev " +
                          std::to_string(dev) + ")");
  if (dev > 1e-5) {
    Eigen::JacobiSVD<Mat3d> svd(cam.rotation, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Mat3d r = svd.matrixU() * svd.matrixV().transpose();
    if (r.determinant() < 0) {
      Mat3d flip = Mat3d::Identity();
      flip(2, 2) = -1;
      r = svd.matrixU() * flip * svd.matrixV().transpose();
    }
    cam.rotation = r;
  }
}

void attach_normal_prior(CameraView& cam, const std::filesystem::path& path) {
  Image3f n = ends_with(path.string(), ".pfm") ? load_pfm3(path) : [&] {
    // 8-bit encoding maps [-1,1] to [0,1].
    Image3f enc = load_image(path);
    for (int c = 0; c < 3; ++c) enc.ch[c] = (enc.ch[c].array() * 2.0f - 1.0f).matrix();
    return enc;
  }();
  if (n.height() != cam.height || n.width() != cam.width)
    throw ValidationError("view " + std::to_string(cam.id) + ": normal map size mismatch");
  for (Eigen::Index y = 0; y < n.height(); ++y)
    for (Eigen::Index x = 0; x < n.width(); ++x) {
      Vec3f v = n.pixel(y, x);
      const float len = v.norm();
      n.set_pixel(y, x, len > 0.5f ? Vec3f(v / len) : Vec3f::Zero());
    }
  cam.normal_prior = std::move(n);
}

}  // namespace

std::vector<CameraView> load_cameras(const std::filesystem::path& path,
                                     const std::filesystem::path& root, bool load_images) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open camera list: " + path.string());
  const std::filesystem::path base = root.empty() ? path.parent_path() : root;

  std::vector<CameraView> views;
  std::set<int> ids;
  std::string line;
  bool in_block = false;
  CameraView cur;
  std::string image_rel, normal_rel, conf_rel;

  auto finish_block = [&]() {
    if (cur.id < 0) throw SchemaError("view block missing id: " + path.string());
    if (!ids.insert(cur.id).second)
      throw ValidationError("duplicate view id " + std::to_string(cur.id) + ": " + path.string());
    if (cur.width <= 0 || cur.height <= 0)
      throw SchemaError("view " + std::to_string(cur.id) + ": missing size");
    validate_and_fix_rotation(cur);
    if (load_images) {
      if (image_rel.empty())
        throw SchemaError("view " + std::to_string(cur.id) + ": missing image path");
      const auto img_path = base / image_rel;
      if (!std::filesystem::exists(img_path))
        throw IoError("view " + std::to_string(cur.id) + ": image not found: " + img_path.string());
      cur.image = load_image(img_path);
      if (cur.image.height() != cur.height || cur.image.width() != cur.width)
        throw ValidationError("view " + std::to_string(cur.id) + ": image is " +
                              std::to_string(cur.image.width()) + "x" +
                              std::to_string(cur.image.height()) + ", expected " +
                              std::to_string(cur.width) + "x" + std::to_string(cur.height));
      if (!normal_rel.empty()) {
        const auto n_path = base / normal_rel;
        if (!std::filesystem::exists(n_path))
          throw IoError("view " + std::to_string(cur.id) + ": normal map not found: " +
                        n_path.string());
        attach_normal_prior(cur, n_path);
      }
      if (!conf_rel.empty()) {
        const auto c_path = base / conf_rel;
        if (!std::filesystem::exists(c_path))
          throw IoError("view " + std::to_string(cur.id) + ": confidence map not found: " +
                        c_path.string());
        ImagePlane<float> conf = ends_with(conf_rel, ".pfm")
                                     ? load_pfm1(c_path)
                                     : ImagePlane<float>(load_image(c_path).ch[0]);
        if (conf.rows() != cur.height || conf.cols() != cur.width)
          throw ValidationError("view " + std::to_string(cur.id) + ": confidence size mismatch");
        cur.confidence = conf.cwiseMax(0.0f).cwiseMin(1.0f);
      }
    }
    views.push_back(std::move(cur));
  };

  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    if (key.empty() || key[0] == '#') continue;
    if (key == "view") {
      std::string brace;
      ls >> brace;
      if (brace != "{" || in_block) throw FormatError("malformed view block: " + path.string());
      in_block = true;
      cur = CameraView{};
      image_rel.clear();
      normal_rel.clear();
      conf_rel.clear();
    } else if (key == "}") {
      if (!in_block) throw FormatError("stray '}': " + path.string());
      in_block = false;
      finish_block();
    } else if (in_block) {
      if (key == "id") ls >> cur.id;
      else if (key == "size") ls >> cur.width >> cur.height;
      else if (key == "focal") ls >> cur.fx >> cur.fy;
      else if (key == "principal") ls >> cur.cx >> cur.cy;
      else if (key == "rotation") {
        for (int r = 0; r < 3; ++r)
          for (int c = 0; c < 3; ++c) ls >> cur.rotation(r, c);
      } else if (key == "translation") {
        ls >> cur.translation.x() >> cur.translation.y() >> cur.translation.z();
      } else if (key == "image") ls >> image_rel;
      else if (key == "normal") ls >> normal_rel;
      else if (key == "confidence") ls >> conf_rel;
      else if (key == "split") {
        std::string split;
        ls >> split;
        if (split == "eval") cur.is_eval = true;
        else if (split != "train")
          throw SchemaError("unknown split '" + split + "': " + path.string());
      } else {
        throw SchemaError("unknown camera key '" + key + "': " + path.string());
      }
      if (ls.fail()) throw FormatError("malformed value for '" + key + "': " + path.string());
    } else {
      throw FormatError("unexpected token '" + key + "': " + path.string());
    }
  }
  if (in_block) throw FormatError("unterminated view block: " + path.string());
  return views;
}

void save_cameras(const std::filesystem::path& path, const std::vector<CameraRecord>& records) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write camera list: " + path.string());
  out << "# splatblocks cameras v1\n";
  char buf[64];
  const auto num = [&buf](double v) {
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return std::string(buf);
  };
  for (const CameraRecord& rec : records) {
    const CameraView& v = *rec.view;
    out << "view {\n";
    out << "  id " << v.id << "\n";
    out << "  size " << v.width << " " << v.height << "\n";
    out << "  focal " << num(v.fx) << " " << num(v.fy) << "\n";
    out << "  principal " << num(v.cx) << " " << num(v.cy) << "\n";
    out << "  rotation";
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) out << " " << num(v.rotation(r, c));
    out << "\n  translation " << num(v.translation.x()) << " " << num(v.translation.y()) << " "
        << num(v.translation.z()) << "\n";
    out << "  image " << rec.image_path << "\n";
    if (!rec.normal_path.empty()) out << "  normal " << rec.normal_path << "\n";
    if (!rec.confidence_path.empty()) out << "  confidence " << rec.confidence_path << "\n";
    out << "  split " << (v.is_eval ? "eval" : "train") << "\n";
    out << "}\n";
  }
}

}  // namespace splat
