// Copyright Contributors to the splatblocks Project
// SPDX-License-Identifier: Apache-2.0

#include "splatblocks/image_io.hpp"

#include <png.h>

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <functional>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "splatblocks/errors.hpp"

namespace splat {

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

uint8_t to_u8(float v) {
  const float c = std::min(1.0f, std::max(0.0f, v));
  return static_cast<uint8_t>(std::lround(c * 255.0f));
}

Image3f load_png_file(const std::filesystem::path& path) {
  FilePtr f(std::fopen(path.string().c_str(), "rb"));
  if (!f) throw IoError("cannot open image: " + path.string());

  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw Error("libpng init failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw Error("libpng init failed");
  }
  std::vector<uint8_t> data;
  std::vector<png_bytep> rows;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw FormatError("invalid PNG: " + path.string());
  }
  png_init_io(png, f.get());
  png_read_info(png, info);

  png_set_strip_16(png);
  png_set_palette_to_rgb(png);
  png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  png_set_strip_alpha(png);
  png_set_gray_to_rgb(png);
  png_read_update_info(png, info);

  const png_uint_32 w = png_get_image_width(png, info);
  const png_uint_32 h = png_get_image_height(png, info);
  const size_t stride = png_get_rowbytes(png, info);
  data.resize(stride * h);
  rows.resize(h);
  for (png_uint_32 y = 0; y < h; ++y) rows[y] = data.data() + y * stride;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  Image3f img(static_cast<Eigen::Index>(h), static_cast<Eigen::Index>(w));
  for (png_uint_32 y = 0; y < h; ++y) {
    const uint8_t* row = data.data() + y * stride;
    for (png_uint_32 x = 0; x < w; ++x) {
      for (int c = 0; c < 3; ++c) img.ch[c](y, x) = row[3 * x + c] / 255.0f;
    }
  }
  return img;
}

Image3f load_ppm_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open image: " + path.string());
  std::string magic;
  in >> magic;
  if (magic != "P3" && magic != "P6") throw FormatError("not a PPM file: " + path.string());
  const auto next_token = [&in, &path]() {
    std::string tok;
    while (in >> tok) {
      if (tok[0] == '#') {
        std::string rest;
        std::getline(in, rest);
        continue;
      }
      return tok;
    }
    throw FormatError("truncated PPM header: " + path.string());
  };
  const int w = std::stoi(next_token());
  const int h = std::stoi(next_token());
  const int maxval = std::stoi(next_token());
  if (w <= 0 || h <= 0 || maxval <= 0 || maxval > 255)
    throw FormatError("unsupported PPM header: " + path.string());

  Image3f img(h, w);
  if (magic == "P6") {
    in.get();  // single whitespace after maxval
    std::vector<uint8_t> row(static_cast<size_t>(w) * 3);
    for (int y = 0; y < h; ++y) {
      in.read(reinterpret_cast<char*>(row.data()), static_cast<std::streamsize>(row.size()));
      if (!in) throw FormatError("truncated PPM data: " + path.string());
      for (int x = 0; x < w; ++x)
        for (int c = 0; c < 3; ++c) img.ch[c](y, x) = row[3 * x + c] / float(maxval);
    }
  } else {
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x)
        for (int c = 0; c < 3; ++c) {
          int v;
          if (!(in >> v)) throw FormatError("truncated PPM data: " + path.string());
          img.ch[c](y, x) = v / float(maxval);
        }
  }
  return img;
}

}  // namespace

Image3f load_image(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw IoError("image not found: " + path.string());
  std::ifstream probe(path, std::ios::binary);
  char sig[2] = {0, 0};
  probe.read(sig, 2);
  probe.close();
  if (sig[0] == 'P' && (sig[1] == '3' || sig[1] == '6')) return load_ppm_file(path);
  return load_png_file(path);
}

void save_png(const std::filesystem::path& path, const Image3f& image) {
  const Eigen::Index h = image.height(), w = image.width();
  if (h <= 0 || w <= 0) throw ArgumentError("cannot save empty image");
  FilePtr f(std::fopen(path.string().c_str(), "wb"));
  if (!f) throw IoError("cannot write image: " + path.string());

  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw Error("libpng init failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw Error("libpng init failed");
  }
  std::vector<uint8_t> data(static_cast<size_t>(h) * w * 3);
  std::vector<png_bytep> rows(static_cast<size_t>(h));
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IoError("PNG write failed: " + path.string());
  }
  png_init_io(png, f.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(w), static_cast<png_uint_32>(h), 8,
               PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (Eigen::Index y = 0; y < h; ++y) {
    uint8_t* row = data.data() + static_cast<size_t>(y) * w * 3;
    for (Eigen::Index x = 0; x < w; ++x)
      for (int c = 0; c < 3; ++c) row[3 * x + c] = to_u8(image.ch[c](y, x));
    rows[static_cast<size_t>(y)] = row;
  }
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

Image3f quantize8(const Image3f& image) {
  Image3f out(image.height(), image.width());
  for (int c = 0; c < 3; ++c)
    for (Eigen::Index y = 0; y < image.height(); ++y)
      for (Eigen::Index x = 0; x < image.width(); ++x)
        out.ch[c](y, x) = to_u8(image.ch[c](y, x)) / 255.0f;
  return out;
}

namespace {

void read_pfm_header(std::ifstream& in, const std::filesystem::path& path, bool& color, int& w,
                     int& h, bool& little_endian) {
  std::string magic;
  in >> magic;
  if (magic == "PF")
    color = true;
  else if (magic == "Pf")
    color = false;
  else
    throw FormatError("not a PFM file: " + path.string());
  double scale;
  in >> w >> h >> scale;
  if (!in || w <= 0 || h <= 0) throw FormatError("bad PFM header: " + path.string());
  little_endian = scale < 0;
  in.get();  // newline before payload
}

template <typename Fn>
void read_pfm_rows(std::ifstream& in, const std::filesystem::path& path, int w, int h,
                   int channels, Fn&& store) {
  std::vector<float> row(static_cast<size_t>(w) * channels);
  // PFM payload is bottom row first.
  for (int y = h - 1; y >= 0; --y) {
    in.read(reinterpret_cast<char*>(row.data()),
            static_cast<std::streamsize>(row.size() * sizeof(float)));
    if (!in) throw FormatError("truncated PFM data: " + path.string());
    store(y, row);
  }
}

}  // namespace

Image3f load_pfm3(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open map: " + path.string());
  bool color = false, le = false;
  int w = 0, h = 0;
  read_pfm_header(in, path, color, w, h, le);
  if (!color) throw SchemaError("expected 3-channel PFM: " + path.string());
  if (!le) throw FormatError("big-endian PFM unsupported: " + path.string());
  Image3f img(h, w);
  read_pfm_rows(in, path, w, h, 3, [&](int y, const std::vector<float>& row) {
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < 3; ++c) img.ch[c](y, x) = row[3 * x + c];
  });
  return img;
}

ImagePlane<float> load_pfm1(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open map: " + path.string());
  bool color = false, le = false;
  int w = 0, h = 0;
  read_pfm_header(in, path, color, w, h, le);
  if (color) throw SchemaError("expected 1-channel PFM: " + path.string());
  if (!le) throw FormatError("big-endian PFM unsupported: " + path.string());
  ImagePlane<float> img(h, w);
  read_pfm_rows(in, path, w, h, 1, [&](int y, const std::vector<float>& row) {
    for (int x = 0; x < w; ++x) img(y, x) = row[x];
  });
  return img;
}

namespace {

void write_pfm_impl(const std::filesystem::path& path, int w, int h, int channels,
                    const std::function<float(int, int, int)>& at) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write map: " + path.string());
  out << (channels == 3 ? "PF" : "Pf") << "\n" << w << " " << h << "\n-1.0\n";
  std::vector<float> row(static_cast<size_t>(w) * channels);
  for (int y = h - 1; y >= 0; --y) {
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < channels; ++c) row[static_cast<size_t>(x) * channels + c] = at(y, x, c);
    out.write(reinterpret_cast<const char*>(row.data()),
              static_cast<std::streamsize>(row.size() * sizeof(float)));
  }
  if (!out) throw IoError("short write: " + path.string());
}

}  // namespace

void save_pfm(const std::filesystem::path& path, const Image3f& image) {
  write_pfm_impl(path, static_cast<int>(image.width()), static_cast<int>(image.height()), 3,
                 [&](int y, int x, int c) { return image.ch[c](y, x); });
}

void save_pfm(const std::filesystem::path& path, const ImagePlane<float>& plane) {
  write_pfm_impl(path, static_cast<int>(plane.cols()), static_cast<int>(plane.rows()), 1,
                 [&](int y, int x, int) { return plane(y, x); });
}

}  // namespace splat
