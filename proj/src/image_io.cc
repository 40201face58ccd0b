// Copyright 2026 The NIC Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "nic/image_io.h"

#include <png.h>

#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <memory>

#include "nic/checkpoint.h"
#include "nic/errors.h"

namespace nic {
namespace {

struct FileCloser {
  void operator()(FILE* f) const {
    if (f) std::fclose(f);
  }
};

void PngError(png_structp png, png_const_charp message) {
  auto* what = static_cast<std::string*>(png_get_error_ptr(png));
  if (what) *what = message;
  std::longjmp(png_jmpbuf(png), 1);
}

void PngWarning(png_structp, png_const_charp) {}

int ReflectIndex(int i, int n) {
  if (n == 1) return 0;
  const int period = 2 * (n - 1);
  i %= period;
  return i < n ? i : period - i;
}

}  // namespace

Image ReadPng(const std::string& path) {
  std::unique_ptr<FILE, FileCloser> file(std::fopen(path.c_str(), "rb"));
  if (!file) throw IoError("cannot open " + path);
  std::string error;
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &error, PngError, PngWarning);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw IoError("libpng initialisation failed");
  }
  Image image;
  std::vector<png_bytep> rows;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError(path + ": " + (error.empty() ? "invalid PNG" : error));
  }
  png_init_io(png, file.get());
  png_read_info(png, info);
  png_set_strip_16(png);
  png_set_strip_alpha(png);
  png_set_palette_to_rgb(png);
  png_set_expand_gray_1_2_4_to_8(png);
  png_set_gray_to_rgb(png);
  png_read_update_info(png, info);
  image.width = static_cast<int>(png_get_image_width(png, info));
  image.height = static_cast<int>(png_get_image_height(png, info));
  if (png_get_rowbytes(png, info) != static_cast<size_t>(image.width) * 3) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError(path + ": unsupported PNG layout");
  }
  image.rgb.resize(static_cast<size_t>(image.width) * image.height * 3);
  rows.resize(image.height);
  for (int y = 0; y < image.height; ++y) rows[y] = image.rgb.data() + size_t{3} * image.width * y;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return image;
}

std::vector<uint8_t> EncodePng(const Image& image) {
  if (image.width <= 0 || image.height <= 0 ||
      image.rgb.size() != size_t{3} * image.width * image.height) {
    throw InvalidArgument("EncodePng: inconsistent image");
  }
  std::string error;
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &error, PngError, PngWarning);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw IoError("libpng initialisation failed");
  }
  std::vector<uint8_t> out;
  std::vector<png_bytep> rows(image.height);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IoError("PNG encoding failed: " + error);
  }
  png_set_write_fn(
      png, &out,
      [](png_structp p, png_bytep data, png_size_t n) {
        auto* buf = static_cast<std::vector<uint8_t>*>(png_get_io_ptr(p));
        buf->insert(buf->end(), data, data + n);
      },
      nullptr);
  png_set_compression_level(png, 6);
  png_set_IHDR(png, info, image.width, image.height, 8, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int y = 0; y < image.height; ++y) {
    rows[y] = const_cast<png_bytep>(image.rgb.data() + size_t{3} * image.width * y);
  }
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return out;
}

void WritePng(const Image& image, const std::string& path) {
  WriteFileBytes(path, EncodePng(image));
}

Tensor ImageToTensor(const Image& image) {
  const int h = image.height, w = image.width;
  std::vector<float> v(size_t{3} * h * w);
  for (int c = 0; c < 3; ++c) {
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        v[(size_t{1} * c * h + y) * w + x] = image.rgb[(size_t{1} * y * w + x) * 3 + c] / 255.0f;
      }
    }
  }
  return Tensor({1, 3, h, w}, std::move(v));
}

Image TensorToImage(const Tensor& x, int width, int height) {
  if (x.rank() != 4 || x.dim(0) != 1 || x.dim(1) != 3 || x.dim(2) < height || x.dim(3) < width) {
    throw ShapeError("TensorToImage: tensor " + ShapeString(x.shape()) + " cannot hold " +
                     std::to_string(width) + "x" + std::to_string(height));
  }
  const int ph = x.dim(2), pw = x.dim(3);
  Image image{width, height, std::vector<uint8_t>(size_t{3} * width * height)};
  for (int c = 0; c < 3; ++c) {
    for (int y = 0; y < height; ++y) {
      for (int xx = 0; xx < width; ++xx) {
        const float v = x.data()[(size_t{1} * c * ph + y) * pw + xx];
        const float s = std::round(std::min(std::max(v, 0.0f), 1.0f) * 255.0f);
        image.rgb[(size_t{1} * y * width + xx) * 3 + c] = static_cast<uint8_t>(s);
      }
    }
  }
  return image;
}

Tensor ReflectPad(const Tensor& x, int multiple) {
  if (x.rank() != 4 || multiple < 1) throw ShapeError("ReflectPad: expected NCHW input");
  const int n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  const int ph = (h + multiple - 1) / multiple * multiple;
  const int pw = (w + multiple - 1) / multiple * multiple;
  if (ph == h && pw == w) return x.detach();
  std::vector<float> out(size_t{1} * n * c * ph * pw);
  const auto in = x.data();
  for (int p = 0; p < n * c; ++p) {
    for (int y = 0; y < ph; ++y) {
      const int sy = ReflectIndex(y, h);
      for (int xx = 0; xx < pw; ++xx) {
        out[(size_t{1} * p * ph + y) * pw + xx] = in[(size_t{1} * p * h + sy) * w + ReflectIndex(xx, w)];
      }
    }
  }
  return Tensor({n, c, ph, pw}, std::move(out));
}

}  // namespace nic
