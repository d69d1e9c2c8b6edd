// Copyright 2026 The MASH Denoise Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <png.h>

#include <algorithm>
#include <array>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "mash/error.hpp"
#include "mash/image.hpp"

namespace mash {
namespace {

constexpr std::array<char, 4> kRawMagic = {'M', 'S', 'H', 'F'};
constexpr std::array<unsigned char, 8> kPngSignature = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1A, '\n'};

static_assert(std::endian::native == std::endian::little,
              "rawf32 I/O assumes a little-endian host");

std::vector<char> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("read failure on " + path.string());
  return bytes;
}

std::uint32_t read_u32(const char* p) {
  std::uint32_t v = 0;
  std::memcpy(&v, p, sizeof v);
  return v;
}

Image decode_raw(const std::vector<char>& bytes, const std::filesystem::path& path) {
  constexpr std::size_t kHeader = 4 + 3 * sizeof(std::uint32_t);
  if (bytes.size() < kHeader) throw FormatError("corrupt header in " + path.string());
  const std::uint32_t h = read_u32(bytes.data() + 4);
  const std::uint32_t w = read_u32(bytes.data() + 8);
  const std::uint32_t c = read_u32(bytes.data() + 12);
  if (h == 0 || w == 0 || c == 0) throw FormatError("zero-sized image in " + path.string());
  if (c != 1 && c != 3) throw FormatError("unsupported channel count in " + path.string());
  const std::uint64_t count = static_cast<std::uint64_t>(h) * w * c;
  if (bytes.size() - kHeader != count * sizeof(float)) {
    throw FormatError("corrupt header in " + path.string() + ": payload size does not match " +
                      std::to_string(h) + "x" + std::to_string(w) + "x" + std::to_string(c));
  }
  std::vector<float> data(count);
  std::memcpy(data.data(), bytes.data() + kHeader, count * sizeof(float));
  return Image(static_cast<int>(h), static_cast<int>(w), static_cast<int>(c), std::move(data));
}

Image decode_png(const std::vector<char>& bytes, const std::filesystem::path& path) {
  png_image png{};
  png.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&png, bytes.data(), bytes.size())) {
    throw FormatError("corrupt PNG header in " + path.string() + ": " + png.message);
  }
  if (png.width == 0 || png.height == 0) {
    png_image_free(&png);
    throw FormatError("zero-sized image in " + path.string());
  }
  const bool color = (png.format & PNG_FORMAT_FLAG_COLOR) != 0;
  png.format = color ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  const int channels = color ? 3 : 1;
  std::vector<png_byte> buffer(PNG_IMAGE_SIZE(png));
  if (!png_image_finish_read(&png, nullptr, buffer.data(), 0, nullptr)) {
    const std::string msg = png.message;
    png_image_free(&png);
    throw FormatError("corrupt PNG data in " + path.string() + ": " + msg);
  }
  std::vector<float> data(buffer.begin(), buffer.end());
  return Image(static_cast<int>(png.height), static_cast<int>(png.width), channels,
               std::move(data));
}

void write_file(const std::filesystem::path& path, const void* data, std::size_t size) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(static_cast<const char*>(data), static_cast<std::streamsize>(size));
  if (!out) throw IoError("write failure on " + path.string());
}

}  // namespace

Image load_image(const std::filesystem::path& path) {
  const std::vector<char> bytes = read_file(path);
  if (bytes.empty()) throw FormatError("empty file " + path.string());
  if (bytes.size() >= kRawMagic.size() &&
      std::equal(kRawMagic.begin(), kRawMagic.end(), bytes.begin())) {
    return decode_raw(bytes, path);
  }
  if (bytes.size() >= kPngSignature.size() &&
      std::memcmp(bytes.data(), kPngSignature.data(), kPngSignature.size()) == 0) {
    return decode_png(bytes, path);
  }
  throw FormatError("unsupported image format: " + path.string());
}

void save_image(const Image& img, const std::filesystem::path& path, ImageFormat format) {
  if (img.empty()) throw UsageError("cannot save an empty image");
  if (format == ImageFormat::kRawF32) {
    std::vector<char> bytes(16 + img.size() * sizeof(float));
    std::memcpy(bytes.data(), kRawMagic.data(), 4);
    const std::uint32_t dims[3] = {static_cast<std::uint32_t>(img.height()),
                                   static_cast<std::uint32_t>(img.width()),
                                   static_cast<std::uint32_t>(img.channels())};
    std::memcpy(bytes.data() + 4, dims, sizeof dims);
    std::memcpy(bytes.data() + 16, img.data().data(), img.size() * sizeof(float));
    write_file(path, bytes.data(), bytes.size());
    return;
  }

  std::vector<png_byte> pixels(img.size());
  std::transform(img.data().begin(), img.data().end(), pixels.begin(), [](float v) {
    const double clamped = std::clamp(static_cast<double>(v), 0.0, 255.0);
    return static_cast<png_byte>(std::round(clamped));
  });
  png_image png{};
  png.version = PNG_IMAGE_VERSION;
  png.width = static_cast<png_uint_32>(img.width());
  png.height = static_cast<png_uint_32>(img.height());
  png.format = img.channels() == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&png, nullptr, &size, 0, pixels.data(), 0, nullptr)) {
    throw IoError("PNG encode failed: " + std::string(png.message));
  }
  std::vector<png_byte> encoded(size);
  if (!png_image_write_to_memory(&png, encoded.data(), &size, 0, pixels.data(), 0, nullptr)) {
    throw IoError("PNG encode failed: " + std::string(png.message));
  }
  write_file(path, encoded.data(), size);
}

ImageFormat format_for_path(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
  return ext == ".png" ? ImageFormat::kPng8 : ImageFormat::kRawF32;
}

}  // namespace mash
