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

#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

namespace mash {

// H x W x C raster of 32-bit intensities on the [0, 255] scale, stored
// row-major with interleaved channels. Values are not clamped; noisy images
// routinely leave the nominal range.
class Image {
 public:
  Image() = default;
  Image(int height, int width, int channels, float fill = 0.0f);
  Image(int height, int width, int channels, std::vector<float> data);

  [[nodiscard]] int height() const { return height_; }
  [[nodiscard]] int width() const { return width_; }
  [[nodiscard]] int channels() const { return channels_; }
  [[nodiscard]] std::size_t size() const { return data_.size(); }
  [[nodiscard]] std::size_t pixel_count() const {
    return static_cast<std::size_t>(height_) * static_cast<std::size_t>(width_);
  }
  [[nodiscard]] bool empty() const { return data_.empty(); }

  [[nodiscard]] std::size_t index(int row, int col, int ch) const {
    return (static_cast<std::size_t>(row) * static_cast<std::size_t>(width_) +
            static_cast<std::size_t>(col)) *
               static_cast<std::size_t>(channels_) +
           static_cast<std::size_t>(ch);
  }
  float& at(int row, int col, int ch) { return data_[index(row, col, ch)]; }
  [[nodiscard]] float at(int row, int col, int ch) const { return data_[index(row, col, ch)]; }

  std::span<float> data() { return data_; }
  [[nodiscard]] std::span<const float> data() const { return data_; }
  float& operator[](std::size_t i) { return data_[i]; }
  float operator[](std::size_t i) const { return data_[i]; }

  [[nodiscard]] bool same_shape(const Image& other) const {
    return height_ == other.height_ && width_ == other.width_ && channels_ == other.channels_;
  }

  friend bool operator==(const Image&, const Image&) = default;

 private:
  int height_ = 0;
  int width_ = 0;
  int channels_ = 0;
  std::vector<float> data_;
};

// Throws ShapeError unless a and b have identical shapes.
void require_same_shape(const Image& a, const Image& b, const char* what);

enum class ImageFormat { kPng8, kRawF32 };

// Reads an 8-bit PNG (gray, gray+alpha, RGB, RGBA; alpha is dropped) or a
// rawf32 file. The format is detected from the file signature.
Image load_image(const std::filesystem::path& path);

// png8 clamps to [0, 255] and rounds half away from zero. rawf32 stores the
// exact float bits.
void save_image(const Image& img, const std::filesystem::path& path, ImageFormat format);

// Picks png8 for a ".png" extension and rawf32 otherwise.
ImageFormat format_for_path(const std::filesystem::path& path);

// Box-filter average over factor x factor blocks.
Image downscale(const Image& img, int factor);

Image crop(const Image& img, int row0, int col0, int height, int width);

// Symmetric (edge-excluded) reflection padding on the bottom and right so the
// result is height x width. Requires the pad on each axis to be smaller than
// the corresponding image dimension.
Image reflect_pad(const Image& img, int height, int width);

// Smallest multiple of `multiple` that is >= value.
int round_up(int value, int multiple);

struct MetricReport {
  double psnr = 0.0;
  double ssim = 0.0;
};

// 10 log10(peak^2 / MSE) over the flattened arrays; +inf when MSE is zero.
double psnr(const Image& a, const Image& b, double peak = 255.0);

// Mean SSIM over all fully-contained 11x11 Gaussian windows (sigma 1.5),
// computed per channel and averaged.
double ssim(const Image& a, const Image& b);

MetricReport compare(const Image& reference, const Image& test);

}  // namespace mash
