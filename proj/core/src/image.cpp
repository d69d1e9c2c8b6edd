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

#include "mash/image.hpp"

#include <string>
#include <utility>

#include "mash/error.hpp"

namespace mash {
namespace {

void validate_shape(int height, int width, int channels) {
  if (height <= 0 || width <= 0) {
    throw ShapeError("image dimensions must be positive, got " + std::to_string(height) + "x" +
                     std::to_string(width));
  }
  if (channels != 1 && channels != 3) {
    throw ShapeError("image must have 1 or 3 channels, got " + std::to_string(channels));
  }
}

}  // namespace

Image::Image(int height, int width, int channels, float fill)
    : height_(height), width_(width), channels_(channels) {
  validate_shape(height, width, channels);
  data_.assign(static_cast<std::size_t>(height) * static_cast<std::size_t>(width) *
                   static_cast<std::size_t>(channels),
               fill);
}

Image::Image(int height, int width, int channels, std::vector<float> data)
    : height_(height), width_(width), channels_(channels), data_(std::move(data)) {
  validate_shape(height, width, channels);
  if (data_.size() != static_cast<std::size_t>(height) * static_cast<std::size_t>(width) *
                          static_cast<std::size_t>(channels)) {
    throw ShapeError("image data length " + std::to_string(data_.size()) +
                     " does not match shape");
  }
}

void require_same_shape(const Image& a, const Image& b, const char* what) {
  if (!a.same_shape(b)) {
    throw ShapeError(std::string(what) + ": shape mismatch (" + std::to_string(a.height()) + "x" +
                     std::to_string(a.width()) + "x" + std::to_string(a.channels()) + " vs " +
                     std::to_string(b.height()) + "x" + std::to_string(b.width()) + "x" +
                     std::to_string(b.channels()) + ")");
  }
}

Image downscale(const Image& img, int factor) {
  if (factor <= 0) throw UsageError("downscale factor must be positive");
  if (img.height() % factor != 0 || img.width() % factor != 0) {
    throw ShapeError("downscale: dimensions " + std::to_string(img.height()) + "x" +
                     std::to_string(img.width()) + " not divisible by " + std::to_string(factor));
  }
  if (factor == 1) return img;
  const int h = img.height() / factor;
  const int w = img.width() / factor;
  const int c = img.channels();
  Image out(h, w, c);
  const double inv = 1.0 / (static_cast<double>(factor) * factor);
  for (int r = 0; r < h; ++r) {
    for (int q = 0; q < w; ++q) {
      for (int ch = 0; ch < c; ++ch) {
        double sum = 0.0;
        for (int dr = 0; dr < factor; ++dr) {
          for (int dq = 0; dq < factor; ++dq) {
            sum += img.at(r * factor + dr, q * factor + dq, ch);
          }
        }
        out.at(r, q, ch) = static_cast<float>(sum * inv);
      }
    }
  }
  return out;
}

Image crop(const Image& img, int row0, int col0, int height, int width) {
  if (row0 < 0 || col0 < 0 || height <= 0 || width <= 0 || row0 + height > img.height() ||
      col0 + width > img.width()) {
    throw ShapeError("crop window out of bounds");
  }
  Image out(height, width, img.channels());
  for (int r = 0; r < height; ++r) {
    for (int q = 0; q < width; ++q) {
      for (int ch = 0; ch < img.channels(); ++ch) {
        out.at(r, q, ch) = img.at(row0 + r, col0 + q, ch);
      }
    }
  }
  return out;
}

Image reflect_pad(const Image& img, int height, int width) {
  if (height < img.height() || width < img.width()) {
    throw ShapeError("reflect_pad: target smaller than image");
  }
  if (height - img.height() >= img.height() || width - img.width() >= img.width()) {
    throw ShapeError("reflect_pad: padding must be smaller than the image");
  }
  if (height == img.height() && width == img.width()) return img;
  auto reflect = [](int i, int n) { return i < n ? i : 2 * n - 2 - i; };
  Image out(height, width, img.channels());
  for (int r = 0; r < height; ++r) {
    const int sr = reflect(r, img.height());
    for (int q = 0; q < width; ++q) {
      const int sq = reflect(q, img.width());
      for (int ch = 0; ch < img.channels(); ++ch) out.at(r, q, ch) = img.at(sr, sq, ch);
    }
  }
  return out;
}

int round_up(int value, int multiple) { return (value + multiple - 1) / multiple * multiple; }

}  // namespace mash
