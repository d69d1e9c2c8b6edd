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

#include <cmath>
#include <filesystem>
#include <random>
#include <string>

#include "mash/bsd.hpp"
#include "mash/image.hpp"
#include "mash/rng.hpp"

namespace mash::testing {

inline Image random_image(int h, int w, int c, std::uint64_t seed, float lo = 0.0f,
                          float hi = 255.0f) {
  Rng rng = make_rng(seed, Stream::kTest);
  std::uniform_real_distribution<float> u(lo, hi);
  Image img(h, w, c);
  for (std::size_t i = 0; i < img.size(); ++i) img[i] = u(rng);
  return img;
}

// Smooth test pattern with flat and textured regions.
inline Image pattern_image(int h, int w, int c) {
  Image img(h, w, c);
  for (int r = 0; r < h; ++r) {
    for (int col = 0; col < w; ++col) {
      for (int ch = 0; ch < c; ++ch) {
        const double base = col < w / 2 ? 60.0 + 20.0 * ch : 180.0;
        const double tex = r >= h / 2 ? 40.0 * std::sin(0.7 * col + 0.3 * r + ch) : 0.0;
        img.at(r, col, ch) = static_cast<float>(base + tex);
      }
    }
  }
  return img;
}

// Minimal configuration that still exercises every stage.
inline MashConfig tiny_config() {
  MashConfig c = MashConfig::ci_preset();
  c.iterations = 6;
  c.shuffle_start = 3;
  c.warmup_iterations = 4;
  c.ensemble_size = 2;
  c.sigma_window = 2;
  c.adam.base_lr = 1e-3;
  return c;
}

inline std::filesystem::path temp_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("mash_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace mash::testing
