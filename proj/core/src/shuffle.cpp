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

#include "mash/shuffle.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mash/error.hpp"
#include "mash/rng.hpp"

namespace mash {

double FlatnessMap::flat_fraction() const {
  if (flat.empty()) return 0.0;
  const auto n = std::count(flat.begin(), flat.end(), std::uint8_t{1});
  return static_cast<double>(n) / static_cast<double>(flat.size());
}

Image FlatnessMap::to_image() const {
  Image img(height, width, 1);
  for (std::size_t i = 0; i < flat.size(); ++i) img[i] = flat[i] ? 255.0f : 0.0f;
  return img;
}

FlatnessMap flatness_map(const Image& pseudo_clean, int tile, double lambda) {
  if (tile < 2) throw UsageError("tile size must be >= 2");
  if (!(lambda > 0.0)) throw UsageError("flatness threshold must be > 0");
  if (tile > pseudo_clean.height() && tile > pseudo_clean.width()) {
    throw ShapeError("tile size exceeds both image dimensions");
  }
  FlatnessMap m;
  m.height = pseudo_clean.height();
  m.width = pseudo_clean.width();
  m.tile = tile;
  m.lambda = lambda;
  m.sigma_map.assign(pseudo_clean.pixel_count(), 0.0);
  m.flat.assign(pseudo_clean.pixel_count(), 0);
  const int channels = pseudo_clean.channels();

  for (int tr = 0; tr < m.tile_rows(); ++tr) {
    for (int tc = 0; tc < m.tile_cols(); ++tc) {
      const int r0 = tr * tile;
      const int c0 = tc * tile;
      const int r1 = std::min(r0 + tile, m.height);
      const int c1 = std::min(c0 + tile, m.width);
      const double n = static_cast<double>((r1 - r0) * (c1 - c0));
      double std_sum = 0.0;
      for (int ch = 0; ch < channels; ++ch) {
        double mean = 0.0;
        for (int r = r0; r < r1; ++r) {
          for (int q = c0; q < c1; ++q) mean += pseudo_clean.at(r, q, ch);
        }
        mean /= n;
        double var = 0.0;
        for (int r = r0; r < r1; ++r) {
          for (int q = c0; q < c1; ++q) {
            const double d = pseudo_clean.at(r, q, ch) - mean;
            var += d * d;
          }
        }
        std_sum += std::sqrt(var / n);
      }
      const double sigma = std_sum / channels;
      const std::uint8_t is_flat = sigma < lambda ? 1 : 0;
      for (int r = r0; r < r1; ++r) {
        for (int q = c0; q < c1; ++q) {
          const std::size_t i = static_cast<std::size_t>(r) * m.width + q;
          m.sigma_map[i] = sigma;
          m.flat[i] = is_flat;
        }
      }
    }
  }
  return m;
}

ShuffledImage local_shuffle(const Image& y, const FlatnessMap& fmap, std::uint64_t seed) {
  if (y.height() != fmap.height || y.width() != fmap.width) {
    throw ShapeError("flatness map shape does not match the image");
  }
  ShuffledImage out{y, {}};
  const int tile = fmap.tile;
  const int channels = y.channels();
  for (int tr = 0; tr < fmap.tile_rows(); ++tr) {
    for (int tc = 0; tc < fmap.tile_cols(); ++tc) {
      const int r0 = tr * tile;
      const int c0 = tc * tile;
      if (!fmap.is_flat(r0, c0)) continue;
      const int th = std::min(tile, fmap.height - r0);
      const int tw = std::min(tile, fmap.width - c0);
      TilePermutation perm;
      perm.tile_row = tr;
      perm.tile_col = tc;
      perm.source.resize(static_cast<std::size_t>(th) * tw);
      std::iota(perm.source.begin(), perm.source.end(), 0);
      const std::uint64_t tile_index = static_cast<std::uint64_t>(tr) * fmap.tile_cols() + tc;
      Rng rng = make_rng(seed, Stream::kShuffle, tile_index);
      std::shuffle(perm.source.begin(), perm.source.end(), rng);
      for (int k = 0; k < th * tw; ++k) {
        const int src = perm.source[k];
        for (int ch = 0; ch < channels; ++ch) {
          out.image.at(r0 + k / tw, c0 + k % tw, ch) = y.at(r0 + src / tw, c0 + src % tw, ch);
        }
      }
      out.permutation_log.push_back(std::move(perm));
    }
  }
  return out;
}

}  // namespace mash
