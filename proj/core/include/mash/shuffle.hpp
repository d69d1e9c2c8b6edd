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

#include <cstdint>
#include <vector>

#include "mash/image.hpp"

namespace mash {

// Per-tile flatness of a (pseudo-clean) image on a non-overlapping s x s grid
// anchored at (0, 0). Edge tiles keep their smaller size.
struct FlatnessMap {
  int height = 0;
  int width = 0;
  int tile = 0;
  double lambda = 0.0;
  std::vector<double> sigma_map;   // per pixel: tile std, averaged over channels
  std::vector<std::uint8_t> flat;  // per pixel: 1 iff sigma_map < lambda

  [[nodiscard]] int tile_rows() const { return (height + tile - 1) / tile; }
  [[nodiscard]] int tile_cols() const { return (width + tile - 1) / tile; }
  [[nodiscard]] bool is_flat(int row, int col) const {
    return flat[static_cast<std::size_t>(row) * width + col] != 0;
  }
  [[nodiscard]] double flat_fraction() const;

  // 8-bit visualisation: 255 for flat pixels, 0 elsewhere.
  [[nodiscard]] Image to_image() const;
};

FlatnessMap flatness_map(const Image& pseudo_clean, int tile, double lambda);

struct TilePermutation {
  int tile_row = 0;
  int tile_col = 0;
  // source[k] is the tile-local pixel index (row-major) moved to position k.
  std::vector<int> source;
};

struct ShuffledImage {
  Image image;
  std::vector<TilePermutation> permutation_log;
};

// Uniformly permutes whole pixels (all channels together) inside every flat
// tile; non-flat tiles are copied. Tile t draws from its own stream derived
// from (seed, t).
ShuffledImage local_shuffle(const Image& y, const FlatnessMap& fmap, std::uint64_t seed);

}  // namespace mash
