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

#include <gtest/gtest.h>

#include <algorithm>
#include <array>
#include <vector>

#include "mash/error.hpp"
#include "mash/shuffle.hpp"
#include "test_util.hpp"

namespace mash {
namespace {

using Pixel = std::array<float, 3>;

std::vector<Pixel> tile_pixels(const Image& img, int tr, int tc, int s) {
  std::vector<Pixel> out;
  for (int r = tr * s; r < std::min((tr + 1) * s, img.height()); ++r) {
    for (int c = tc * s; c < std::min((tc + 1) * s, img.width()); ++c) {
      Pixel p{};
      for (int ch = 0; ch < img.channels(); ++ch) p[ch] = img.at(r, c, ch);
      out.push_back(p);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

TEST(Flatness, ConstantImageIsFlat) {
  const FlatnessMap f = flatness_map(Image(10, 9, 3, 42.0f), 4, 5.0);
  EXPECT_EQ(f.tile_rows(), 3);
  EXPECT_EQ(f.tile_cols(), 3);
  EXPECT_DOUBLE_EQ(f.flat_fraction(), 1.0);
  EXPECT_EQ(f.to_image().at(9, 8, 0), 255.0f);
}

TEST(Flatness, TileStdAveragedOverChannels) {
  // One 2x2 tile; channel 0 values {0, 0, 10, 10} have population std 5,
  // channel 1 is constant: mean std 2.5.
  Image img(2, 2, 3, 0.0f);
  img.at(1, 0, 0) = 10.0f;
  img.at(1, 1, 0) = 10.0f;
  const FlatnessMap f = flatness_map(img, 2, 3.0);
  EXPECT_NEAR(f.sigma_map[0], 5.0 / 3.0, 1e-12);
  EXPECT_TRUE(f.is_flat(0, 0));
  EXPECT_FALSE(flatness_map(img, 2, 1.0).is_flat(1, 1));
  EXPECT_THROW(flatness_map(img, 0, 1.0), UsageError);
}

TEST(Shuffle, PreservesTileMultisetsAndNonFlatPixels) {
  const Image pseudo = testing::pattern_image(30, 30, 3);
  const FlatnessMap f = flatness_map(pseudo, 4, 5.0);
  ASSERT_GT(f.flat_fraction(), 0.1);
  ASSERT_LT(f.flat_fraction(), 0.9);
  const Image y = testing::random_image(30, 30, 3, 7);
  const ShuffledImage s = local_shuffle(y, f, 99);
  for (int tr = 0; tr < f.tile_rows(); ++tr) {
    for (int tc = 0; tc < f.tile_cols(); ++tc) {
      EXPECT_EQ(tile_pixels(y, tr, tc, 4), tile_pixels(s.image, tr, tc, 4));
    }
  }
  bool moved = false;
  for (int r = 0; r < 30; ++r) {
    for (int c = 0; c < 30; ++c) {
      for (int ch = 0; ch < 3; ++ch) {
        if (!f.is_flat(r, c)) {
          EXPECT_EQ(s.image.at(r, c, ch), y.at(r, c, ch));
        } else if (s.image.at(r, c, ch) != y.at(r, c, ch)) {
          moved = true;
        }
      }
    }
  }
  EXPECT_TRUE(moved);
}

TEST(Shuffle, AllNonFlatIsIdentity) {
  const Image y = testing::random_image(16, 16, 3, 8);
  const FlatnessMap f = flatness_map(y, 4, 1e-3);
  ASSERT_EQ(f.flat_fraction(), 0.0);
  const ShuffledImage s = local_shuffle(y, f, 5);
  EXPECT_EQ(s.image, y);
  EXPECT_TRUE(s.permutation_log.empty());
}

TEST(Shuffle, DeterministicPerSeed) {
  const Image y = testing::random_image(16, 16, 1, 9);
  const FlatnessMap f = flatness_map(Image(16, 16, 1, 1.0f), 4, 5.0);
  EXPECT_EQ(local_shuffle(y, f, 3).image, local_shuffle(y, f, 3).image);
  EXPECT_NE(local_shuffle(y, f, 3).image, local_shuffle(y, f, 4).image);
  const ShuffledImage s = local_shuffle(y, f, 3);
  EXPECT_EQ(s.permutation_log.size(), 16u);
  for (const auto& t : s.permutation_log) {
    std::vector<int> sorted = t.source;
    std::sort(sorted.begin(), sorted.end());
    for (int k = 0; k < 16; ++k) EXPECT_EQ(sorted[k], k);
  }
}

TEST(Shuffle, ShapeMismatch) {
  const FlatnessMap f = flatness_map(Image(8, 8, 1), 4, 5.0);
  EXPECT_THROW(local_shuffle(Image(8, 12, 1), f, 1), ShapeError);
}

}  // namespace
}  // namespace mash
