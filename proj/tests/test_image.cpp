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

#include <cmath>
#include <fstream>
#include <limits>

#include "mash/error.hpp"
#include "mash/image.hpp"
#include "test_util.hpp"

namespace mash {
namespace {

TEST(Image, RejectsBadShapes) {
  EXPECT_THROW(Image(0, 4, 3), UsageError);
  EXPECT_THROW(Image(4, 4, 2), UsageError);
  EXPECT_THROW(Image(2, 2, 1, std::vector<float>(3)), UsageError);
  EXPECT_NO_THROW(Image(1, 1, 1));
}

TEST(Image, InterleavedIndexing) {
  Image img(2, 3, 3);
  img.at(1, 2, 1) = 7.0f;
  EXPECT_EQ(img.index(1, 2, 1), (1u * 3 + 2) * 3 + 1);
  EXPECT_EQ(img[img.index(1, 2, 1)], 7.0f);
}

TEST(Metrics, PsnrClosedForm) {
  const Image a(16, 16, 3, 100.0f);
  const Image b25(16, 16, 3, 125.0f);
  const Image b10(16, 16, 3, 90.0f);
  EXPECT_NEAR(psnr(a, b25), 20.172003435238352, 1e-9);
  EXPECT_NEAR(psnr(a, b10), 28.130803608679106, 1e-9);
  EXPECT_TRUE(std::isinf(psnr(a, a)));
}

TEST(Metrics, PsnrShapeMismatch) {
  EXPECT_THROW(psnr(Image(4, 4, 1), Image(4, 4, 3)), ShapeError);
}

TEST(Metrics, SsimIdentityAndSymmetry) {
  const Image a = testing::random_image(32, 32, 3, 1);
  const Image b = testing::random_image(32, 32, 3, 2);
  EXPECT_NEAR(ssim(a, a), 1.0, 1e-12);
  EXPECT_NEAR(ssim(a, b), ssim(b, a), 1e-12);
  EXPECT_LT(ssim(a, b), 0.1);
}

TEST(Metrics, SsimOfConstantShiftIsBelowOne) {
  const Image a = testing::pattern_image(32, 32, 1);
  Image b = a;
  for (std::size_t i = 0; i < b.size(); ++i) b[i] += 30.0f;
  const double s = ssim(a, b);
  EXPECT_LT(s, 1.0);
  EXPECT_GT(s, 0.5);
}

TEST(ImageOps, CropAndPad) {
  const Image a = testing::random_image(5, 7, 3, 3);
  const Image c = crop(a, 1, 2, 3, 4);
  EXPECT_EQ(c.height(), 3);
  EXPECT_EQ(c.width(), 4);
  EXPECT_EQ(c.at(0, 0, 2), a.at(1, 2, 2));
  EXPECT_THROW(crop(a, 3, 0, 3, 1), UsageError);

  const Image p = reflect_pad(a, 8, 8);
  EXPECT_EQ(p.height(), 8);
  EXPECT_EQ(p.width(), 8);
  EXPECT_EQ(crop(p, 0, 0, 5, 7), a);
  // Reflection without repeating the edge: row 5 mirrors row 3.
  EXPECT_EQ(p.at(5, 0, 0), a.at(3, 0, 0));
  EXPECT_EQ(p.at(0, 7, 1), a.at(0, 5, 1));
  EXPECT_EQ(round_up(33, 32), 64);
  EXPECT_EQ(round_up(64, 32), 64);
}

TEST(ImageOps, DownscaleAverages) {
  Image a(2, 2, 1, std::vector<float>{1, 2, 3, 6});
  const Image d = downscale(a, 2);
  EXPECT_EQ(d.height(), 1);
  EXPECT_FLOAT_EQ(d[0], 3.0f);
}

TEST(ImageIo, RawRoundTripIsLossless) {
  const auto dir = testing::temp_dir("io_raw");
  const Image a = testing::random_image(9, 11, 3, 4, -80.0f, 300.0f);
  save_image(a, dir / "a.rawf32", ImageFormat::kRawF32);
  EXPECT_EQ(load_image(dir / "a.rawf32"), a);
}

TEST(ImageIo, PngQuantises) {
  const auto dir = testing::temp_dir("io_png");
  Image a(1, 4, 1, std::vector<float>{-5.0f, 10.5f, 254.4f, 400.0f});
  save_image(a, dir / "a.png", ImageFormat::kPng8);
  const Image b = load_image(dir / "a.png");
  ASSERT_EQ(b.size(), 4u);
  EXPECT_EQ(b[0], 0.0f);
  EXPECT_EQ(b[1], 11.0f);
  EXPECT_EQ(b[2], 254.0f);
  EXPECT_EQ(b[3], 255.0f);
}

TEST(ImageIo, Errors) {
  const auto dir = testing::temp_dir("io_err");
  EXPECT_THROW(load_image(dir / "missing.png"), IoError);
  {
    std::ofstream out(dir / "junk.bin", std::ios::binary);
    out << "not an image";
  }
  EXPECT_THROW(load_image(dir / "junk.bin"), FormatError);
  const Image a = testing::random_image(4, 4, 1, 5);
  save_image(a, dir / "t.rawf32", ImageFormat::kRawF32);
  std::filesystem::resize_file(dir / "t.rawf32", 20);
  EXPECT_THROW(load_image(dir / "t.rawf32"), FormatError);
  EXPECT_EQ(format_for_path("x.png"), ImageFormat::kPng8);
  EXPECT_EQ(format_for_path("x.rawf32"), ImageFormat::kRawF32);
}

}  // namespace
}  // namespace mash
