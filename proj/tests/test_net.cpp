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
#include <cmath>
#include <numeric>

#include "mash/error.hpp"
#include "mash/net.hpp"
#include "test_util.hpp"

namespace mash {
namespace {

TEST(NetTopology, ParameterCounts) {
  // Hand-tallied from the layer widths.
  EXPECT_EQ(parameter_count(NetConfig::standard(3)), 991203u);
  EXPECT_EQ(parameter_count(NetConfig::reduced_variant(3)), 90883u);
  const auto layers = build_topology(NetConfig::standard(3));
  EXPECT_EQ(layers.size(), 18u);
  EXPECT_FALSE(layers.back().activation);
  EXPECT_EQ(layers.back().out_channels, 3);
}

TEST(NetTopology, Validation) {
  NetConfig c = NetConfig::standard(3);
  c.depth = 0;
  EXPECT_THROW(c.validate(), UsageError);
  c = NetConfig::standard(2);
  EXPECT_THROW(c.validate(), UsageError);
}

TEST(Net, ForwardShapeChecks) {
  Rng rng = make_rng(1, Stream::kInit);
  const auto model = init_model<float>(NetConfig::reduced_variant(3), rng);
  EXPECT_THROW(forward(model, Image(12, 16, 3)), ShapeError);
  EXPECT_THROW(forward(model, Image(16, 16, 1)), ShapeError);
  const Image out = forward(model, testing::random_image(16, 24, 3, 1));
  EXPECT_EQ(out.height(), 16);
  EXPECT_EQ(out.width(), 24);
  EXPECT_EQ(out.channels(), 3);
}

TEST(Net, InitIsDeterministicAndScaled) {
  const NetConfig cfg = NetConfig::reduced_variant(3);
  Rng a = make_rng(5, Stream::kInit);
  Rng b = make_rng(5, Stream::kInit);
  const auto ma = init_model<float>(cfg, a);
  const auto mb = init_model<float>(cfg, b);
  EXPECT_EQ(ma.parameters, mb.parameters);
  // Second conv: fan_in 16 * 9, leaky slope 0.1.
  const ConvSpec& l1 = ma.layers[1];
  double ss = 0.0;
  for (std::size_t i = 0; i < l1.weight_count(); ++i) {
    ss += double(ma.parameters[l1.weight_offset + i]) * ma.parameters[l1.weight_offset + i];
  }
  const double expected_var = 2.0 / ((1.0 + 0.01) * 144.0);
  EXPECT_NEAR(ss / l1.weight_count(), expected_var, 0.1 * expected_var);
  for (int i = 0; i < l1.out_channels; ++i) EXPECT_EQ(ma.parameters[l1.bias_offset + i], 0.0f);
}

TEST(Net, ZeroModelOutputsZero) {
  const auto model = zero_model<float>(NetConfig::reduced_variant(1));
  const Image out = forward(model, testing::random_image(8, 8, 1, 2));
  for (std::size_t i = 0; i < out.size(); ++i) EXPECT_EQ(out[i], 0.0f);
}

TEST(Net, ZeroWeightGivesZeroGradient) {
  Rng rng = make_rng(2, Stream::kInit);
  const auto model = init_model<float>(NetConfig::reduced_variant(3), rng);
  const Image x = testing::random_image(8, 8, 3, 3);
  const auto lg = loss_and_grads(model, x, x, Image(8, 8, 3, 0.0f));
  EXPECT_EQ(lg.loss, 0.0);
  EXPECT_TRUE(std::all_of(lg.grads.begin(), lg.grads.end(), [](float g) { return g == 0.0f; }));
}

TEST(Net, OutputDependsOnlyOnNearbyPixelsWithinRadius) {
  Rng rng = make_rng(3, Stream::kInit);
  const auto model = init_model<double>(NetConfig::reduced_variant(1), rng);
  const int r = receptive_field_radius(model.config);
  const int n = 2 * r + 16;
  const int size = (n + 7) / 8 * 8;
  Image x = testing::random_image(size, size, 1, 4);
  const Image base = forward(model, x);
  x.at(0, 0, 0) += 50.0f;
  const Image moved = forward(model, x);
  EXPECT_EQ(base.at(size - 1, size - 1, 0), moved.at(size - 1, size - 1, 0));
  EXPECT_NE(base.at(0, 0, 0), moved.at(0, 0, 0));
}

// Sign pattern of every activation plus every pool argmax; central
// differences are only meaningful when it is identical at both ends.
template <typename T>
std::vector<std::size_t> branch_pattern(const Workspace<T>& ws) {
  std::vector<std::size_t> p;
  for (const auto& a : ws.activations) {
    for (T v : a.values) p.push_back(v > T(0) ? 1 : 0);
  }
  for (const auto& am : ws.argmax) p.insert(p.end(), am.begin(), am.end());
  return p;
}

struct FdResult {
  double worst = 0.0;
  int checked = 0;
};

template <typename T>
FdResult finite_difference_check(int wanted, double h) {
  const NetConfig cfg = NetConfig::reduced_variant(3);
  Rng rng = make_rng(11, Stream::kInit);
  auto model = init_model<T>(cfg, rng);
  const Image x = testing::random_image(8, 8, 3, 12);
  // Target a few intensity units from the current output.
  Image t = forward(model, x);
  Rng mrng = make_rng(14, Stream::kTest);
  std::normal_distribution<float> jitter(0.0f, 2.0f);
  for (std::size_t i = 0; i < t.size(); ++i) t[i] += jitter(mrng);
  Image wgt(8, 8, 3);
  std::bernoulli_distribution coin(0.5);
  for (std::size_t i = 0; i < wgt.size(); ++i) wgt[i] = coin(mrng) ? 1.0f : 0.0f;

  Workspace<T> ws;
  std::vector<T> grads;
  loss_and_grads(model, x, t, wgt, ws, grads);

  // Every layer first, weights and biases, then uniform picks.
  std::vector<std::size_t> picks;
  for (const ConvSpec& l : model.layers) {
    picks.push_back(l.weight_offset + l.weight_count() / 2);
    picks.push_back(l.bias_offset);
  }
  Rng prng = make_rng(15, Stream::kTest);
  std::uniform_int_distribution<std::size_t> any(0, model.parameters.size() - 1);
  for (int i = 0; i < 4 * wanted; ++i) picks.push_back(any(prng));

  // Central differences in double on the same parameter values.
  DenoiserModel<double> ref{model.config, model.layers,
                            {model.parameters.begin(), model.parameters.end()}};
  Workspace<double> ref_ws;
  FdResult r;
  std::vector<double> scratch;
  for (std::size_t p : picks) {
    if (r.checked >= wanted) break;
    const double orig = ref.parameters[p];
    ref.parameters[p] = orig + h;
    const double up = loss_and_grads(ref, x, t, wgt, ref_ws, scratch);
    const auto pattern_up = branch_pattern(ref_ws);
    ref.parameters[p] = orig - h;
    const double down = loss_and_grads(ref, x, t, wgt, ref_ws, scratch);
    const auto pattern_down = branch_pattern(ref_ws);
    ref.parameters[p] = orig;
    if (pattern_up != pattern_down) continue;
    const double fd = (up - down) / (2.0 * h);
    const double an = grads[p];
    const double denom = std::max({std::abs(fd), std::abs(an), 1e-3});
    r.worst = std::max(r.worst, std::abs(fd - an) / denom);
    ++r.checked;
  }
  return r;
}

TEST(NetGradients, DoublePrecisionMatchesFiniteDifferences) {
  const FdResult r = finite_difference_check<double>(60, 1e-3);
  EXPECT_GE(r.checked, 50);
  EXPECT_LT(r.worst, 1e-5);
}

TEST(NetGradients, SinglePrecisionMatchesFiniteDifferences) {
  const FdResult r = finite_difference_check<float>(60, 1e-3);
  EXPECT_GE(r.checked, 50);
  EXPECT_LT(r.worst, 1e-2);
}

TEST(NetTraining, LossFallsOnNoisyConstantImage) {
  Rng irng = make_rng(21, Stream::kInit);
  AdamSettings a;
  a.total_steps = 200;
  BsdTrainer trainer(init_model<float>(NetConfig::reduced_variant(1), irng), a);
  Rng nrng = make_rng(21, Stream::kNoise);
  std::normal_distribution<float> n(0.0f, 25.0f);
  Image y(32, 32, 1);
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = 128.0f + n(nrng);
  Rng mrng = make_rng(21, Stream::kTrainMask);
  std::vector<double> loss;
  for (int i = 0; i < 200; ++i) loss.push_back(trainer.step(y, y, 0.5, mrng).loss);
  auto running = [&](int end) {
    double s = 0.0;
    for (int i = end - 10; i < end; ++i) s += loss[i];
    return s / 10.0;
  };
  EXPECT_LT(running(200), loss[9]);
}

TEST(Checkpoint, RoundTripIsBitExact) {
  const auto dir = testing::temp_dir("ckpt");
  Rng rng = make_rng(7, Stream::kInit);
  const auto model = init_model<float>(NetConfig::reduced_variant(3), rng);
  save_checkpoint(model, dir / "m.bin");
  const auto back = load_checkpoint<float>(dir / "m.bin");
  EXPECT_EQ(back.config, model.config);
  EXPECT_EQ(back.parameters, model.parameters);
  EXPECT_THROW(load_checkpoint<double>(dir / "m.bin"), FormatError);
  EXPECT_THROW(load_checkpoint<float>(dir / "none.bin"), IoError);
}

}  // namespace
}  // namespace mash
