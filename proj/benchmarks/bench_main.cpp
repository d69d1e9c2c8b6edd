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

#include <benchmark/benchmark.h>

#include <random>

#include "mash/bsd.hpp"
#include "mash/net.hpp"
#include "mash/noise.hpp"
#include "mash/shuffle.hpp"

namespace {

using namespace mash;

Image bench_image(int size, int channels) {
  Rng rng = make_rng(1, Stream::kTest);
  std::uniform_real_distribution<float> u(0.0f, 255.0f);
  Image img(size, size, channels);
  for (std::size_t i = 0; i < img.size(); ++i) img[i] = u(rng);
  return img;
}

NetConfig bench_net(bool reduced) {
  return reduced ? NetConfig::reduced_variant(3) : NetConfig::standard(3);
}

void BM_Forward(benchmark::State& state) {
  const int size = static_cast<int>(state.range(0));
  Rng rng = make_rng(2, Stream::kInit);
  const auto model = init_model<float>(bench_net(state.range(1) != 0), rng);
  const Image x = bench_image(size, 3);
  Workspace<float> ws;
  for (auto _ : state) benchmark::DoNotOptimize(forward(model, x, ws));
}
BENCHMARK(BM_Forward)->Args({64, 1})->Args({128, 1})->Args({64, 0})->Args({128, 0})
    ->Unit(benchmark::kMillisecond);

void BM_TrainStep(benchmark::State& state) {
  const int size = static_cast<int>(state.range(0));
  Rng rng = make_rng(3, Stream::kInit);
  BsdTrainer trainer(init_model<float>(bench_net(state.range(1) != 0), rng), AdamSettings{});
  const Image y = bench_image(size, 3);
  Rng mrng = make_rng(3, Stream::kTrainMask);
  for (auto _ : state) benchmark::DoNotOptimize(trainer.step(y, y, 0.5, mrng));
}
BENCHMARK(BM_TrainStep)->Args({64, 1})->Args({128, 1})->Args({64, 0})->Args({128, 0})
    ->Unit(benchmark::kMillisecond);

void BM_FastNoise(benchmark::State& state) {
  const int size = static_cast<int>(state.range(0));
  const FastNoiseSampler sampler(NoiseModel{25.0, 1.0, 3.0}, size, size);
  Rng rng = make_rng(4, Stream::kNoise);
  for (auto _ : state) benchmark::DoNotOptimize(sampler.sample(3, rng));
}
BENCHMARK(BM_FastNoise)->Arg(64)->Arg(128)->Arg(256)->Unit(benchmark::kMicrosecond);

void BM_ExactNoise(benchmark::State& state) {
  const int size = static_cast<int>(state.range(0));
  const ExactNoiseSampler sampler(NoiseModel{25.0, 1.0, 3.0}, size, size);
  Rng rng = make_rng(5, Stream::kNoise);
  for (auto _ : state) benchmark::DoNotOptimize(sampler.sample(1, rng));
}
BENCHMARK(BM_ExactNoise)->Arg(6)->Arg(16)->Arg(32)->Unit(benchmark::kMicrosecond);

void BM_LocalShuffle(benchmark::State& state) {
  const Image y = bench_image(128, 3);
  const FlatnessMap f = flatness_map(Image(128, 128, 3, 10.0f), 4, 5.0);
  std::uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(local_shuffle(y, f, seed++));
}
BENCHMARK(BM_LocalShuffle)->Unit(benchmark::kMicrosecond);

}  // namespace
BENCHMARK_MAIN();
