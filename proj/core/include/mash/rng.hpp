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
#include <random>
#include <string_view>

namespace mash {

using Rng = std::mt19937_64;

// Independent random streams derived from a single root seed. Each consumer
// of randomness owns one purpose tag, so enabling or disabling a feature
// never shifts the draws seen by another.
enum class Stream : std::uint64_t {
  kNoise = 1,
  kInit = 2,
  kTrainMask = 3,
  kSigmaEval = 4,
  kShuffle = 5,
  kEnsemble = 6,
  kTest = 99,
};

// splitmix64 finalizer.
std::uint64_t mix64(std::uint64_t x);

// Seed for (root, stream, index): chained splitmix64 over the three words.
std::uint64_t derive_seed(std::uint64_t root, Stream stream, std::uint64_t index = 0);

Rng make_rng(std::uint64_t root, Stream stream, std::uint64_t index = 0);

// FNV-1a, used to turn names and real-valued grid coordinates into stream
// indices.
std::uint64_t hash_string(std::string_view text);
std::uint64_t hash_double(double value);

}  // namespace mash
