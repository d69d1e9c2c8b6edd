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

#include <algorithm>
#include <array>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>

#include "mash/error.hpp"
#include "mash/net.hpp"

namespace mash {
namespace {

constexpr std::array<char, 4> kMagic = {'M', 'S', 'H', 'W'};

// Config block: in_channels, base_width, depth, reduced, scalar bytes as
// u32; leaky_slope as f64; parameter count as u64.
struct Header {
  std::uint32_t in_channels;
  std::uint32_t base_width;
  std::uint32_t depth;
  std::uint32_t reduced;
  std::uint32_t scalar_bytes;
  double leaky_slope;
  std::uint64_t count;
};

template <typename V>
void put(std::vector<char>& out, const V& v) {
  const char* p = reinterpret_cast<const char*>(&v);
  out.insert(out.end(), p, p + sizeof(V));
}

template <typename V>
V take(const std::vector<char>& in, std::size_t& pos) {
  if (pos + sizeof(V) > in.size()) throw FormatError("truncated checkpoint header");
  V v;
  std::memcpy(&v, in.data() + pos, sizeof(V));
  pos += sizeof(V);
  return v;
}

}  // namespace

template <typename T>
void save_checkpoint(const DenoiserModel<T>& model, const std::filesystem::path& path) {
  std::vector<char> out(kMagic.begin(), kMagic.end());
  const NetConfig& c = model.config;
  put(out, static_cast<std::uint32_t>(c.in_channels));
  put(out, static_cast<std::uint32_t>(c.base_width));
  put(out, static_cast<std::uint32_t>(c.depth));
  put(out, static_cast<std::uint32_t>(c.reduced ? 1 : 0));
  put(out, static_cast<std::uint32_t>(sizeof(T)));
  put(out, c.leaky_slope);
  put(out, static_cast<std::uint64_t>(model.parameters.size()));
  const char* p = reinterpret_cast<const char*>(model.parameters.data());
  out.insert(out.end(), p, p + model.parameters.size() * sizeof(T));
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot open " + path.string() + " for writing");
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw IoError("write failure on " + path.string());
}

template <typename T>
DenoiserModel<T> load_checkpoint(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path.string());
  const std::vector<char> in((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  if (in.size() < kMagic.size() || !std::equal(kMagic.begin(), kMagic.end(), in.begin())) {
    throw FormatError("not a checkpoint: " + path.string());
  }
  std::size_t pos = kMagic.size();
  Header h{};
  h.in_channels = take<std::uint32_t>(in, pos);
  h.base_width = take<std::uint32_t>(in, pos);
  h.depth = take<std::uint32_t>(in, pos);
  h.reduced = take<std::uint32_t>(in, pos);
  h.scalar_bytes = take<std::uint32_t>(in, pos);
  h.leaky_slope = take<double>(in, pos);
  h.count = take<std::uint64_t>(in, pos);
  if (h.scalar_bytes != sizeof(T)) throw FormatError("checkpoint scalar width mismatch");

  NetConfig config;
  config.in_channels = static_cast<int>(h.in_channels);
  config.base_width = static_cast<int>(h.base_width);
  config.depth = static_cast<int>(h.depth);
  config.reduced = h.reduced != 0;
  config.leaky_slope = h.leaky_slope;
  DenoiserModel<T> model = zero_model<T>(config);
  if (model.parameters.size() != h.count || in.size() - pos != h.count * sizeof(T)) {
    throw FormatError("checkpoint parameter block does not match its config");
  }
  std::memcpy(model.parameters.data(), in.data() + pos, h.count * sizeof(T));
  return model;
}

template void save_checkpoint<float>(const DenoiserModel<float>&, const std::filesystem::path&);
template void save_checkpoint<double>(const DenoiserModel<double>&, const std::filesystem::path&);
template DenoiserModel<float> load_checkpoint<float>(const std::filesystem::path&);
template DenoiserModel<double> load_checkpoint<double>(const std::filesystem::path&);

}  // namespace mash
