// Copyright 2026 The Prefchat Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef PREFCHAT_RNG_H_
#define PREFCHAT_RNG_H_

#include <cstdint>
#include <initializer_list>
#include <random>
#include <string_view>

namespace prefchat {

inline uint64_t SplitMix64(uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// FNV-1a; stable across platforms, used to key substreams by string ids.
inline uint64_t HashString(std::string_view s) {
  uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

// Derives an independent substream seed from an ordered key tuple.
inline uint64_t MixSeed(std::initializer_list<uint64_t> keys) {
  uint64_t h = 0x6A09E667F3BCC908ULL;
  for (uint64_t k : keys) h = SplitMix64(h ^ SplitMix64(k));
  return h;
}

using Rng = std::mt19937_64;

inline Rng MakeRng(std::initializer_list<uint64_t> keys) {
  return Rng(MixSeed(keys));
}

}  // namespace prefchat

#endif  // PREFCHAT_RNG_H_
