// Copyright 2026 The hmc Authors.
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

#ifndef HMC_HASH_HPP_
#define HMC_HASH_HPP_

#include <cstdint>
#include <cstdio>
#include <string>
#include <string_view>

namespace hmc {

// 64-bit FNV-1a; stable across platforms, used for token buckets, config
// fingerprints and checkpoint trailers.
class Fnv1a64 {
 public:
  static constexpr std::uint64_t kOffset = 0xcbf29ce484222325ULL;
  static constexpr std::uint64_t kPrime = 0x100000001b3ULL;

  void update(std::string_view bytes) {
    for (unsigned char c : bytes) {
      state_ ^= c;
      state_ *= kPrime;
    }
  }
  std::uint64_t digest() const { return state_; }

 private:
  std::uint64_t state_ = kOffset;
};

inline std::uint64_t HashBytes(std::string_view bytes) {
  Fnv1a64 h;
  h.update(bytes);
  return h.digest();
}

// Independent seed for one named component of a run (init, shuffle,
// sampler, ...), so components do not perturb each other's streams.
inline std::uint64_t DeriveSeed(std::uint64_t seed, std::string_view component) {
  Fnv1a64 h;
  char bytes[8];
  for (int i = 0; i < 8; ++i) bytes[i] = static_cast<char>((seed >> (8 * i)) & 0xff);
  h.update(std::string_view(bytes, 8));
  h.update(component);
  return h.digest();
}

inline std::string HexDigest(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace hmc

#endif  // HMC_HASH_HPP_
