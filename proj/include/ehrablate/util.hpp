// Copyright 2026 The ehrablate Authors
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

#ifndef EHRABLATE_UTIL_HPP_
#define EHRABLATE_UTIL_HPP_

#include <cstdint>
#include <cstdio>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace ehrablate {

inline constexpr const char* kToolName = "ehrablate";
inline constexpr const char* kToolVersion = "0.1.0";

// Fatal, user-facing error. The CLI turns these into a one-line
// "ehrablate: error: ..." message and a nonzero exit code.
class FatalError : public std::runtime_error {
 public:
  explicit FatalError(const std::string& msg) : std::runtime_error(msg) {}
};

[[noreturn]] inline void fail(const std::string& msg) { throw FatalError(msg); }

// ---------------------------------------------------------------------------
// Hashing and seed derivation
// ---------------------------------------------------------------------------

inline constexpr uint64_t kFnvOffset = 0xcbf29ce484222325ull;
inline constexpr uint64_t kFnvPrime = 0x100000001b3ull;

inline uint64_t fnv1a64(std::string_view data, uint64_t h = kFnvOffset) {
  for (unsigned char c : data) {
    h ^= c;
    h *= kFnvPrime;
  }
  return h;
}

inline uint64_t fnv1a64_u64(uint64_t v, uint64_t h = kFnvOffset) {
  for (int i = 0; i < 8; ++i) {
    h ^= (v >> (8 * i)) & 0xff;
    h *= kFnvPrime;
  }
  return h;
}

inline uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

// Stable seed derivation: one master seed per run, every consumer gets its
// own stream keyed by a tag (and optional index) so adding or reordering
// stages never perturbs the draws of another stage.
inline uint64_t derive_seed(uint64_t base, std::string_view tag) {
  return splitmix64(fnv1a64(tag, fnv1a64_u64(base)));
}

inline uint64_t derive_seed(uint64_t base, std::string_view tag, uint64_t index) {
  return splitmix64(fnv1a64_u64(index, fnv1a64(tag, fnv1a64_u64(base))));
}

// ---------------------------------------------------------------------------
// Deterministic RNG
//
// Wraps mt19937_64 but maps raw draws to doubles/indices by hand; the
// standard distributions are not bit-stable across library versions and all
// published numbers must reproduce from the seed alone.
// ---------------------------------------------------------------------------

class Rng {
 public:
  explicit Rng(uint64_t seed) : engine_(seed) {}

  uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1), 53-bit resolution.
  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  bool bernoulli(double p) { return uniform01() < p; }

  // Uniform index in [0, n) via 128-bit multiply-shift.
  size_t uniform_index(size_t n) {
    return static_cast<size_t>(
        (static_cast<unsigned __int128>(engine_()) * n) >> 64);
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      size_t j = uniform_index(i);
      std::swap(v[i - 1], v[j]);
    }
  }

  // First k elements of a seeded permutation of {0, ..., n-1}.
  std::vector<uint32_t> sample_without_replacement(size_t n, size_t k);

 private:
  std::mt19937_64 engine_;
};

// ---------------------------------------------------------------------------
// Text helpers
// ---------------------------------------------------------------------------

std::vector<std::string_view> split(std::string_view line, char delim);
std::string_view trim(std::string_view s);

// Strict numeric parsing; entire token must be consumed.
bool parse_double(std::string_view token, double& out);
bool parse_u64(std::string_view token, uint64_t& out);

// Shortest %g form that parses back to the same bits, capped at the given
// number of significant digits.
std::string format_double(double v, int significant_digits = 17);
std::string format_fixed(double v, int decimals);

}  // namespace ehrablate

#endif  // EHRABLATE_UTIL_HPP_
