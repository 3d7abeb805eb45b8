/*
 * Copyright 2026 The obeats Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Random sources with platform-independent output. std::mt19937_64 is fully
// specified by the standard, but the std distributions are not, so the
// conversions to floating point live here.

#ifndef OBEATS_RNG_H_
#define OBEATS_RNG_H_

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <random>

namespace obeats {

// SplitMix64 finalizer; a bijective 64-bit mix.
constexpr std::uint64_t Mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Derives a stream key from a seed and any number of counters.
inline std::uint64_t DeriveKey(std::uint64_t seed, std::initializer_list<std::uint64_t> parts) {
  std::uint64_t key = Mix64(seed);
  for (std::uint64_t p : parts) key = Mix64(key ^ Mix64(p + 0x632be59bd9b4e019ULL));
  return key;
}

inline double UnitFromBits(std::uint64_t bits) {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

// Counter-based generator: the i-th draw of stream (seed, stream) depends on
// nothing else, so workers can draw disjoint parts of a sequence in parallel
// and still agree with a sequential run.
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint64_t stream) : key_(DeriveKey(seed, {stream})) {}

  std::uint64_t Bits(std::uint64_t counter, std::uint64_t lane = 0) const {
    return Mix64(key_ ^ Mix64(counter * 0x2545f4914f6cdd1dULL + lane));
  }
  // Uniform in [0, 1).
  double Uniform(std::uint64_t counter, std::uint64_t lane = 0) const {
    return UnitFromBits(Bits(counter, lane));
  }

 private:
  std::uint64_t key_;
};

// Sequential generator for initialization, masking and shuffling.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(Mix64(seed)) {}

  std::uint64_t Bits() { return engine_(); }
  // Uniform in [0, 1).
  double Uniform() { return UnitFromBits(engine_()); }
  double Uniform(double lo, double hi) { return lo + (hi - lo) * Uniform(); }
  // Uniform integer in [0, n). n must be positive.
  std::uint64_t Below(std::uint64_t n) {
    // Lemire-style rejection keeps the result unbiased.
    const std::uint64_t limit = (~std::uint64_t{0}) - (~std::uint64_t{0}) % n;
    std::uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return x % n;
  }
  // Standard normal via Box-Muller.
  double Normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = Uniform();
    while (u1 <= 0.0) u1 = Uniform();
    const double u2 = Uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * 3.14159265358979323846 * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace obeats

#endif  // OBEATS_RNG_H_
