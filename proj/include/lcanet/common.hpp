// Copyright 2026 The lcanet Authors
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

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace lcanet {

/// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Tensor shapes or dimensions that do not line up.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Malformed or missing external data (WAV files, dataset layout, checkpoints).
class DataError : public Error {
 public:
  using Error::Error;
};

/// Non-finite values or other numeric breakdowns.
class NumericError : public Error {
 public:
  using Error::Error;
};

// ---------------------------------------------------------------------------
// Hashing

inline uint64_t fnv1a64(const void* data, size_t n,
                        uint64_t h = 14695981039346656037ull) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 1099511628211ull;
  }
  return h;
}

inline uint64_t fnv1a64(const std::string& s,
                        uint64_t h = 14695981039346656037ull) {
  return fnv1a64(s.data(), s.size(), h);
}

inline uint64_t hash_combine(uint64_t a, uint64_t b) {
  return fnv1a64(&b, sizeof(b), fnv1a64(&a, sizeof(a)));
}

// ---------------------------------------------------------------------------
// Deterministic random source
//
// All randomness in the library flows through this wrapper. mt19937_64 has a
// standardized sequence, and the samplers below avoid std::*_distribution,
// whose output is implementation-defined.
class Rng {
 public:
  explicit Rng(uint64_t seed) : eng_(seed) {}

  uint64_t next_u64() { return eng_(); }

  /// Uniform in [0, 1).
  double uniform() {
    return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal via Box-Muller.
  double normal() {
    double u1 = uniform();
    double u2 = uniform();
    if (u1 < 1e-300) u1 = 1e-300;
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * 3.14159265358979323846 * u2);
  }

  /// Uniform integer in [0, n).
  int uniform_int(int n) {
    return static_cast<int>(next_u64() % static_cast<uint64_t>(n));
  }

 private:
  std::mt19937_64 eng_;
};

}  // namespace lcanet
