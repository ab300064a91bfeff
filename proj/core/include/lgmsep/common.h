// core/include/lgmsep/common.h

// Copyright 2026  LGMSep Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef LGMSEP_COMMON_H_
#define LGMSEP_COMMON_H_

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace lgmsep {

using Cplx = std::complex<double>;

inline constexpr double kPi = 3.141592653589793238462643383279502884;

// All parameter fields are floored at this value to keep divisions finite.
inline constexpr double kParamFloor = 1e-12;

class Error : public std::runtime_error {
 public:
  explicit Error(const std::string &msg) : std::runtime_error(msg) {}
};

class InvalidInputError : public Error {
 public:
  explicit InvalidInputError(const std::string &msg) : Error(msg) {}
};

class IllConditionedError : public Error {
 public:
  explicit IllConditionedError(const std::string &msg) : Error(msg) {}
};

class SolverDivergenceError : public Error {
 public:
  explicit SolverDivergenceError(const std::string &msg) : Error(msg) {}
};

class TrainingDivergenceError : public Error {
 public:
  explicit TrainingDivergenceError(const std::string &msg) : Error(msg) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string &msg) : Error(msg) {}
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string &msg) : Error(msg) {}
};

// Always-on invariant check; violations indicate a bug, not bad user input.
#define LGMSEP_ASSERT(cond, msg)                                            \
  do {                                                                      \
    if (!(cond)) {                                                          \
      throw ::lgmsep::Error(std::string("assertion failed: ") + (msg) +    \
                            " at " + __FILE__ + ":" +                       \
                            std::to_string(__LINE__));                      \
    }                                                                       \
  } while (0)

// Deterministic RNG. Wraps mt19937_64 with explicitly coded uniform /
// Box-Muller transforms so every draw sequence is pinned by this code,
// independent of the standard library's distribution internals.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t RawU64() { return engine_(); }

  // Uniform in [0, 1).
  double Uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double Uniform(double lo, double hi) { return lo + (hi - lo) * Uniform(); }

  int UniformInt(int n) {  // in [0, n)
    return static_cast<int>(engine_() % static_cast<std::uint64_t>(n));
  }

  // Standard normal via Box-Muller; caches the second draw.
  double Normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = 0.0;
    while (u1 <= 0.0) u1 = Uniform();
    double u2 = Uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    spare_ = r * std::sin(2.0 * kPi * u2);
    have_spare_ = true;
    return r * std::cos(2.0 * kPi * u2);
  }

  // Circular complex normal with E|z|^2 = 1.
  Cplx ComplexNormal() {
    const double s = std::sqrt(0.5);
    return Cplx(s * Normal(), s * Normal());
  }

 private:
  std::mt19937_64 engine_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

// Derives an independent stream from (seed, stream id); used to keep
// per-epoch / per-source randomness reproducible regardless of call order.
inline std::uint64_t DeriveSeed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t x = seed ^ (0x9e3779b97f4a7c15ULL + (stream << 1));
  x ^= x >> 30;
  x *= 0xbf58476d1ce4e5b9ULL;
  x ^= x >> 27;
  x *= 0x94d049bb133111ebULL;
  x ^= x >> 31;
  return x;
}

// Runs fn(lo, hi) over a contiguous partition of [0, n). Chunk boundaries
// depend only on (n, workers), so writes to disjoint per-index slots are
// deterministic. Reductions must be done by the caller in index order.
inline void ParallelFor(std::size_t n, int workers,
                        const std::function<void(std::size_t, std::size_t)> &fn) {
  if (workers <= 1 || n < 2) {
    fn(0, n);
    return;
  }
  std::size_t w = std::min<std::size_t>(workers, n);
  std::vector<std::thread> threads;
  threads.reserve(w);
  std::size_t chunk = (n + w - 1) / w;
  for (std::size_t t = 0; t < w; ++t) {
    std::size_t lo = t * chunk;
    std::size_t hi = std::min(n, lo + chunk);
    if (lo >= hi) break;
    threads.emplace_back([&fn, lo, hi] { fn(lo, hi); });
  }
  for (auto &th : threads) th.join();
}

}  // namespace lgmsep

#endif  // LGMSEP_COMMON_H_
