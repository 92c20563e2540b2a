#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>

namespace itolat {

/// Mixes 64-bit state; the standard splitmix64 step.
inline std::uint64_t splitmix64_next(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

/// Deterministic random stream addressed by (seed, stream id).
///
/// Streams with distinct ids are independent for practical purposes and their
/// output depends only on (seed, id, draw index), never on scheduling. All
/// samplers are implemented on top of raw mt19937_64 words so results do not
/// depend on the standard library's distribution internals.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t s = seed ^ (0x6a09e667f3bcc909ull + stream * 0x9e3779b97f4a7c15ull);
    std::seed_seq seq{splitmix64_next(s), splitmix64_next(s), splitmix64_next(s),
                      splitmix64_next(s)};
    engine_.seed(seq);
  }

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on [0,1), 53-bit resolution.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform on (0,1]; safe as a log argument.
  double uniform_open() { return static_cast<double>((engine_() >> 11) + 1) * 0x1.0p-53; }

  double uniform_range(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Integer uniform on [lo, hi], Lemire-style rejection to keep it unbiased.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
    if (hi < lo) throw std::invalid_argument("uniform_int: empty range");
    const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
    if (span == 0) return static_cast<std::int64_t>(engine_());  // full 64-bit range
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - span + 1;
    const std::uint64_t reject_below = limit % span;
    std::uint64_t draw;
    do {
      draw = engine_();
    } while (draw < reject_below);
    return lo + static_cast<std::int64_t>(draw % span);
  }

  /// Standard normal via Box-Muller; two uniforms per draw, no cached spare.
  double normal() {
    const double u1 = uniform_open();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
  }

  /// Poisson draw by Knuth's product method, chunked so exp(-lambda) never underflows.
  std::uint64_t poisson(double lambda) {
    if (!(lambda >= 0.0)) throw std::invalid_argument("poisson: lambda must be >= 0");
    std::uint64_t total = 0;
    while (lambda > 0.0) {
      const double chunk = lambda > 16.0 ? 16.0 : lambda;
      lambda -= chunk;
      const double floor_p = std::exp(-chunk);
      double p = 1.0;
      std::uint64_t k = 0;
      do {
        ++k;
        p *= uniform_open();
      } while (p > floor_p);
      total += k - 1;
    }
    return total;
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace itolat
