#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "wavearm/types.hpp"

namespace wavearm::rng {

/// splitmix64 step; used to derive well-mixed child seeds from a master seed
/// so that nearby seeds (0, 1, 2, ...) give uncorrelated streams.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Deterministic, platform-stable child seed: mixes a master seed with one or
/// more role/index words.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t word) {
  std::uint64_t s = master;
  (void)splitmix64(s);
  s ^= word + 0x9e3779b97f4a7c15ULL + (s << 6) + (s >> 2);
  (void)splitmix64(s);
  return s;
}

inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t w1, std::uint64_t w2) {
  return derive_seed(derive_seed(master, w1), w2);
}

/// Mersenne-twister stream with hand-rolled variate conversion. The standard
/// distributions (std::uniform_real_distribution etc.) are not guaranteed to
/// produce identical sequences across standard-library implementations, so the
/// bit-to-double mapping is done explicitly here.
class Stream {
public:
  explicit Stream(std::uint64_t seed) : gen_(seed) {}

  /// Uniform on [0, 1) with 53-bit resolution.
  double uniform() {
    return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal via Box-Muller (pairs cached).
  double gaussian() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * kPi * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

private:
  std::mt19937_64 gen_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

} // namespace wavearm::rng
