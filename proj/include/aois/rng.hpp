#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <numbers>
#include <random>

#include "aois/types.hpp"

namespace aois {

/// splitmix64 finalizer; used to derive independent stream seeds.
inline uint64_t mix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Deterministic seed for a named substream, e.g.
/// derive_seed(master, {kChannelTag, block, user}).
inline uint64_t derive_seed(uint64_t base, std::initializer_list<uint64_t> tags) {
    uint64_t s = mix64(base);
    for (uint64_t t : tags) s = mix64(s ^ t);
    return s;
}

/// Stream tags for derive_seed. Fixed values keep traces reproducible
/// across builds.
enum StreamTag : uint64_t {
    kChannelTag = 0x11,
    kSourceTag = 0x22,
    kModelTag = 0x33,
    kSlotNoiseTag = 0x44,
    kRxNoiseTag = 0x55,
    kShadowTag = 0x66,
};

/// mt19937_64 wrapped with Box-Muller style transforms so that every
/// draw is a pure function of the engine state (no cached spare value,
/// identical sequences on every platform).
class Rng {
  public:
    explicit Rng(uint64_t seed) : eng_(seed) {}

    uint64_t next_u64() { return eng_(); }

    /// Uniform on [0, 1).
    double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

    /// Uniform on (0, 1]; safe as a log() argument.
    double uniform_pos() { return static_cast<double>((eng_() >> 11) + 1) * 0x1.0p-53; }

    /// Standard normal N(0, 1).
    double gaussian() {
        const double r = std::sqrt(-2.0 * std::log(uniform_pos()));
        return r * std::cos(2.0 * std::numbers::pi * uniform());
    }

    /// Circularly symmetric complex Gaussian CN(0, 1):
    /// amplitude^2 ~ Exp(1), phase uniform.
    cplx cgaussian() {
        const double r = std::sqrt(-std::log(uniform_pos()));
        const double phi = 2.0 * std::numbers::pi * uniform();
        return {r * std::cos(phi), r * std::sin(phi)};
    }

  private:
    std::mt19937_64 eng_;
};

}  // namespace aois
