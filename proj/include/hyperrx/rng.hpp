#pragma once

#include <cmath>
#include <cstdint>

namespace hyperrx {

// Seeded generator with cheap stream derivation. Everything is built on
// splitmix64 so results are identical across platforms and compilers,
// which the end-to-end determinism contract relies on.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        state_ += 0x9e3779b97f4a7c15ULL;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // Uniform in [0,1) with 53 random bits.
    double uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) {
        return lo + (hi - lo) * uniform();
    }

    // Inclusive range. Modulo bias is irrelevant for the ranges used here.
    int uniform_int(int lo, int hi) {
        return lo + static_cast<int>(next_u64() % static_cast<std::uint64_t>(hi - lo + 1));
    }

    // Standard normal via Box-Muller. Uses two uniforms per draw; no cached
    // second sample so the draw sequence is a pure function of the state.
    double gaussian() {
        double u1 = 0.0;
        do {
            u1 = uniform();
        } while (u1 <= 0.0);
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }

    // Independent child stream. Mixing the tag tuple through splitmix keeps
    // per-block / per-purpose streams decorrelated while fully reproducible.
    Rng derive(std::uint64_t tag, std::uint64_t a = 0, std::uint64_t b = 0) const {
        std::uint64_t s = state_;
        s = mix(s ^ mix(tag));
        s = mix(s ^ mix(a + 0x632be59bd9b4e019ULL));
        s = mix(s ^ mix(b + 0x9e6c63d0876a9a47ULL));
        return Rng(s);
    }

private:
    static std::uint64_t mix(std::uint64_t z) {
        z = (z ^ (z >> 33)) * 0xff51afd7ed558ccdULL;
        z = (z ^ (z >> 33)) * 0xc4ceb9fe1a85ec53ULL;
        return z ^ (z >> 33);
    }

    std::uint64_t state_;
};

// Stream tags for the purposes a simulation draws randomness for.
namespace rng_stream {
inline constexpr std::uint64_t kPilotSymbols = 0x01;
inline constexpr std::uint64_t kInfoSymbols = 0x02;
inline constexpr std::uint64_t kPilotNoise = 0x03;
inline constexpr std::uint64_t kInfoNoise = 0x04;
inline constexpr std::uint64_t kInit = 0x05;
inline constexpr std::uint64_t kTraining = 0x06;
inline constexpr std::uint64_t kSchedule = 0x07;
inline constexpr std::uint64_t kProfile = 0x08;
}  // namespace rng_stream

}  // namespace hyperrx
