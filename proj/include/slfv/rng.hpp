#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>

namespace slfv {

// Labeled, splittable random streams.  A SeedKey identifies a stream; child()
// derives an independent sub-stream from a label.  All randomness in the
// project flows from one master seed through such keys, so any component can
// be replayed in isolation and results never depend on thread scheduling.
class SeedKey {
  public:
    SeedKey() = default;
    explicit SeedKey(std::uint64_t seed) : state_(mix(seed ^ 0x6A09E667F3BCC909ULL)) {}

    [[nodiscard]] SeedKey child(std::uint64_t label) const {
        SeedKey k;
        k.state_ = mix(state_ + 0x9E3779B97F4A7C15ULL * (label + 1));
        return k;
    }

    [[nodiscard]] SeedKey child(std::string_view label) const { return child(fnv1a(label)); }

    [[nodiscard]] std::uint64_t raw() const { return state_; }

    static SeedKey from_raw(std::uint64_t raw) {
        SeedKey k;
        k.state_ = raw;
        return k;
    }

    static std::uint64_t mix(std::uint64_t z) {
        z ^= z >> 30;
        z *= 0xBF58476D1CE4E5B9ULL;
        z ^= z >> 27;
        z *= 0x94D049BB133111EBULL;
        z ^= z >> 31;
        return z;
    }

  private:
    static std::uint64_t fnv1a(std::string_view s) {
        std::uint64_t h = 0xCBF29CE484222325ULL;
        for (char c : s) {
            h ^= static_cast<unsigned char>(c);
            h *= 0x100000001B3ULL;
        }
        return h;
    }

    std::uint64_t state_ = 0x853C49E6748FEA9BULL;
};

// splitmix64 stream (Steele/Lea/Flood; Vigna's fixed-increment variant).
// Distribution sampling is implemented here rather than with <random> so
// that replay is bit-identical across standard-library versions.
class Rng {
  public:
    Rng() : Rng(SeedKey{0}) {}
    explicit Rng(SeedKey key) : state_(key.raw()) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    // Uniform on [0,1), 53-bit resolution.
    double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    // Uniform on (0,1]; safe as a log() argument.
    double uniform01_pos() { return 1.0 - uniform01(); }

    double exponential(double rate) { return -std::log(uniform01_pos()) / rate; }

    bool bernoulli(double p) { return uniform01() < p; }

    double normal() {
        // Box-Muller, cosine branch only: one value per call keeps the
        // stream layout independent of call parity.
        const double u1 = uniform01_pos();
        const double u2 = uniform01();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925287 * u2);
    }

    std::uint64_t poisson(double mean);
    double gamma(double shape);
    double beta(double a, double b);

    // Index in [0,n) proportional to weights[0..n).
    std::size_t discrete(const double* weights, std::size_t n);

  private:
    std::uint64_t state_;
};

} // namespace slfv
