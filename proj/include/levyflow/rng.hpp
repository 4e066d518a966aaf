// Deterministic random streams with splittable substreams.
//
// All distribution transforms are implemented explicitly (instead of the
// std::*_distribution adaptors) so that a given seed produces the same
// draw sequence on every standard library implementation.
#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace levyflow {

// SplitMix64 finalizer, used to derive well-separated child seeds.
inline std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

inline std::uint64_t mix64(std::uint64_t a, std::uint64_t b) {
    return mix64(mix64(a) ^ (0x9e3779b97f4a7c15ull + b));
}

class Rng {
  public:
    explicit Rng(std::uint64_t seed) : seed_(seed), eng_(mix64(seed)) {}

    std::uint64_t seed() const { return seed_; }

    // Independent child stream identified by (stream of this rng, key).
    Rng substream(std::uint64_t key) const { return Rng(mix64(seed_, key)); }
    Rng substream(std::uint64_t key1, std::uint64_t key2) const {
        return Rng(mix64(mix64(seed_, key1), key2));
    }

    std::uint64_t next_u64() { return eng_(); }

    // Uniform on [0, 1), 53-bit resolution.
    double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

    // Uniform on (0, 1); never returns 0, safe under log().
    double uniform_open() {
        return (static_cast<double>(eng_() >> 11) + 0.5) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    double exponential() { return -std::log(uniform_open()); }

    // Standard normal via Box-Muller, spare value cached.
    double gaussian() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double u = uniform_open();
        const double v = uniform();
        const double r = std::sqrt(-2.0 * std::log(u));
        const double a = 6.283185307179586477 * v;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    // Fisher-Yates shuffle of an index vector.
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            const std::size_t j = static_cast<std::size_t>(uniform() * static_cast<double>(i));
            std::swap(v[i - 1], v[j < i ? j : i - 1]);
        }
    }

  private:
    std::uint64_t seed_;
    std::mt19937_64 eng_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace levyflow
