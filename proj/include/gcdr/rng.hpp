#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <utility>

#include "gcdr/errors.hpp"

namespace gcdr {

// Deterministic random source. std::mt19937's raw output sequence is pinned by
// the standard, and all distribution transforms are written out by hand here,
// so streams are bit-identical across platforms and standard libraries.
class Rng {
public:
    explicit Rng(std::uint64_t seed) {
        material_ = mix64(seed);
        gen_.seed(static_cast<std::uint32_t>(material_ & 0xffffffffull));
    }

    std::uint32_t next_u32() { return gen_(); }

    // Uniform double in [0, 1) with 32 bits of resolution.
    double uniform() { return next_u32() * (1.0 / 4294967296.0); }

    // Uniform float in [lo, hi).
    float uniform_float(float lo, float hi) {
        return lo + static_cast<float>(uniform()) * (hi - lo);
    }

    // Uniform integer in [lo, hi], inclusive; unbiased via rejection.
    int uniform_int(int lo, int hi) {
        if (lo > hi) throw RangeError("uniform_int: empty range");
        const std::uint64_t span = static_cast<std::uint64_t>(hi) - lo + 1;
        const std::uint64_t limit = (1ull << 32) - ((1ull << 32) % span);
        std::uint64_t r;
        do {
            r = next_u32();
        } while (r >= limit);
        return lo + static_cast<int>(r % span);
    }

    // Standard normal via Box-Muller; second value of each pair is cached.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1, u2;
        do {
            u1 = uniform();
        } while (u1 <= 0.0);
        u2 = uniform();
        const double radius = std::sqrt(-2.0 * std::log(u1));
        const double angle = 2.0 * 3.14159265358979323846 * u2;
        spare_ = radius * std::sin(angle);
        has_spare_ = true;
        return radius * std::cos(angle);
    }

    // Independent child stream; distinct stream ids give unrelated sequences.
    Rng fork(std::uint64_t stream) const {
        return Rng(material_ + 0x9e3779b97f4a7c15ull * (stream + 1));
    }

    // Fisher-Yates shuffle.
    template <typename Vec>
    void shuffle(Vec& v) {
        for (int i = static_cast<int>(v.size()) - 1; i > 0; --i) {
            const int j = uniform_int(0, i);
            std::swap(v[static_cast<std::size_t>(i)], v[static_cast<std::size_t>(j)]);
        }
    }

private:
    static std::uint64_t mix64(std::uint64_t x) {
        // splitmix64 finalizer
        x += 0x9e3779b97f4a7c15ull;
        x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
        x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
        return x ^ (x >> 31);
    }

    std::mt19937 gen_;
    std::uint64_t material_ = 0;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace gcdr
