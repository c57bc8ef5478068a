#pragma once
// Reproducible random streams.
//
// Engine: xoshiro256** (Blackman & Vigna, 2018), seeded through SplitMix64.
// Streams are derived by hashing (base seed, tag, index) with SplitMix64, so a
// replicate's numbers never depend on how many other replicates ran before it
// or on which thread ran it. Distributions come from Boost.Random, whose
// algorithms are fixed across platforms (unlike <random>'s distributions).

#include <array>
#include <cstdint>
#include <limits>
#include <string_view>

#include <boost/random/bernoulli_distribution.hpp>
#include <boost/random/normal_distribution.hpp>
#include <boost/random/uniform_01.hpp>
#include <boost/random/uniform_int_distribution.hpp>

namespace notesim {

constexpr std::uint64_t splitmix64(std::uint64_t& state) noexcept {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

// FNV-1a, used to turn stream tags into integers.
constexpr std::uint64_t hash_tag(std::string_view tag) noexcept {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (char c : tag) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001B3ULL;
    }
    return h;
}

// Child seed for (parent, tag, index). Distinct tags/indices give
// statistically independent streams.
constexpr std::uint64_t derive_seed(std::uint64_t parent, std::string_view tag,
                                    std::uint64_t index = 0) noexcept {
    std::uint64_t s = parent ^ hash_tag(tag);
    std::uint64_t a = splitmix64(s);
    s ^= index * 0xD1B54A32D192ED03ULL;
    std::uint64_t b = splitmix64(s);
    return a ^ (b << 1);
}

class Xoshiro256 {
public:
    using result_type = std::uint64_t;

    explicit Xoshiro256(std::uint64_t seed = 0) noexcept { reseed(seed); }

    void reseed(std::uint64_t seed) noexcept {
        std::uint64_t sm = seed;
        for (auto& w : s_) w = splitmix64(sm);
    }

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept {
        return std::numeric_limits<result_type>::max();
    }

    result_type operator()() noexcept {
        const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    bool operator==(const Xoshiro256&) const = default;

private:
    static constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept {
        return (x << k) | (x >> (64 - k));
    }
    std::array<std::uint64_t, 4> s_{};
};

// Uniform double in [0, 1) with 53 random bits.
inline double uniform01(Xoshiro256& rng) noexcept {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double normal(Xoshiro256& rng, double mean, double sd) {
    if (sd == 0.0) return mean;
    boost::random::normal_distribution<double> dist(mean, sd);
    return dist(rng);
}

inline bool bernoulli(Xoshiro256& rng, double p) {
    if (p <= 0.0) return false;
    if (p >= 1.0) return true;
    return uniform01(rng) < p;
}

// Uniform integer in [0, n).
inline std::uint64_t uniform_index(Xoshiro256& rng, std::uint64_t n) {
    boost::random::uniform_int_distribution<std::uint64_t> dist(0, n - 1);
    return dist(rng);
}

inline Xoshiro256 make_stream(std::uint64_t parent, std::string_view tag,
                              std::uint64_t index = 0) {
    return Xoshiro256(derive_seed(parent, tag, index));
}

}  // namespace notesim
