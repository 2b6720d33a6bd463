// Reproducible random streams.
//
// Engine: 64-bit Mersenne Twister (boost::random::mt19937_64), seeded through
// splitmix64 so that nearby user seeds give unrelated streams. Normals come
// from Boost's ziggurat normal_distribution, whose output is identical on
// every platform (unlike std::normal_distribution).
#pragma once

#include <cstdint>
#include <string_view>

#include <boost/random/mersenne_twister.hpp>
#include <boost/random/normal_distribution.hpp>

namespace optolev {

inline constexpr std::string_view rng_algorithm = "mt19937_64/splitmix64-seeded/boost-ziggurat-normal";

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Seed of the @p stream-th independent sub-stream of @p master.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) noexcept {
    return splitmix64(splitmix64(master) ^ splitmix64(stream + 0x632be59bd9b4e019ULL));
}

class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(splitmix64(seed)) {}

    double normal() { return normal_(engine_); }
    std::uint64_t bits() { return engine_(); }

private:
    boost::random::mt19937_64 engine_;
    boost::random::normal_distribution<double> normal_{0.0, 1.0};
};

} // namespace optolev
