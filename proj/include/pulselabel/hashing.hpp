#pragma once

#include <cstdint>
#include <string_view>

namespace pulselabel {

constexpr std::uint64_t fnv1a64(std::string_view s,
                                std::uint64_t h = 0xcbf29ce484222325ULL) noexcept {
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Uniform draw in [0, 1) keyed by (seed, key); the same pair always yields
// the same value, independent of call order.
inline double keyed_uniform(std::uint64_t seed, std::string_view key) noexcept {
    const std::uint64_t h = splitmix64(fnv1a64(key) ^ splitmix64(seed));
    return static_cast<double>(h >> 11) * 0x1.0p-53;
}

}  // namespace pulselabel
