#pragma once

#include <cstdint>
#include <numeric>
#include <random>
#include <string>
#include <vector>

namespace maxshapley {

// std::mt19937_64 output is fully specified by the standard; the helpers here
// avoid std::uniform_int_distribution / std::shuffle, whose results are
// implementation-defined, so seeded runs reproduce across toolchains.

// Unbiased draw from [0, n) via rejection sampling.
inline std::uint64_t bounded_draw(std::mt19937_64& rng, std::uint64_t n) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do {
        x = rng();
    } while (x >= limit);
    return x % n;
}

// In-place Fisher-Yates shuffle.
template <typename T>
void deterministic_shuffle(std::vector<T>& items, std::mt19937_64& rng) {
    for (std::size_t i = items.size(); i > 1; --i) {
        std::size_t j = static_cast<std::size_t>(bounded_draw(rng, i));
        std::swap(items[i - 1], items[j]);
    }
}

inline std::vector<int> random_permutation(int m, std::mt19937_64& rng) {
    std::vector<int> perm(static_cast<std::size_t>(m));
    std::iota(perm.begin(), perm.end(), 0);
    deterministic_shuffle(perm, rng);
    return perm;
}

// FNV-1a, used for transcript keys and derived seeds.
inline std::uint64_t fnv1a64(const std::string& data, std::uint64_t seed = 14695981039346656037ULL) {
    std::uint64_t h = seed;
    for (unsigned char c : data) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

inline std::uint64_t combine_seed(std::uint64_t seed, const std::string& tag) {
    return fnv1a64(tag, seed ^ 0x9e3779b97f4a7c15ULL);
}

}  // namespace maxshapley
