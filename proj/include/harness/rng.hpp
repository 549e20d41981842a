#pragma once

#include <cstdint>
#include <limits>
#include <random>
#include <vector>

namespace harness {

/// Draws a uniform integer in [0, n) by rejection sampling so the result
/// depends only on the mt19937_64 stream, not on any library distribution.
inline std::uint64_t bounded_uint(std::mt19937_64& rng, std::uint64_t n) {
    const std::uint64_t max = std::numeric_limits<std::uint64_t>::max();
    const std::uint64_t limit = max - max % n;
    std::uint64_t v = rng();
    while (v >= limit) v = rng();
    return v % n;
}

/// First min(k, count) positions of a seeded Fisher-Yates shuffle over
/// [0, count). Returned in draw order; same (count, k, seed) gives the same
/// indices. Callers that consider k > count an error must check first.
inline std::vector<std::size_t> draw_without_replacement(std::size_t count, std::size_t k,
                                                         std::uint64_t seed) {
    std::vector<std::size_t> indices(count);
    for (std::size_t i = 0; i < count; ++i) indices[i] = i;
    std::mt19937_64 rng(seed);
    if (k > count) k = count;
    for (std::size_t i = 0; i < k; ++i) {
        std::size_t j = i + static_cast<std::size_t>(bounded_uint(rng, count - i));
        std::swap(indices[i], indices[j]);
    }
    indices.resize(k);
    return indices;
}

}  // namespace harness
