#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace cqforge {

/// Uniform draw from [0, bound) via rejection sampling. std::uniform_int_distribution
/// is implementation-defined, so seeded runs would not reproduce across stdlibs.
inline std::uint64_t bounded_uniform(std::mt19937_64& rng, std::uint64_t bound) {
    // bound == 0 would loop forever; treat as a single-outcome draw.
    if (bound <= 1) return 0;
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    std::uint64_t x;
    do {
        x = rng();
    } while (x >= limit);
    return x % bound;
}

/// First `take` positions of a Fisher-Yates shuffle of 0..n-1.
inline std::vector<std::size_t> shuffled_prefix(std::mt19937_64& rng,
                                                std::size_t n, std::size_t take) {
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    if (take > n) take = n;
    for (std::size_t i = 0; i < take; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(
            bounded_uniform(rng, static_cast<std::uint64_t>(n - i)));
        std::swap(idx[i], idx[j]);
    }
    idx.resize(take);
    return idx;
}

}  // namespace cqforge
