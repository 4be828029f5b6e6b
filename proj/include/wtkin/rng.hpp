#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

namespace wtkin {

// Counter-based randomness: every (seed, sample, draw) triple maps to an
// independent uniform through a stateless hash.  Samples can therefore be
// generated in any order (or in parallel) and still yield the exact same
// stream, which is what makes the Monte-Carlo estimates reproducible
// across thread counts.

inline std::uint64_t splitmix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

struct CounterRng {
    std::uint64_t seed = 0;

    std::uint64_t bits(std::uint64_t sample, std::uint64_t draw) const {
        std::uint64_t h = splitmix64(seed ^ (sample * 0xd1342543de82ef95ull));
        return splitmix64(h ^ (draw * 0xaf251af3b0f025b5ull));
    }

    // uniform in (0,1); never returns 0 so log() is safe
    double uniform(std::uint64_t sample, std::uint64_t draw) const {
        return (static_cast<double>(bits(sample, draw) >> 11) + 0.5) *
               0x1.0p-53;
    }

    // standard normal via Box-Muller; consumes draws (2*pair, 2*pair+1)
    double normal(std::uint64_t sample, std::uint64_t pair,
                  bool second = false) const {
        const double u1 = uniform(sample, 2 * pair);
        const double u2 = uniform(sample, 2 * pair + 1);
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 6.283185307179586476925286766559 * u2;
        return second ? r * std::sin(a) : r * std::cos(a);
    }
};

// Fixed-shape pairwise reduction.  The tree depends only on the length, not
// on how the entries were produced, so sums are identical for any thread
// count as long as each entry is itself deterministic.
inline double pairwise_sum(const double* a, std::size_t n) {
    if (n <= 8) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += a[i];
        return s;
    }
    const std::size_t half = n / 2;
    return pairwise_sum(a, half) + pairwise_sum(a + half, n - half);
}

inline double pairwise_sum(const std::vector<double>& a) {
    return pairwise_sum(a.data(), a.size());
}

}  // namespace wtkin
