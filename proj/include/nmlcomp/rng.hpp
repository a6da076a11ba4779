#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace nmlcomp {

// Counter-based generator: output i of stream (seed, stream_id) is a pure
// function of (seed, stream_id, i), so parallel or re-ordered consumers see
// identical draws.  Mixing is splitmix64's finalizer over a Weyl sequence.
class CounterRng {
public:
    CounterRng(std::uint64_t seed, std::uint64_t stream_id)
        : base_(mix(mix(seed + 0x9E3779B97F4A7C15ull) ^ mix(stream_id + 0xBF58476D1CE4E5B9ull))) {}

    std::uint64_t next_u64() {
        std::uint64_t z = base_ + (++counter_) * 0x9E3779B97F4A7C15ull;
        return mix(z);
    }

    // Uniform double in [0, 1) with 53 random bits.
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Index into a cumulative mass table (strictly increasing, back() ~ 1).
    std::size_t next_categorical(std::span<const double> cdf) {
        double u = next_double();
        std::size_t lo = 0, hi = cdf.size() - 1;
        while (lo < hi) {
            std::size_t mid = (lo + hi) / 2;
            if (u < cdf[mid])
                hi = mid;
            else
                lo = mid + 1;
        }
        return lo;
    }

    int next_sign() { return (next_u64() & 1ull) ? 1 : -1; }

private:
    static std::uint64_t mix(std::uint64_t z) {
        z ^= z >> 30;
        z *= 0xBF58476D1CE4E5B9ull;
        z ^= z >> 27;
        z *= 0x94D049BB133111EBull;
        z ^= z >> 31;
        return z;
    }

    std::uint64_t base_;
    std::uint64_t counter_ = 0;
};

inline std::vector<double> cumulative(std::span<const double> masses) {
    std::vector<double> cdf(masses.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < masses.size(); ++i) {
        acc += masses[i];
        cdf[i] = acc;
    }
    if (!cdf.empty()) cdf.back() = 1.0;
    return cdf;
}

}  // namespace nmlcomp
