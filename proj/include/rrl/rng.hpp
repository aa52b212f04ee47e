#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>
#include <vector>

namespace rrl {

// SplitMix64 (Steele, Lea & Flood). Every random draw in the toolkit
// flows through this engine, so each artifact is a pure function of the
// seeds recorded in its run manifest.
//
// Sequence: state_{n+1} = state_n + 0x9E3779B97F4A7C15; the n-th output
// is the 64-bit finalizer of state_n. Uniform doubles take the top 53
// bits, so they involve no platform-dependent arithmetic.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    // Uniform in [0, 1), 53-bit resolution.
    double next_double() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    // Uniform in (0, 1]; safe as a log() argument.
    double next_double_pos() {
        return static_cast<double>((next() >> 11) + 1) * 0x1.0p-53;
    }

    // Uniform integer in [0, n); Lemire multiply-shift.
    std::uint64_t next_below(std::uint64_t n) {
        return static_cast<std::uint64_t>(
            (static_cast<unsigned __int128>(next()) * n) >> 64);
    }

    // Standard normal via Box-Muller; the second deviate of each pair is
    // cached. Used only for parameter initialization, never for data
    // generation (the libm calls make it less portable than the uniform
    // draws).
    double next_normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = next_double_pos();
        double u2 = next_double();
        double r = std::sqrt(-2.0 * std::log(u1));
        double theta = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(theta);
        has_spare_ = true;
        return r * std::cos(theta);
    }

private:
    std::uint64_t state_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

// Seed for an independent stream: the `stream`-th output (0-based) of the
// master sequence. Streams derived from the same master never share state.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
    SplitMix64 g(master + stream * 0x9E3779B97F4A7C15ULL);
    return g.next();
}

// FNV-1a, for deriving per-id streams from string image ids.
inline std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001B3ULL;
    }
    return h;
}

// In-place Fisher-Yates shuffle driven by the engine above (std::shuffle
// is not pinned across standard libraries).
template <typename T>
void fisher_yates(std::vector<T>& items, SplitMix64& rng) {
    for (std::size_t i = items.size(); i > 1; --i) {
        std::size_t j = static_cast<std::size_t>(rng.next_below(i));
        std::swap(items[i - 1], items[j]);
    }
}

}  // namespace rrl
