#ifndef MMCOOL_RANDOM_HPP
#define MMCOOL_RANDOM_HPP

#include <cmath>
#include <cstdint>

#include "constants.hpp"

namespace mmcool {

// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Counter-based stream: output n is mix64(key + n * golden). The key is a
// hash of (master seed, stream index), so every trajectory owns an
// independent, reproducible sequence regardless of scheduling.
class RandomStream {
public:
    RandomStream(std::uint64_t master_seed, std::uint64_t stream)
        : key_(mix64(mix64(master_seed) ^ (stream * 0xd1b54a32d192ed03ULL + 0x8cb92ba72f3d8dd7ULL))) {}

    std::uint64_t next_u64() {
        ++counter_;
        return mix64(key_ + counter_ * 0x9e3779b97f4a7c15ULL);
    }

    // Uniform on (0, 1].
    double uniform() { return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53; }

    // Standard normal via Box-Muller; the second variate is cached.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double r = std::sqrt(-2.0 * std::log(uniform()));
        const double phi = constants::two_pi * uniform();
        spare_ = r * std::sin(phi);
        has_spare_ = true;
        return r * std::cos(phi);
    }

    std::uint64_t draws() const { return counter_; }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

} // namespace mmcool

#endif // MMCOOL_RANDOM_HPP
