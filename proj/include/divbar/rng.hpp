#pragma once

#include <array>
#include <cmath>
#include <cstdint>

namespace divbar {

/// Philox-4x32-10 counter-based generator. A draw is a pure function of
/// (key, counter), so Monte Carlo paths can be generated in any order, on any
/// number of threads, with bit-identical output.
struct Philox4x32 {
    static constexpr std::uint32_t kM0 = 0xD2511F53u;
    static constexpr std::uint32_t kM1 = 0xCD9E8D57u;
    static constexpr std::uint32_t kW0 = 0x9E3779B9u;
    static constexpr std::uint32_t kW1 = 0xBB67AE85u;

    static std::array<std::uint32_t, 4> block(std::uint64_t key, std::uint64_t ctr_hi,
                                              std::uint64_t ctr_lo) {
        std::uint32_t c0 = static_cast<std::uint32_t>(ctr_lo);
        std::uint32_t c1 = static_cast<std::uint32_t>(ctr_lo >> 32);
        std::uint32_t c2 = static_cast<std::uint32_t>(ctr_hi);
        std::uint32_t c3 = static_cast<std::uint32_t>(ctr_hi >> 32);
        std::uint32_t k0 = static_cast<std::uint32_t>(key);
        std::uint32_t k1 = static_cast<std::uint32_t>(key >> 32);
        for (int round = 0; round < 10; ++round) {
            const std::uint64_t p0 = static_cast<std::uint64_t>(kM0) * c0;
            const std::uint64_t p1 = static_cast<std::uint64_t>(kM1) * c2;
            const std::uint32_t hi0 = static_cast<std::uint32_t>(p0 >> 32);
            const std::uint32_t lo0 = static_cast<std::uint32_t>(p0);
            const std::uint32_t hi1 = static_cast<std::uint32_t>(p1 >> 32);
            const std::uint32_t lo1 = static_cast<std::uint32_t>(p1);
            const std::uint32_t n0 = hi1 ^ c1 ^ k0;
            const std::uint32_t n2 = hi0 ^ c3 ^ k1;
            c0 = n0;
            c1 = lo1;
            c2 = n2;
            c3 = lo0;
            k0 += kW0;
            k1 += kW1;
        }
        return {c0, c1, c2, c3};
    }
};

/// Stream of standard normal draws for one simulated path, keyed by
/// (seed, path index); the k-th draw depends only on (seed, path, k).
class NormalStream {
public:
    NormalStream(std::uint64_t seed, std::uint64_t path) : seed_(seed), path_(path) {}

    double next() {
        const std::uint64_t k = idx_++;
        if (k % 2 == 0) {
            const auto w = Philox4x32::block(seed_, path_, k / 2);
            const std::uint64_t u64a = (static_cast<std::uint64_t>(w[0]) << 32) | w[1];
            const std::uint64_t u64b = (static_cast<std::uint64_t>(w[2]) << 32) | w[3];
            // (0, 1] uniforms: keep log() finite
            const double u1 = (static_cast<double>(u64a >> 11) + 1.0) * 0x1.0p-53;
            const double u2 = static_cast<double>(u64b >> 11) * 0x1.0p-53;
            const double rad = std::sqrt(-2.0 * std::log(u1));
            const double ang = 6.283185307179586476925286766559 * u2;
            cached_ = rad * std::sin(ang);
            return rad * std::cos(ang);
        }
        return cached_;
    }

private:
    std::uint64_t seed_, path_;
    std::uint64_t idx_ = 0;
    double cached_ = 0.0;
};

/// Stream of uniforms on (0, 1], keyed independently of the normal stream of
/// the same (seed, path) pair via a fixed key tweak.
class UniformStream {
public:
    UniformStream(std::uint64_t seed, std::uint64_t path)
        : seed_(seed ^ 0x9E3779B97F4A7C15ull), path_(path) {}

    double next() {
        const std::uint64_t k = idx_++;
        if (k % 2 == 0) {
            const auto w = Philox4x32::block(seed_, path_, k / 2);
            const std::uint64_t u64a = (static_cast<std::uint64_t>(w[0]) << 32) | w[1];
            const std::uint64_t u64b = (static_cast<std::uint64_t>(w[2]) << 32) | w[3];
            cached_ = (static_cast<double>(u64b >> 11) + 1.0) * 0x1.0p-53;
            return (static_cast<double>(u64a >> 11) + 1.0) * 0x1.0p-53;
        }
        return cached_;
    }

private:
    std::uint64_t seed_, path_;
    std::uint64_t idx_ = 0;
    double cached_ = 0.0;
};

} // namespace divbar
