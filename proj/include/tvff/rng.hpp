#pragma once

#include <array>
#include <cmath>
#include <cstdint>

namespace tvff {

/// Philox4x32-10 counter-based generator (Salmon et al., Random123).
/// Output depends only on (key, counter), so any replicate's stream can be
/// produced independently of the others.
struct Philox4x32 {
    using Counter = std::array<std::uint32_t, 4>;
    using Key = std::array<std::uint32_t, 2>;

    static Counter block(Counter ctr, Key key) {
        constexpr std::uint32_t M0 = 0xD2511F53u;
        constexpr std::uint32_t M1 = 0xCD9E8D57u;
        constexpr std::uint32_t W0 = 0x9E3779B9u;
        constexpr std::uint32_t W1 = 0xBB67AE85u;
        for (int r = 0; r < 10; ++r) {
            if (r > 0) {
                key[0] += W0;
                key[1] += W1;
            }
            const std::uint64_t p0 = static_cast<std::uint64_t>(M0) * ctr[0];
            const std::uint64_t p1 = static_cast<std::uint64_t>(M1) * ctr[2];
            ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0], static_cast<std::uint32_t>(p1),
                   static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1], static_cast<std::uint32_t>(p0)};
        }
        return ctr;
    }
};

/// Sequential draws from substream (seed, replicate, stream). Counter words
/// are (block low, block high, replicate, stream).
class PhiloxStream {
public:
    PhiloxStream(std::uint64_t seed, std::uint32_t replicate, std::uint32_t stream = 0)
        : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)}, replicate_(replicate), stream_(stream) {}

    std::uint32_t next_u32() {
        if (pos_ == 4) {
            buf_ = Philox4x32::block({static_cast<std::uint32_t>(block_), static_cast<std::uint32_t>(block_ >> 32), replicate_, stream_}, key_);
            ++block_;
            pos_ = 0;
        }
        return buf_[pos_++];
    }

    std::uint64_t next_u64() {
        const std::uint64_t hi = next_u32();
        return hi << 32 | next_u32();
    }

    /// Uniform on [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform integer in [0, n), unbiased (Lemire's multiply-and-reject).
    std::uint32_t below(std::uint32_t n) {
        std::uint64_t m = static_cast<std::uint64_t>(next_u32()) * n;
        auto low = static_cast<std::uint32_t>(m);
        if (low < n) {
            const std::uint32_t threshold = static_cast<std::uint32_t>(-n) % n;
            while (low < threshold) {
                m = static_cast<std::uint64_t>(next_u32()) * n;
                low = static_cast<std::uint32_t>(m);
            }
        }
        return static_cast<std::uint32_t>(m >> 32);
    }

    /// Standard normal by Box-Muller (the second variate is discarded).
    double normal() {
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586477 * u2);
    }

private:
    Philox4x32::Key key_;
    std::uint32_t replicate_;
    std::uint32_t stream_;
    std::uint64_t block_ = 0;
    Philox4x32::Counter buf_{};
    int pos_ = 4;
};

}  // namespace tvff
