#pragma once

#include <array>
#include <cmath>
#include <cstdint>

namespace potentia {

/// Philox4x64-10 counter-based generator (Salmon et al., SC'11).
/// One call maps (counter, key) to four 64-bit words; there is no hidden state.
struct Philox4x64 {
    using Block = std::array<std::uint64_t, 4>;
    using Key = std::array<std::uint64_t, 2>;

    static Block apply(Block ctr, Key key) {
        constexpr std::uint64_t m0 = 0xD2E7470EE14C6C93ULL;
        constexpr std::uint64_t m1 = 0xCA5A826395121157ULL;
        constexpr std::uint64_t w0 = 0x9E3779B97F4A7C15ULL;
        constexpr std::uint64_t w1 = 0xBB67AE8584CAA73BULL;
        for (int r = 0; r < 10; ++r) {
            if (r > 0) {
                key[0] += w0;
                key[1] += w1;
            }
            const unsigned __int128 p0 = static_cast<unsigned __int128>(m0) * ctr[0];
            const unsigned __int128 p1 = static_cast<unsigned __int128>(m1) * ctr[2];
            const auto hi0 = static_cast<std::uint64_t>(p0 >> 64);
            const auto lo0 = static_cast<std::uint64_t>(p0);
            const auto hi1 = static_cast<std::uint64_t>(p1 >> 64);
            const auto lo1 = static_cast<std::uint64_t>(p1);
            ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
        }
        return ctr;
    }
};

/// Random stream for one Monte Carlo path. The path index is part of the
/// counter, so path k sees the same numbers no matter which thread runs it or
/// how many paths precede it.
class PathStream {
public:
    using result_type = std::uint64_t;

    PathStream(std::uint64_t seed, std::uint64_t path_index, std::uint64_t tag = 0)
        : key_{seed, tag}, path_(path_index) {}

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return ~result_type{0}; }

    result_type operator()() {
        if (pos_ == 4) {
            buf_ = Philox4x64::apply({++block_, path_, 0, 0}, key_);
            pos_ = 0;
        }
        return buf_[pos_++];
    }

    /// Uniform on the open interval (0,1).
    double uniform() { return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53; }

    double exponential(double rate) { return -std::log(uniform()) / rate; }

    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double r = std::sqrt(-2.0 * std::log(uniform()));
        const double th = 2.0 * M_PI * uniform();
        spare_ = r * std::sin(th);
        has_spare_ = true;
        return r * std::cos(th);
    }

private:
    Philox4x64::Key key_;
    std::uint64_t path_;
    std::uint64_t block_ = 0;
    Philox4x64::Block buf_{};
    int pos_ = 4;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace potentia
