// SPDX-License-Identifier: Apache-2.0
//
// Counter-based random stream (Philox4x32-10). A stream is identified by
// (seed, stream id); every draw is a pure function of (seed, stream, counter),
// so Monte Carlo trials give identical results regardless of thread count.
#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>

namespace gkp {

class CounterRng {
  public:
    using result_type = std::uint64_t;

    CounterRng(std::uint64_t seed, std::uint64_t stream) : key_{lo(seed), hi(seed)}, stream_(stream) {}

    /// Independent stream derived from this one's key; child ids index trials.
    CounterRng split(std::uint64_t child) const {
        CounterRng r(*this);
        r.stream_ = mix(stream_ ^ (child * 0x9e3779b97f4a7c15ull + 0x632be59bd9b4e019ull));
        r.counter_ = 0;
        r.buffered_ = 0;
        r.has_normal_ = false;
        return r;
    }

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    result_type operator()() {
        if (buffered_ == 0) refill();
        const std::uint32_t a = block_[4 - buffered_];
        const std::uint32_t b = block_[5 - buffered_];
        buffered_ -= 2;
        return (static_cast<std::uint64_t>(a) << 32) | b;
    }

    /// Uniform on the open interval (0, 1).
    double uniform() { return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53; }

    /// Standard normal via Box-Muller.
    double normal() {
        if (has_normal_) {
            has_normal_ = false;
            return spare_normal_;
        }
        const double r = std::sqrt(-2.0 * std::log(uniform()));
        const double phi = 6.283185307179586477 * uniform();
        spare_normal_ = r * std::sin(phi);
        has_normal_ = true;
        return r * std::cos(phi);
    }

    std::uint64_t counter() const { return counter_; }

  private:
    static std::uint32_t lo(std::uint64_t v) { return static_cast<std::uint32_t>(v); }
    static std::uint32_t hi(std::uint64_t v) { return static_cast<std::uint32_t>(v >> 32); }

    static std::uint64_t mix(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    static void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi_out, std::uint32_t& lo_out) {
        const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
        hi_out = static_cast<std::uint32_t>(p >> 32);
        lo_out = static_cast<std::uint32_t>(p);
    }

    void refill() {
        std::array<std::uint32_t, 4> ctr{lo(counter_), hi(counter_), lo(stream_), hi(stream_)};
        std::array<std::uint32_t, 2> key = key_;
        for (int round = 0; round < 10; ++round) {
            std::uint32_t hi0, lo0, hi1, lo1;
            mulhilo(0xD2511F53u, ctr[0], hi0, lo0);
            mulhilo(0xCD9E8D57u, ctr[2], hi1, lo1);
            ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
            key[0] += 0x9E3779B9u;
            key[1] += 0xBB67AE85u;
        }
        block_ = ctr;
        buffered_ = 4;
        ++counter_;
    }

    std::array<std::uint32_t, 2> key_;
    std::uint64_t stream_;
    std::uint64_t counter_ = 0;
    std::array<std::uint32_t, 4> block_{};
    int buffered_ = 0;
    bool has_normal_ = false;
    double spare_normal_ = 0.0;
};

}  // namespace gkp
