#pragma once

// Counter-based random number streams (Philox4x32-10).
//
// A stream is addressed by (seed, stream id); draws depend only on that pair
// and the draw index, never on scheduling. Replica k of an ensemble owns
// stream k, so ensembles can be sharded without changing their output.

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace multicoal {

struct RngSpec {
    std::uint64_t seed = 0;
    std::uint64_t stream = 0;
};

namespace detail {

inline void philox_round(std::array<std::uint32_t, 4>& c, const std::array<std::uint32_t, 2>& k) {
    constexpr std::uint64_t m0 = 0xD2511F53ull;
    constexpr std::uint64_t m1 = 0xCD9E8D57ull;
    const std::uint64_t p0 = m0 * c[0];
    const std::uint64_t p1 = m1 * c[2];
    const std::uint32_t hi0 = static_cast<std::uint32_t>(p0 >> 32);
    const std::uint32_t lo0 = static_cast<std::uint32_t>(p0);
    const std::uint32_t hi1 = static_cast<std::uint32_t>(p1 >> 32);
    const std::uint32_t lo1 = static_cast<std::uint32_t>(p1);
    c = {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
}

inline std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> counter,
                                                  std::array<std::uint32_t, 2> key) {
    constexpr std::uint32_t w0 = 0x9E3779B9u;
    constexpr std::uint32_t w1 = 0xBB67AE85u;
    for (int round = 0; round < 10; ++round) {
        philox_round(counter, key);
        key[0] += w0;
        key[1] += w1;
    }
    return counter;
}

}  // namespace detail

class StreamRng {
public:
    explicit StreamRng(RngSpec spec) : StreamRng(spec.seed, spec.stream) {}

    StreamRng(std::uint64_t seed, std::uint64_t stream)
        : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
          counter_{0, 0, static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)} {}

    std::uint32_t next_u32() {
        if (cursor_ == 4) {
            block_ = detail::philox4x32_10(counter_, key_);
            if (++counter_[0] == 0) ++counter_[1];
            cursor_ = 0;
        }
        return block_[cursor_++];
    }

    std::uint64_t next_u64() {
        const std::uint64_t hi = next_u32();
        return (hi << 32) | next_u32();
    }

    // Uniform on [0,1) with 53 random bits.
    double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double exponential(double rate) {
        if (rate <= 0.0) throw std::invalid_argument("exponential: rate must be positive");
        return -std::log1p(-uniform01()) / rate;
    }

    bool bernoulli(double p) { return uniform01() < p; }

    int binomial(int n, double p) {
        int hits = 0;
        for (int i = 0; i < n; ++i)
            if (bernoulli(p)) ++hits;
        return hits;
    }

    // Index into [0, n) uniformly.
    std::size_t uniform_index(std::size_t n) {
        if (n == 0) throw std::invalid_argument("uniform_index: empty range");
        return static_cast<std::size_t>(uniform01() * static_cast<double>(n)) % n;
    }

    // Pick an index proportionally to weights given as a cumulative-sum vector.
    std::size_t categorical_from_cumulative(const std::vector<double>& cumulative) {
        if (cumulative.empty()) throw std::invalid_argument("categorical: no weights");
        const double total = cumulative.back();
        const double u = uniform01() * total;
        std::size_t lo = 0, hi = cumulative.size() - 1;
        while (lo < hi) {
            const std::size_t mid = (lo + hi) / 2;
            if (cumulative[mid] <= u)
                lo = mid + 1;
            else
                hi = mid;
        }
        return lo;
    }

private:
    std::array<std::uint32_t, 2> key_;
    std::array<std::uint32_t, 4> counter_;
    std::array<std::uint32_t, 4> block_{};
    int cursor_ = 4;
};

}  // namespace multicoal
