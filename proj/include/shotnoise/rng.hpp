#ifndef SHOTNOISE_RNG_HPP
#define SHOTNOISE_RNG_HPP

#include <array>
#include <cstdint>
#include <limits>

namespace shotnoise {

/**
 * Philox4x32-10 counter-based generator (Salmon et al., SC'11).
 *
 * A stream is named by a 64-bit key and a 64-bit stream id; the other
 * half of the counter walks through the blocks. Distinct (key, stream)
 * pairs never share a block, so every Monte-Carlo path can own a
 * stream regardless of which thread runs it.
 */
class Philox4x32 {
public:
    using result_type = std::uint32_t;
    using Counter = std::array<std::uint32_t, 4>;
    using Key = std::array<std::uint32_t, 2>;

    Philox4x32(std::uint64_t seed, std::uint64_t stream)
        : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
          ctr_{0, 0, static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)} {}

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    result_type operator()() {
        if (pos_ == 4) {
            block_ = bijection(ctr_, key_);
            if (++ctr_[0] == 0) ++ctr_[1];
            pos_ = 0;
        }
        return block_[pos_++];
    }

    /// The keyed bijection itself, ten rounds.
    static Counter bijection(Counter c, Key k) {
        for (int round = 0; round < 10; ++round) {
            if (round > 0) {
                k[0] += 0x9E3779B9u;
                k[1] += 0xBB67AE85u;
            }
            const std::uint64_t p0 = std::uint64_t{0xD2511F53u} * c[0];
            const std::uint64_t p1 = std::uint64_t{0xCD9E8D57u} * c[2];
            c = {static_cast<std::uint32_t>(p1 >> 32) ^ c[1] ^ k[0], static_cast<std::uint32_t>(p1),
                 static_cast<std::uint32_t>(p0 >> 32) ^ c[3] ^ k[1], static_cast<std::uint32_t>(p0)};
        }
        return c;
    }

private:
    Key key_;
    Counter ctr_;
    Counter block_{};
    int pos_ = 4;
};

}  // namespace shotnoise

#endif  // SHOTNOISE_RNG_HPP
