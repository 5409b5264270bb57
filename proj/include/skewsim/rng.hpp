#pragma once

#include <array>
#include <cstdint>

namespace skewsim {

/// Philox4x32-10 counter-based generator. Stateless:
/// the output depends only on (counter, key), which gives every path its own
/// stream regardless of how paths are split across threads.
class Philox4x32 {
public:
    using Counter = std::array<std::uint32_t, 4>;
    using Key = std::array<std::uint32_t, 2>;

    static constexpr Counter block(Counter ctr, Key key) noexcept {
        for (int r = 0; r < 10; ++r) {
            if (r > 0) {
                key[0] += 0x9E3779B9u;
                key[1] += 0xBB67AE85u;
            }
            ctr = round(ctr, key);
        }
        return ctr;
    }

private:
    static constexpr Counter round(const Counter& c, const Key& k) noexcept {
        std::uint64_t p0 = std::uint64_t{0xD2511F53u} * c[0];
        std::uint64_t p1 = std::uint64_t{0xCD9E8D57u} * c[2];
        auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
        auto lo0 = static_cast<std::uint32_t>(p0);
        auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
        auto lo1 = static_cast<std::uint32_t>(p1);
        return {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
    }
};

/// Maps 64 random bits to the open interval (0, 1).
constexpr double open_unit(std::uint64_t bits) noexcept {
    return (static_cast<double>(bits >> 12) + 0.5) * 0x1.0p-52;
}

/// Two uniforms on (0, 1) for draw `index` of an auxiliary stream; streams
/// keep sampling for checks apart from the Brownian increments.
inline std::array<double, 2> uniform_pair(std::uint64_t seed, std::uint32_t stream, std::uint64_t index) noexcept {
    Philox4x32::Counter ctr{static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32), 0xFFFFFFFFu,
                            stream};
    auto r = Philox4x32::block(ctr, {static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)});
    return {open_unit(std::uint64_t{r[0]} | (std::uint64_t{r[1]} << 32)),
            open_unit(std::uint64_t{r[2]} | (std::uint64_t{r[3]} << 32))};
}

}  // namespace skewsim
