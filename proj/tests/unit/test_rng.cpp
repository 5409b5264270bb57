#include <doctest.h>

#include "skewsim/rng.hpp"

using namespace skewsim;

TEST_CASE("Philox4x32-10 known answers") {
    auto zero = Philox4x32::block({0, 0, 0, 0}, {0, 0});
    CHECK(zero == Philox4x32::Counter{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u});
    auto ones = Philox4x32::block({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu}, {0xffffffffu, 0xffffffffu});
    CHECK(ones == Philox4x32::Counter{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu});
}

TEST_CASE("open_unit stays inside (0, 1)") {
    CHECK(open_unit(0) > 0.0);
    CHECK(open_unit(~std::uint64_t{0}) < 1.0);
}

TEST_CASE("auxiliary uniform streams") {
    auto a = uniform_pair(1, 7, 100);
    CHECK(a == uniform_pair(1, 7, 100));
    CHECK(a != uniform_pair(1, 8, 100));
    CHECK(a != uniform_pair(2, 7, 100));
    double sum = 0.0;
    for (int i = 0; i < 20000; ++i) {
        auto u = uniform_pair(3, 1, static_cast<std::uint64_t>(i));
        sum += u[0] + u[1];
    }
    CHECK(sum / 40000.0 == doctest::Approx(0.5).epsilon(0.01));
}
