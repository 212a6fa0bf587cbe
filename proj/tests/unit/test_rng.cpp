#include <doctest.h>

#include "driftalloc/rng.hpp"

#include <cmath>
#include <set>

using namespace driftalloc;

TEST_CASE("philox4x32-10 matches Random123 known-answer vectors") {
    const auto zero = philox4x32_10({0, 0, 0, 0}, {0, 0});
    CHECK(zero == PhiloxCounter{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u});

    const auto ones = philox4x32_10({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu}, {0xffffffffu, 0xffffffffu});
    CHECK(ones == PhiloxCounter{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu});

    const auto pi = philox4x32_10({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}, {0xa4093822u, 0x299f31d0u});
    CHECK(pi == PhiloxCounter{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u});
}

TEST_CASE("substreams are reproducible and distinct") {
    RngStream a(42, 7), b(42, 7), c(42, 8), d(42, 7, StreamPurpose::ScheduleChoice);
    std::set<std::uint64_t> seen;
    for (int i = 0; i < 100; ++i) {
        const auto x = a.next_u64();
        CHECK(x == b.next_u64());
        seen.insert(x);
        seen.insert(c.next_u64());
        seen.insert(d.next_u64());
    }
    CHECK(seen.size() == 300);
}

TEST_CASE("uniform stays inside the open unit interval") {
    RngStream r(1, 0);
    double sum = 0.0;
    constexpr int n = 200000;
    for (int i = 0; i < n; ++i) {
        const double u = r.uniform();
        REQUIRE(u > 0.0);
        REQUIRE(u < 1.0);
        sum += u;
    }
    // mean of U(0,1): sd of the average is 1/sqrt(12 n)
    CHECK(std::abs(sum / n - 0.5) < 4.0 / std::sqrt(12.0 * n));
}
