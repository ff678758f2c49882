#include "tqk/half.hpp"

#include "oracle_mpfr.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace tqk;

TEST_CASE("f16 bits survive a float roundtrip for every pattern") {
    for (uint32_t b = 0; b <= 0xFFFF; ++b) {
        const uint16_t h = static_cast<uint16_t>(b);
        if (half_isnan(Half::from_bits(h))) {
            CHECK(half_isnan(Half(f16_bits_to_f32(h))));
            continue;
        }
        CHECK(f32_to_f16_bits(f16_bits_to_f32(h)) == h);
    }
}

TEST_CASE("f16 decode agrees with the independent decoder") {
    for (uint32_t b = 0; b <= 0xFFFF; ++b) {
        const uint16_t h = static_cast<uint16_t>(b);
        if (half_isnan(Half::from_bits(h))) continue;
        CHECK(static_cast<double>(f16_bits_to_f32(h)) == oracle::half_bits_to_double(h));
    }
}

TEST_CASE("f32_to_f16 directed cases") {
    CHECK(f32_to_f16(1.0f).bits == 0x3C00);
    CHECK(f32_to_f16(65504.0f).bits == 0x7BFF);

    // 65520 is the midpoint above the max normal; ties-to-even overflows
    CHECK(f32_to_f16(65520.0f).bits == kHalfPosInfBits);
    CHECK(f32_to_f16(-65520.0f).bits == kHalfNegInfBits);
    CHECK(f32_to_f16(std::nextafterf(65520.0f, 0.0f)).bits == 0x7BFF);
    CHECK(f32_to_f16(1e9f).bits == kHalfPosInfBits);
    CHECK(f32_to_f16(INFINITY).bits == kHalfPosInfBits);

    // 2^-25 is the midpoint below the min subnormal; ties to even -> 0
    CHECK(f32_to_f16(0x1p-25f).bits == 0x0000);
    CHECK(f32_to_f16(std::nextafterf(0x1p-25f, 1.0f)).bits == 0x0001);
    CHECK(f32_to_f16(0x1p-24f).bits == 0x0001);
    CHECK(f32_to_f16(0x1.8p-24f).bits == 0x0002); // tie at 1.5 ulp -> even
    CHECK(f32_to_f16(-0.0f).bits == 0x8000);
    CHECK(f32_to_f16(0.0f).bits == 0x0000);

    CHECK(half_isnan(f32_to_f16(NAN)));
}

TEST_CASE("f32_to_f16 equals the mpfr reference conversion on random inputs") {
    std::mt19937_64 rng(7);
    for (int i = 0; i < 200000; ++i) {
        const uint32_t bits = static_cast<uint32_t>(rng());
        const float x = std::bit_cast<float>(bits);
        if (std::isnan(x)) continue;
        CHECK(f32_to_f16_bits(x) == oracle::float_to_half_bits(x));
    }
    // values concentrated around the representable range matter most
    std::uniform_real_distribution<float> dist(-70000.0f, 70000.0f);
    for (int i = 0; i < 200000; ++i) {
        const float x = dist(rng);
        CHECK(f32_to_f16_bits(x) == oracle::float_to_half_bits(x));
    }
}

TEST_CASE("f64_to_f16 equals the mpfr reference conversion") {
    CHECK(f64_to_f16_bits(1.0) == 0x3C00);
    CHECK(f64_to_f16_bits(65520.0) == kHalfPosInfBits);
    CHECK(f64_to_f16_bits(std::nextafter(65520.0, 0.0)) == 0x7BFF);

    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> wide(-70000.0, 70000.0);
    std::uniform_real_distribution<double> tiny(-1e-4, 1e-4);
    for (int i = 0; i < 200000; ++i) {
        const double x = wide(rng);
        CHECK(f64_to_f16_bits(x) == oracle::double_to_half_bits(x));
    }
    for (int i = 0; i < 200000; ++i) {
        const double x = tiny(rng);
        CHECK(f64_to_f16_bits(x) == oracle::double_to_half_bits(x));
    }
}

TEST_CASE("half comparison and max semantics") {
    const Half one(1.0f), two(2.0f);
    const Half nan = Half::from_bits(0x7E00);

    CHECK(one < two);
    CHECK(two > one);
    CHECK(one == Half(1.0f));
    CHECK(Half(0.0f) == Half(-0.0f));

    CHECK_FALSE(nan == nan);
    CHECK_FALSE(nan < one);
    CHECK_FALSE(nan > one);

    CHECK(half_max(one, two) == two);
    CHECK(half_max(two, one) == two);
    CHECK(half_isnan(half_max(nan, one)));
    CHECK(half_isnan(half_max(one, nan)));

    CHECK((-one).bits == 0xBC00);
    CHECK((-nan).bits == 0xFE00);

    CHECK(half_isinf(Half::from_bits(kHalfPosInfBits)));
    CHECK(!half_isfinite(Half::from_bits(kHalfPosInfBits)));
    CHECK(half_isfinite(one));
}
