#pragma once

#include <bit>
#include <cmath>
#include <cstdint>

namespace tqk {

// IEEE-754 binary16 conversions. All narrowing conversions round to
// nearest-even; values beyond the binary16 range saturate to +-inf.
// The bit-level routines are the single source of truth for rounding:
// every kernel that stores an FP16 result goes through them.

inline uint16_t f32_to_f16_bits(float value) {
    const uint32_t sign_mask = 0x80000000u;
    const uint32_t f32_inf   = 255u << 23;
    const uint32_t f16_max   = (127u + 16u) << 23;            // 2^16
    const uint32_t sub_magic = ((127u - 15u) + (23u - 10u) + 1u) << 23; // 0.5f

    uint32_t u = std::bit_cast<uint32_t>(value);
    const uint32_t sign = u & sign_mask;
    u ^= sign;

    uint16_t out;
    if (u >= f16_max) {
        // overflow -> inf, NaN -> quiet NaN
        out = (u > f32_inf) ? 0x7E00 : 0x7C00;
    } else if (u < (113u << 23)) {
        // result is subnormal or zero: adding 0.5f aligns the mantissa at the
        // subnormal position and lets the FP adder do the rounding
        const float f = std::bit_cast<float>(u) + std::bit_cast<float>(sub_magic);
        out = static_cast<uint16_t>(std::bit_cast<uint32_t>(f) - sub_magic);
    } else {
        const uint32_t mant_odd = (u >> 13) & 1u;
        u += (static_cast<uint32_t>(15 - 127) << 23) + 0xFFFu;
        u += mant_odd;
        out = static_cast<uint16_t>(u >> 13);
    }
    return out | static_cast<uint16_t>(sign >> 16);
}

inline float f16_bits_to_f32(uint16_t h) {
    const uint32_t sign = static_cast<uint32_t>(h & 0x8000u) << 16;
    const uint32_t exp = (h >> 10) & 0x1Fu;
    const uint32_t man = h & 0x3FFu;
    if (exp == 0x1Fu) {
        return std::bit_cast<float>(sign | 0x7F800000u | (man << 13));
    }
    if (exp == 0) {
        const float v = static_cast<float>(man) * 0x1p-24f; // exact
        return sign ? -v : v;
    }
    return std::bit_cast<float>(sign | ((exp + 112u) << 23) | (man << 13));
}

// Direct binary64 -> binary16 rounding, used where an intermediate float
// rounding step would cause double rounding (e.g. table construction).
inline uint16_t f64_to_f16_bits(double value) {
    const uint64_t bits = std::bit_cast<uint64_t>(value);
    const uint16_t hsign = static_cast<uint16_t>((bits >> 48) & 0x8000u);
    const double ax = std::fabs(value);

    if (std::isnan(value)) {
        return hsign | 0x7E00u;
    }
    if (ax >= 65520.0) { // everything here rounds to inf (65520 ties to even)
        return hsign | 0x7C00u;
    }
    if (ax < 0x1p-14) {
        // subnormal: quantize to units of 2^-24; carry into the min normal
        // falls out of the encoding (q == 1024 sets the exponent field to 1)
        const uint64_t q = static_cast<uint64_t>(std::nearbyint(ax * 0x1p24));
        return hsign | static_cast<uint16_t>(q);
    }
    int e;
    const double m = std::frexp(ax, &e);                 // ax = m * 2^e, m in [0.5, 1)
    uint64_t q = static_cast<uint64_t>(std::nearbyint(std::ldexp(m, 11)));
    if (q == 2048) { // significand rounded up to 2.0
        q = 1024;
        e += 1;
    }
    if (e > 16) {
        return hsign | 0x7C00u;
    }
    return hsign | static_cast<uint16_t>(((e + 14) << 10) | (q - 1024));
}

// binary16 scalar carried as a raw bit pattern
struct Half {
    uint16_t bits = 0;

    Half() = default;
    explicit Half(float f) : bits(f32_to_f16_bits(f)) {}
    explicit Half(double d) : bits(f64_to_f16_bits(d)) {}

    static Half from_bits(uint16_t b) {
        Half h;
        h.bits = b;
        return h;
    }

    float to_float() const { return f16_bits_to_f32(bits); }

    Half operator-() const { return from_bits(static_cast<uint16_t>(bits ^ 0x8000u)); }

    // IEEE comparisons: widening to binary32 is exact
    friend bool operator==(Half a, Half b) { return a.to_float() == b.to_float(); }
    friend bool operator!=(Half a, Half b) { return a.to_float() != b.to_float(); }
    friend bool operator<(Half a, Half b) { return a.to_float() < b.to_float(); }
    friend bool operator<=(Half a, Half b) { return a.to_float() <= b.to_float(); }
    friend bool operator>(Half a, Half b) { return a.to_float() > b.to_float(); }
    friend bool operator>=(Half a, Half b) { return a.to_float() >= b.to_float(); }
};

static_assert(sizeof(Half) == 2);

inline Half f32_to_f16(float x) { return Half(x); }

inline bool half_isnan(Half h) { return (h.bits & 0x7FFFu) > 0x7C00u; }
inline bool half_isinf(Half h) { return (h.bits & 0x7FFFu) == 0x7C00u; }
inline bool half_isfinite(Half h) { return (h.bits & 0x7C00u) != 0x7C00u; }

// NaN-propagating maximum
inline Half half_max(Half a, Half b) {
    if (half_isnan(a)) return a;
    if (half_isnan(b)) return b;
    return b > a ? b : a;
}

inline constexpr uint16_t kHalfPosInfBits = 0x7C00;
inline constexpr uint16_t kHalfNegInfBits = 0xFC00;

inline Half half_neg_inf() { return Half::from_bits(kHalfNegInfBits); }

} // namespace tqk
