#include "tqk/exp_lut.hpp"

#include <cmath>

namespace tqk {

ExpLut build_exp_lut() {
    ExpLut lut;
    for (size_t i = 0; i < ExpLut::kEntries; ++i) {
        const uint16_t mag = static_cast<uint16_t>(i);
        if ((mag & 0x7C00u) == 0x7C00u) {
            // magnitude decodes to inf or NaN; exp2(-inf) == 0 and the NaN
            // slots are pinned to 0 as well so masked rows stay finite
            lut.entries[i] = Half::from_bits(0);
            continue;
        }
        const double x = -static_cast<double>(f16_bits_to_f32(mag));
        lut.entries[i] = Half::from_bits(f64_to_f16_bits(std::exp2(x)));
    }
    return lut;
}

const ExpLut & shared_exp_lut() {
    static const ExpLut lut = build_exp_lut();
    return lut;
}

float exp2_poly(float x) {
    if (x >= 128.0f) return INFINITY;
    if (x <= -150.0f) return 0.0f;

    const float kf = std::floor(x);
    const float f = x - kf; // in [0, 1)
    const int k = static_cast<int>(kf);

    // degree-5 Chebyshev fit of 2^f on [0,1]
    const float c0 = 0x1.fffffcp-1f;
    const float c1 = 0x1.62e526p-1f;
    const float c2 = 0x1.ebcf7ap-3f;
    const float c3 = 0x1.c99b9ep-5f;
    const float c4 = 0x1.25429cp-7f;
    const float c5 = 0x1.f06fafp-10f;

    const float r = c0 + f * (c1 + f * (c2 + f * (c3 + f * (c4 + f * c5))));
    return std::ldexp(r, k);
}

} // namespace tqk
