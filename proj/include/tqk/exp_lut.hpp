#pragma once

#include "tqk/half.hpp"

#include <array>
#include <cstddef>
#include <memory>

namespace tqk {

// Precomputed table of exp2 over the non-positive FP16 domain. The index is
// the 15 magnitude bits of the input (sign dropped), interpreted as the
// negated value, so one 64 KiB table covers every safe-softmax argument.
struct ExpLut {
    static constexpr size_t kEntries = 32768;

    std::array<Half, kEntries> entries{};

    // lut[|x|] == FP16-rounded exp2(-|x|); positive inputs alias their
    // negation, which callers rule out via max-subtraction
    Half lookup(Half x) const { return entries[x.bits & 0x7FFFu]; }
};

static_assert(sizeof(ExpLut) == 65536);

// Builds the table once: entry i is the round-to-nearest-even FP16 of
// exp2(-decode(i)); indices whose magnitude decodes to inf or NaN map to 0.
ExpLut build_exp_lut();

// Process-wide table, built on first use.
const ExpLut & shared_exp_lut();

// Polynomial exp2 fallback: degree-5 near-minimax fit of 2^f on [0,1) plus an
// exponent add. Relative error of the fit is ~2^-22, far below FP16
// resolution. Underflow goes to 0, overflow to +inf.
float exp2_poly(float x);

inline Half lut_exp2(Half x, const ExpLut & lut) { return lut.lookup(x); }

} // namespace tqk
