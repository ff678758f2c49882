#pragma once

#include "tqk/exp_lut.hpp"
#include "tqk/half.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace tqk {

enum class ExpMode : uint8_t {
    lut,  // table lookup on the FP16 magnitude bits
    poly, // exp2_poly on the widened input, rounded back to FP16
};

struct AttentionConfig {
    int64_t head_dim = 64;
    int num_heads = 1;
    int kv_heads = 1; // query head h reads kv head h*kv_heads/num_heads
    int64_t q_tile = 32;
    int64_t kv_tile = 32;
    bool causal = false;
    ExpMode exp_mode = ExpMode::lut;
    bool checked = false; // record/assert non-positive exponent inputs

    // base-2 logit scale; exp2(log2(e) * x / sqrt(d)) == exp(x / sqrt(d))
    float scale() const;
};

struct AttentionStats {
    uint64_t exp_evals = 0;           // P-matrix exponent evaluations
    uint64_t rescale_evals = 0;       // running-max rescale factors
    uint64_t positive_exp_inputs = 0; // checked mode: inputs > 0 seen
    uint64_t qk_macs = 0;
    uint64_t pv_macs = 0;
};

// Streaming-softmax FP16 attention. Layouts are dense row-major:
// Q [num_heads, n_q, d], K and V [kv_heads, n_kv, d], output
// [num_heads, n_q, d]. S, P, O, m, l are stored FP16 between KV tiles;
// QK^T, row sums and P*V accumulate in FP32. Fully masked rows yield 0.
std::vector<Half> flash_attention_f16(std::span<const Half> q, int64_t n_q,
                                      std::span<const Half> k, std::span<const Half> v, int64_t n_kv,
                                      const AttentionConfig & cfg, const ExpLut & lut,
                                      AttentionStats * stats = nullptr);

// FP32 oracle: full max-subtracted softmax(QK^T / sqrt(d)) * V.
std::vector<float> reference_attention_f32(std::span<const Half> q, int64_t n_q,
                                           std::span<const Half> k, std::span<const Half> v, int64_t n_kv,
                                           const AttentionConfig & cfg);

// One unnormalized softmax row: elementwise exp2 of (s - m) via the table.
// Callers guarantee s <= m.
std::vector<Half> softmax_row_lut(std::span<const Half> s, Half m, const ExpLut & lut);

} // namespace tqk
