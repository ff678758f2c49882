#pragma once

#include "tqk/attention.hpp"
#include "tqk/gemm.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace tqk {

// One measured configuration. Wall clock is reported, never asserted;
// the operation counters are the comparable quantities.
struct BenchRecord {
    std::string kind;   // gemm | attention | dequant
    std::string arm;    // tiled | scatter | lut_exp | poly_exp
    std::string scheme; // q4_0 | q8_0 | f16
    int64_t m = 0, k = 0, n = 0;   // gemm/dequant shape
    int64_t n_q = 0, n_kv = 0, head_dim = 0; // attention shape
    int repeats = 0;
    double elapsed_ns = 0.0; // mean per repeat
    GemmStats gemm_stats;
    AttentionStats attn_stats;
};

struct GemmBenchSpec {
    int64_t m = 1, k = 512, n = 512;
    QuantScheme scheme = QuantScheme::q4_0;
    int repeats = 3;
    uint64_t seed = 0;
};

// runs both the tiled and the scatter-baseline arm on the same weights
std::vector<BenchRecord> run_gemm_bench(const GemmBenchSpec & spec);

// dequantization alone, same two arms
std::vector<BenchRecord> run_dequant_bench(const GemmBenchSpec & spec);

struct AttentionBenchSpec {
    int64_t n_q = 1, n_kv = 1024, head_dim = 64;
    int num_heads = 1;
    int repeats = 3;
    uint64_t seed = 0;
};

// runs the LUT-exp and poly-exp arms on the same tensors
std::vector<BenchRecord> run_attention_bench(const AttentionBenchSpec & spec);

} // namespace tqk
