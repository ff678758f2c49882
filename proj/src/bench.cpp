#include "tqk/bench.hpp"

#include <chrono>
#include <random>

namespace tqk {

namespace {

using clock_type = std::chrono::steady_clock;

uint64_t mix(uint64_t seed, uint64_t salt) {
    uint64_t x = seed ^ (salt * 0x9E3779B97F4A7C15ull);
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

HalfMatrix random_matrix(int64_t rows, int64_t cols, uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<float> dist(0.0f, 1.0f);
    HalfMatrix m = make_half_matrix(rows, cols);
    for (Half & h : m.data) h = Half(dist(rng));
    return m;
}

std::vector<Half> random_halves(size_t n, uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<float> dist(0.0f, 1.0f);
    std::vector<Half> v(n);
    for (Half & h : v) h = Half(dist(rng));
    return v;
}

template <typename F>
double time_repeats(int repeats, F && fn) {
    if (repeats <= 0) return 0.0;
    const auto t0 = clock_type::now();
    for (int i = 0; i < repeats; ++i) fn();
    const auto t1 = clock_type::now();
    return std::chrono::duration<double, std::nano>(t1 - t0).count() / repeats;
}

const char * scheme_name(QuantScheme s) {
    return s == QuantScheme::q4_0 ? "q4_0" : "q8_0";
}

} // namespace

std::vector<BenchRecord> run_gemm_bench(const GemmBenchSpec & spec) {
    const HalfMatrix a = random_matrix(spec.m, spec.k, mix(spec.seed, 1));
    const HalfMatrix w = random_matrix(spec.k, spec.n, mix(spec.seed, 2));
    const TiledF16Matrix at = to_tiled(a);

    QuantTensor w_tile = quantize_tensor(w, spec.scheme, Grouping::tile);
    QuantTensor w_conv = quantize_tensor(w, spec.scheme, Grouping::conventional);

    std::vector<BenchRecord> out;
    for (const char * arm : {"tiled", "scatter"}) {
        BenchRecord rec;
        rec.kind = "gemm";
        rec.arm = arm;
        rec.scheme = scheme_name(spec.scheme);
        rec.m = spec.m;
        rec.k = spec.k;
        rec.n = spec.n;
        rec.repeats = spec.repeats;
        const bool tiled = rec.arm == "tiled";
        rec.elapsed_ns = time_repeats(spec.repeats, [&] {
            GemmStats ignore;
            (void)gemm_quant(at, tiled ? w_tile : w_conv, {},
                             tiled ? DequantPath::tiled : DequantPath::scatter_baseline, &ignore);
        });
        // counters from one instrumented run
        (void)gemm_quant(at, tiled ? w_tile : w_conv, {},
                         tiled ? DequantPath::tiled : DequantPath::scatter_baseline, &rec.gemm_stats);
        out.push_back(std::move(rec));
    }
    return out;
}

std::vector<BenchRecord> run_dequant_bench(const GemmBenchSpec & spec) {
    const HalfMatrix w = random_matrix(spec.k, spec.n, mix(spec.seed, 2));
    QuantTensor w_tile = quantize_tensor(w, spec.scheme, Grouping::tile);
    QuantTensor w_conv = quantize_tensor(w, spec.scheme, Grouping::conventional);

    std::vector<BenchRecord> out;
    for (const char * arm : {"tiled", "scatter"}) {
        BenchRecord rec;
        rec.kind = "dequant";
        rec.arm = arm;
        rec.scheme = scheme_name(spec.scheme);
        rec.k = spec.k;
        rec.n = spec.n;
        rec.repeats = spec.repeats;
        const bool tiled = rec.arm == "tiled";
        rec.elapsed_ns = time_repeats(spec.repeats, [&] {
            if (tiled) {
                (void)dequantize_to_tiled(w_tile);
            } else {
                const std::vector<Half> cm = dequantize_to_columns(w_conv);
                TiledF16Matrix t = make_tiled(w_conv.rows, w_conv.cols);
                for (int64_t c = 0; c < w_conv.padded_cols; ++c) {
                    for (int64_t r = 0; r < w_conv.padded_rows; ++r) {
                        t.data[static_cast<size_t>(tiled_offset(r, c, w_conv.padded_rows))] =
                            cm[static_cast<size_t>(c * w_conv.padded_rows + r)];
                    }
                }
            }
        });
        const uint64_t elems = static_cast<uint64_t>(w_tile.padded_elems());
        rec.gemm_stats.weight_elements_visited = elems;
        if (spec.scheme == QuantScheme::q4_0) rec.gemm_stats.lut_decodes = elems;
        if (!tiled) rec.gemm_stats.positioned_writes = elems;
        out.push_back(std::move(rec));
    }
    return out;
}

std::vector<BenchRecord> run_attention_bench(const AttentionBenchSpec & spec) {
    AttentionConfig cfg;
    cfg.head_dim = spec.head_dim;
    cfg.num_heads = spec.num_heads;
    cfg.kv_heads = spec.num_heads;

    const size_t q_elems = static_cast<size_t>(spec.num_heads) * spec.n_q * spec.head_dim;
    const size_t kv_elems = static_cast<size_t>(spec.num_heads) * spec.n_kv * spec.head_dim;
    const std::vector<Half> q = random_halves(q_elems, mix(spec.seed, 1));
    const std::vector<Half> k = random_halves(kv_elems, mix(spec.seed, 2));
    const std::vector<Half> v = random_halves(kv_elems, mix(spec.seed, 3));
    const ExpLut & lut = shared_exp_lut();

    std::vector<BenchRecord> out;
    for (ExpMode mode : {ExpMode::lut, ExpMode::poly}) {
        BenchRecord rec;
        rec.kind = "attention";
        rec.arm = mode == ExpMode::lut ? "lut_exp" : "poly_exp";
        rec.scheme = "f16";
        rec.n_q = spec.n_q;
        rec.n_kv = spec.n_kv;
        rec.head_dim = spec.head_dim;
        rec.repeats = spec.repeats;
        cfg.exp_mode = mode;
        rec.elapsed_ns = time_repeats(spec.repeats, [&] {
            (void)flash_attention_f16(q, spec.n_q, k, v, spec.n_kv, cfg, lut);
        });
        (void)flash_attention_f16(q, spec.n_q, k, v, spec.n_kv, cfg, lut, &rec.attn_stats);
        out.push_back(std::move(rec));
    }
    return out;
}

} // namespace tqk
