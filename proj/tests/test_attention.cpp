#include "tqk/attention.hpp"

#include "tqk/errors.hpp"
#include "tqk/parallel.hpp"

#include "oracle_mpfr.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace tqk;

namespace {

std::vector<Half> random_halves(size_t n, uint64_t seed, float spread = 1.0f) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<float> dist(0.0f, spread);
    std::vector<Half> v(n);
    for (Half & h : v) h = Half(dist(rng));
    return v;
}

double max_abs_diff(std::span<const Half> got, std::span<const float> want) {
    double worst = 0.0;
    for (size_t i = 0; i < got.size(); ++i) {
        worst = std::fmax(worst, std::fabs(got[i].to_float() - static_cast<double>(want[i])));
    }
    return worst;
}

AttentionConfig config(int64_t d = 64) {
    AttentionConfig cfg;
    cfg.head_dim = d;
    return cfg;
}

} // namespace

TEST_CASE("single kv position copies the value row") {
    const auto cfg = config();
    const auto q = random_halves(64, 3);
    const auto k = random_halves(64, 5);
    const auto v = random_halves(64, 7);
    const auto out = flash_attention_f16(q, 1, k, v, 1, cfg, shared_exp_lut());
    REQUIRE(out.size() == 64);
    for (size_t i = 0; i < 64; ++i) CHECK(out[i].bits == v[i].bits);
}

TEST_CASE("identical keys give the uniform average of values") {
    const auto cfg = config();
    const int64_t n_kv = 64;
    const auto q = random_halves(64, 11);
    auto k = std::vector<Half>(static_cast<size_t>(n_kv) * 64);
    const auto k_row = random_halves(64, 13);
    for (int64_t t = 0; t < n_kv; ++t) {
        std::copy(k_row.begin(), k_row.end(), k.begin() + t * 64);
    }
    const auto v = random_halves(static_cast<size_t>(n_kv) * 64, 17);

    const auto out = flash_attention_f16(q, 1, k, v, n_kv, cfg, shared_exp_lut());
    for (int64_t c = 0; c < 64; ++c) {
        double mean = 0.0;
        for (int64_t t = 0; t < n_kv; ++t) mean += v[static_cast<size_t>(t * 64 + c)].to_float();
        mean /= n_kv;
        CHECK(out[static_cast<size_t>(c)].to_float() == doctest::Approx(mean).epsilon(0.01));
    }
}

TEST_CASE("flash output tracks the fp32 reference across the grid") {
    double worst = 0.0;
    for (int64_t n_q : {1, 4, 16}) {
        for (int64_t n_kv : {128, 512}) {
            AttentionConfig cfg = config();
            const auto q = random_halves(static_cast<size_t>(n_q) * 64, 100 + n_q);
            const auto k = random_halves(static_cast<size_t>(n_kv) * 64, 200 + n_kv);
            const auto v = random_halves(static_cast<size_t>(n_kv) * 64, 300 + n_kv);
            const auto got = flash_attention_f16(q, n_q, k, v, n_kv, cfg, shared_exp_lut());
            const auto want = reference_attention_f32(q, n_q, k, v, n_kv, cfg);
            worst = std::fmax(worst, max_abs_diff(got, want));
        }
    }
    CHECK(worst <= 3e-2);
}

TEST_CASE("per-row attention weights sum to one") {
    // with V == 1 the output is exactly the normalized weight sum
    for (int64_t n_kv : {33, 128, 500}) {
        AttentionConfig cfg = config();
        const auto q = random_halves(4 * 64, 19);
        const auto k = random_halves(static_cast<size_t>(n_kv) * 64, 23);
        const std::vector<Half> ones(static_cast<size_t>(n_kv) * 64, Half(1.0f));
        const auto out = flash_attention_f16(q, 4, k, ones, n_kv, cfg, shared_exp_lut());
        for (const Half h : out) {
            CHECK(std::fabs(h.to_float() - 1.0f) <= 0x1p-8);
        }
    }
}

TEST_CASE("kv tile size does not move the result away from the reference") {
    const int64_t n_q = 4, n_kv = 300;
    const auto q = random_halves(static_cast<size_t>(n_q) * 64, 29);
    const auto k = random_halves(static_cast<size_t>(n_kv) * 64, 31);
    const auto v = random_halves(static_cast<size_t>(n_kv) * 64, 37);
    AttentionConfig cfg = config();
    const auto want = reference_attention_f32(q, n_q, k, v, n_kv, cfg);
    for (int64_t bkv : {32, 64, 128}) {
        cfg.kv_tile = bkv;
        const auto got = flash_attention_f16(q, n_q, k, v, n_kv, cfg, shared_exp_lut());
        CHECK(max_abs_diff(got, want) <= 3e-2);
    }
}

TEST_CASE("causal masking") {
    AttentionConfig cfg = config();
    cfg.causal = true;

    SUBCASE("a row before any valid key is zero with no NaN") {
        // queries 0 and 1 sit before key 0 (offset n_kv - n_q = -2)
        const int64_t n_q = 4, n_kv = 2;
        const auto q = random_halves(static_cast<size_t>(n_q) * 64, 41);
        const auto k = random_halves(static_cast<size_t>(n_kv) * 64, 43);
        const auto v = random_halves(static_cast<size_t>(n_kv) * 64, 47);
        AttentionStats stats;
        cfg.checked = true;
        const auto out = flash_attention_f16(q, n_q, k, v, n_kv, cfg, shared_exp_lut(), &stats);
        for (int64_t c = 0; c < 64; ++c) {
            CHECK(out[static_cast<size_t>(c)].bits == 0);
            CHECK(out[static_cast<size_t>(64 + c)].bits == 0);
        }
        for (const Half h : out) CHECK(!half_isnan(h));
        CHECK(stats.positive_exp_inputs == 0);

        const auto want = reference_attention_f32(q, n_q, k, v, n_kv, cfg);
        CHECK(max_abs_diff(out, want) <= 3e-2);
    }
    SUBCASE("decode alignment matches the reference") {
        const int64_t n_q = 8, n_kv = 40;
        const auto q = random_halves(static_cast<size_t>(n_q) * 64, 53);
        const auto k = random_halves(static_cast<size_t>(n_kv) * 64, 59);
        const auto v = random_halves(static_cast<size_t>(n_kv) * 64, 61);
        const auto got = flash_attention_f16(q, n_q, k, v, n_kv, cfg, shared_exp_lut());
        const auto want = reference_attention_f32(q, n_q, k, v, n_kv, cfg);
        CHECK(max_abs_diff(got, want) <= 3e-2);
    }
}

TEST_CASE("grouped-query head mapping") {
    SUBCASE("kv_heads == num_heads reduces to independent heads") {
        AttentionConfig cfg = config();
        cfg.num_heads = 4;
        cfg.kv_heads = 4;
        const int64_t n_q = 4, n_kv = 64;
        const auto q = random_halves(4 * static_cast<size_t>(n_q) * 64, 67);
        const auto k = random_halves(4 * static_cast<size_t>(n_kv) * 64, 71);
        const auto v = random_halves(4 * static_cast<size_t>(n_kv) * 64, 73);
        const auto all = flash_attention_f16(q, n_q, k, v, n_kv, cfg, shared_exp_lut());

        AttentionConfig one = config();
        for (int h = 0; h < 4; ++h) {
            const size_t qo = static_cast<size_t>(h) * n_q * 64;
            const size_t ko = static_cast<size_t>(h) * n_kv * 64;
            const auto single = flash_attention_f16(
                std::span<const Half>(q).subspan(qo, static_cast<size_t>(n_q) * 64), n_q,
                std::span<const Half>(k).subspan(ko, static_cast<size_t>(n_kv) * 64),
                std::span<const Half>(v).subspan(ko, static_cast<size_t>(n_kv) * 64), n_kv, one,
                shared_exp_lut());
            for (size_t i = 0; i < single.size(); ++i) {
                CHECK(all[qo + i].bits == single[i].bits);
            }
        }
    }
    SUBCASE("query heads share kv heads per the floor mapping") {
        AttentionConfig cfg = config();
        cfg.num_heads = 4;
        cfg.kv_heads = 2;
        const int64_t n_q = 2, n_kv = 32;
        const auto q = random_halves(4 * static_cast<size_t>(n_q) * 64, 79);
        const auto k = random_halves(2 * static_cast<size_t>(n_kv) * 64, 83);
        const auto v = random_halves(2 * static_cast<size_t>(n_kv) * 64, 89);
        const auto got = flash_attention_f16(q, n_q, k, v, n_kv, cfg, shared_exp_lut());
        const auto want = reference_attention_f32(q, n_q, k, v, n_kv, cfg);
        CHECK(max_abs_diff(got, want) <= 3e-2);

        // heads 0,1 read kv head 0; heads 2,3 read kv head 1
        AttentionConfig one = config();
        const auto head0 = flash_attention_f16(
            std::span<const Half>(q).subspan(0, static_cast<size_t>(n_q) * 64), n_q,
            std::span<const Half>(k).subspan(0, static_cast<size_t>(n_kv) * 64),
            std::span<const Half>(v).subspan(0, static_cast<size_t>(n_kv) * 64), n_kv, one,
            shared_exp_lut());
        for (size_t i = 0; i < head0.size(); ++i) CHECK(got[i].bits == head0[i].bits);
    }
}

TEST_CASE("no positive inputs ever reach the exponent table") {
    AttentionConfig cfg = config();
    cfg.checked = true;
    AttentionStats stats;
    for (int64_t n_q : {1, 4, 16}) {
        for (int64_t n_kv : {128, 512}) {
            const auto q = random_halves(static_cast<size_t>(n_q) * 64, 400 + n_q);
            const auto k = random_halves(static_cast<size_t>(n_kv) * 64, 500 + n_kv);
            const auto v = random_halves(static_cast<size_t>(n_kv) * 64, 600 + n_kv);
            (void)flash_attention_f16(q, n_q, k, v, n_kv, cfg, shared_exp_lut(), &stats);
        }
    }
    CHECK(stats.positive_exp_inputs == 0);
    CHECK(stats.exp_evals > 0);
}

TEST_CASE("softmax_row_lut") {
    const ExpLut & lut = shared_exp_lut();
    SUBCASE("s == m gives 1, s == m-1 gives 0.5") {
        const std::vector<Half> s = {Half(2.5f), Half(1.5f)};
        const auto out = softmax_row_lut(s, Half(2.5f), lut);
        CHECK(out[0].to_float() == 1.0f);
        CHECK(out[1].to_float() == 0.5f);
    }
    SUBCASE("rows match the correctly rounded exponential") {
        std::mt19937_64 rng(97);
        std::uniform_real_distribution<float> dist(-20.0f, 0.0f);
        std::vector<Half> s(64);
        for (Half & h : s) h = Half(dist(rng));
        const Half m(0.0f);
        const auto out = softmax_row_lut(s, m, lut);
        for (size_t i = 0; i < s.size(); ++i) {
            // the LUT path is exact given the FP16-rounded difference
            const float diff = Half(s[i].to_float() - 0.0f).to_float();
            CHECK(out[i].bits == oracle::exp2_to_half_bits(diff));
        }
    }
}

TEST_CASE("polynomial arm stays close to the table arm") {
    AttentionConfig cfg = config();
    const auto q = random_halves(4 * 64, 101);
    const auto k = random_halves(128 * 64, 103);
    const auto v = random_halves(128 * 64, 107);
    const auto with_lut = flash_attention_f16(q, 4, k, v, 128, cfg, shared_exp_lut());
    cfg.exp_mode = ExpMode::poly;
    const auto with_poly = flash_attention_f16(q, 4, k, v, 128, cfg, shared_exp_lut());
    for (size_t i = 0; i < with_lut.size(); ++i) {
        CHECK(std::fabs(with_lut[i].to_float() - with_poly[i].to_float()) <= 1e-2);
    }
}

TEST_CASE("attention is deterministic across thread counts") {
    AttentionConfig cfg = config();
    cfg.num_heads = 4;
    cfg.kv_heads = 4;
    const auto q = random_halves(4 * 40 * 64, 109);
    const auto k = random_halves(4 * 250 * 64, 113);
    const auto v = random_halves(4 * 250 * 64, 127);
    set_num_threads(1);
    const auto o1 = flash_attention_f16(q, 40, k, v, 250, cfg, shared_exp_lut());
    set_num_threads(4);
    const auto o4 = flash_attention_f16(q, 40, k, v, 250, cfg, shared_exp_lut());
    set_num_threads(1);
    REQUIRE(o1.size() == o4.size());
    for (size_t i = 0; i < o1.size(); ++i) CHECK(o1[i].bits == o4[i].bits);
}

TEST_CASE("shape validation") {
    AttentionConfig cfg = config(48); // not a multiple of 32
    const auto q = random_halves(48, 1);
    CHECK_THROWS_AS((void)flash_attention_f16(q, 1, q, q, 1, cfg, shared_exp_lut()),
                    validation_error);
    AttentionConfig ok = config();
    CHECK_THROWS_AS((void)flash_attention_f16(q, 1, q, q, 1, ok, shared_exp_lut()),
                    validation_error); // sizes do not match 64
}
