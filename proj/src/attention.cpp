#include "tqk/attention.hpp"

#include "tqk/errors.hpp"
#include "tqk/parallel.hpp"

#include <cmath>

namespace tqk {

namespace {

constexpr float kLog2e = 1.4426950408889634f;

void validate(const AttentionConfig & cfg, size_t q_size, int64_t n_q,
              size_t k_size, size_t v_size, int64_t n_kv) {
    if (cfg.head_dim < 32 || cfg.head_dim % 32 != 0) {
        throw validation_error("attention: head_dim must be a positive multiple of 32");
    }
    if (cfg.q_tile < 32 || cfg.q_tile % 32 != 0 || cfg.kv_tile < 32 || cfg.kv_tile % 32 != 0) {
        throw validation_error("attention: tile sizes must be positive multiples of 32");
    }
    if (cfg.num_heads < 1 || cfg.kv_heads < 1 || cfg.kv_heads > cfg.num_heads) {
        throw validation_error("attention: bad head configuration");
    }
    if (n_q < 1 || n_kv < 1) {
        throw validation_error("attention: sequence lengths must be >= 1");
    }
    const size_t want_q = static_cast<size_t>(cfg.num_heads) * n_q * cfg.head_dim;
    const size_t want_kv = static_cast<size_t>(cfg.kv_heads) * n_kv * cfg.head_dim;
    if (q_size != want_q || k_size != want_kv || v_size != want_kv) {
        throw validation_error("attention: tensor sizes do not match shape");
    }
}

inline int kv_head_of(int h, const AttentionConfig & cfg) {
    return static_cast<int>(static_cast<int64_t>(h) * cfg.kv_heads / cfg.num_heads);
}

} // namespace

float AttentionConfig::scale() const {
    return kLog2e / std::sqrt(static_cast<float>(head_dim));
}

std::vector<Half> flash_attention_f16(std::span<const Half> q, int64_t n_q,
                                      std::span<const Half> k, std::span<const Half> v, int64_t n_kv,
                                      const AttentionConfig & cfg, const ExpLut & lut,
                                      AttentionStats * stats) {
    validate(cfg, q.size(), n_q, k.size(), v.size(), n_kv);

    const int64_t d = cfg.head_dim;
    const float scale = cfg.scale();
    const int64_t causal_offset = n_kv - n_q; // query row r attends keys <= r + offset

    std::vector<Half> out(static_cast<size_t>(cfg.num_heads) * n_q * d, Half{});

    const int64_t q_tiles = (n_q + cfg.q_tile - 1) / cfg.q_tile;
    const int64_t tasks = cfg.num_heads * q_tiles;
    std::vector<AttentionStats> partials(static_cast<size_t>(tasks));

    parallel_for(tasks, [&](int64_t task) {
        AttentionStats & st = partials[static_cast<size_t>(task)];
        const int h = static_cast<int>(task / q_tiles);
        const int64_t qt = task % q_tiles;
        const int64_t q0 = qt * cfg.q_tile;
        const int64_t q1 = std::min(q0 + cfg.q_tile, n_q);
        const int64_t rows = q1 - q0;

        const Half * qh = q.data() + (static_cast<size_t>(h) * n_q + q0) * d;
        const Half * kh = k.data() + static_cast<size_t>(kv_head_of(h, cfg)) * n_kv * d;
        const Half * vh = v.data() + static_cast<size_t>(kv_head_of(h, cfg)) * n_kv * d;

        auto exp_eval = [&](Half arg) {
            if (cfg.checked && arg.to_float() > 0.0f) ++st.positive_exp_inputs;
            if (cfg.exp_mode == ExpMode::lut) return lut_exp2(arg, lut);
            return Half(exp2_poly(arg.to_float()));
        };

        std::vector<Half> m(static_cast<size_t>(rows), half_neg_inf());
        std::vector<Half> l(static_cast<size_t>(rows), Half{});
        std::vector<Half> o(static_cast<size_t>(rows * d), Half{});
        std::vector<Half> s_tile(static_cast<size_t>(rows * cfg.kv_tile));
        std::vector<Half> p_row(static_cast<size_t>(cfg.kv_tile));

        for (int64_t kv0 = 0; kv0 < n_kv; kv0 += cfg.kv_tile) {
            const int64_t kv1 = std::min(kv0 + cfg.kv_tile, n_kv);
            const int64_t width = kv1 - kv0;

            // S = scale * Q K^T, FP32 accumulation, stored FP16
            for (int64_t r = 0; r < rows; ++r) {
                const int64_t limit = cfg.causal ? q0 + r + causal_offset : n_kv;
                Half * s_row = s_tile.data() + r * cfg.kv_tile;
                for (int64_t t = 0; t < width; ++t) {
                    if (kv0 + t > limit) {
                        s_row[t] = half_neg_inf(); // additive mask
                        continue;
                    }
                    float acc = 0.0f;
                    const Half * qr = qh + r * d;
                    const Half * kr = kh + (kv0 + t) * d;
                    for (int64_t e = 0; e < d; ++e) {
                        acc += qr[e].to_float() * kr[e].to_float();
                    }
                    s_row[t] = Half(acc * scale);
                    st.qk_macs += static_cast<uint64_t>(d);
                }
            }

            for (int64_t r = 0; r < rows; ++r) {
                const Half * s_row = s_tile.data() + r * cfg.kv_tile;
                Half row_max = half_neg_inf();
                for (int64_t t = 0; t < width; ++t) row_max = half_max(row_max, s_row[t]);

                const Half m_old = m[static_cast<size_t>(r)];
                const Half m_new = half_max(m_old, row_max);
                if (m_new.bits == kHalfNegInfBits) {
                    continue; // row fully masked so far
                }
                m[static_cast<size_t>(r)] = m_new;

                const Half rescale = exp_eval(Half(m_old.to_float() - m_new.to_float()));
                ++st.rescale_evals;

                float row_sum = 0.0f;
                for (int64_t t = 0; t < width; ++t) {
                    const Half p = exp_eval(Half(s_row[t].to_float() - m_new.to_float()));
                    p_row[static_cast<size_t>(t)] = p;
                    row_sum += p.to_float();
                    ++st.exp_evals;
                }
                l[static_cast<size_t>(r)] =
                    Half(rescale.to_float() * l[static_cast<size_t>(r)].to_float() + row_sum);

                Half * o_row = o.data() + r * d;
                const float rescale_f = rescale.to_float();
                for (int64_t c = 0; c < d; ++c) {
                    float acc = rescale_f * o_row[c].to_float();
                    for (int64_t t = 0; t < width; ++t) {
                        acc += p_row[static_cast<size_t>(t)].to_float() * vh[(kv0 + t) * d + c].to_float();
                    }
                    o_row[c] = Half(acc);
                }
                st.pv_macs += static_cast<uint64_t>(width * d);
            }
        }

        Half * dst = out.data() + (static_cast<size_t>(h) * n_q + q0) * d;
        for (int64_t r = 0; r < rows; ++r) {
            const Half lr = l[static_cast<size_t>(r)];
            const bool empty = (lr.bits & 0x7FFFu) == 0; // fully masked row
            for (int64_t c = 0; c < d; ++c) {
                dst[r * d + c] = empty ? Half{} : Half(o[r * d + c].to_float() / lr.to_float());
            }
        }
    });

    if (stats) {
        for (const AttentionStats & st : partials) {
            stats->exp_evals += st.exp_evals;
            stats->rescale_evals += st.rescale_evals;
            stats->positive_exp_inputs += st.positive_exp_inputs;
            stats->qk_macs += st.qk_macs;
            stats->pv_macs += st.pv_macs;
        }
    }
    return out;
}

std::vector<float> reference_attention_f32(std::span<const Half> q, int64_t n_q,
                                           std::span<const Half> k, std::span<const Half> v, int64_t n_kv,
                                           const AttentionConfig & cfg) {
    validate(cfg, q.size(), n_q, k.size(), v.size(), n_kv);

    const int64_t d = cfg.head_dim;
    const float scale = 1.0f / std::sqrt(static_cast<float>(d));
    const int64_t causal_offset = n_kv - n_q;

    std::vector<float> out(static_cast<size_t>(cfg.num_heads) * n_q * d, 0.0f);
    std::vector<float> logits(static_cast<size_t>(n_kv));

    for (int h = 0; h < cfg.num_heads; ++h) {
        const Half * qh = q.data() + static_cast<size_t>(h) * n_q * d;
        const Half * kh = k.data() + static_cast<size_t>(kv_head_of(h, cfg)) * n_kv * d;
        const Half * vh = v.data() + static_cast<size_t>(kv_head_of(h, cfg)) * n_kv * d;

        for (int64_t r = 0; r < n_q; ++r) {
            const int64_t limit = cfg.causal ? r + causal_offset : n_kv - 1;
            float mx = -INFINITY;
            for (int64_t t = 0; t < n_kv; ++t) {
                if (t > limit) break;
                float acc = 0.0f;
                for (int64_t e = 0; e < d; ++e) {
                    acc += qh[r * d + e].to_float() * kh[t * d + e].to_float();
                }
                logits[static_cast<size_t>(t)] = acc * scale;
                mx = std::fmax(mx, logits[static_cast<size_t>(t)]);
            }
            if (std::isinf(mx)) {
                continue; // fully masked row stays zero
            }
            float sum = 0.0f;
            for (int64_t t = 0; t <= limit && t < n_kv; ++t) {
                logits[static_cast<size_t>(t)] = std::exp(logits[static_cast<size_t>(t)] - mx);
                sum += logits[static_cast<size_t>(t)];
            }
            float * dst = out.data() + (static_cast<size_t>(h) * n_q + r) * d;
            for (int64_t c = 0; c < d; ++c) {
                float acc = 0.0f;
                for (int64_t t = 0; t <= limit && t < n_kv; ++t) {
                    acc += logits[static_cast<size_t>(t)] * vh[t * d + c].to_float();
                }
                dst[c] = acc / sum;
            }
        }
    }
    return out;
}

std::vector<Half> softmax_row_lut(std::span<const Half> s, Half m, const ExpLut & lut) {
    std::vector<Half> out(s.size());
    for (size_t i = 0; i < s.size(); ++i) {
        out[i] = lut_exp2(Half(s[i].to_float() - m.to_float()), lut);
    }
    return out;
}

} // namespace tqk
