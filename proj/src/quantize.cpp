#include "tqk/quantize.hpp"

#include "tqk/errors.hpp"
#include "tqk/parallel.hpp"

#include <cmath>

namespace tqk {

namespace {

DecodeLut16 make_linear_table() {
    DecodeLut16 t;
    for (int i = 0; i < 16; ++i) t.values[static_cast<size_t>(i)] = Half(static_cast<float>(i - 8));
    return t;
}

DecodeLut16 make_nf4_table() {
    // NormalFloat4 levels
    static const float v[16] = {
        -1.0f, -0.6961928009986877f, -0.5250730514526367f, -0.39491748809814453f,
        -0.28444138169288635f, -0.18477343022823334f, -0.09105003625154495f, 0.0f,
        0.07958029955625534f, 0.16093020141124725f, 0.24611230194568634f, 0.33791524171829224f,
        0.44070982933044434f, 0.5626170039176941f, 0.7229568362236023f, 1.0f,
    };
    DecodeLut16 t;
    for (int i = 0; i < 16; ++i) t.values[static_cast<size_t>(i)] = Half(v[i]);
    return t;
}

DecodeLut16 make_iq4_nl_table() {
    static const float v[16] = {
        -127.f, -104.f, -83.f, -65.f, -49.f, -35.f, -22.f, -10.f,
        1.f, 13.f, 25.f, 38.f, 53.f, 69.f, 89.f, 113.f,
    };
    DecodeLut16 t;
    for (int i = 0; i < 16; ++i) t.values[static_cast<size_t>(i)] = Half(v[i]);
    return t;
}

int64_t padded_col_major_index(int64_t r, int64_t c, int64_t padded_rows) {
    return c * padded_rows + r;
}

} // namespace

const DecodeLut16 & codebook_table(Codebook cb) {
    static const DecodeLut16 linear = make_linear_table();
    static const DecodeLut16 nf4 = make_nf4_table();
    static const DecodeLut16 iq4 = make_iq4_nl_table();
    switch (cb) {
        case Codebook::q4_linear: return linear;
        case Codebook::nf4: return nf4;
        case Codebook::iq4_nl: return iq4;
    }
    throw validation_error("unknown codebook");
}

size_t QuantTensor::payload_bytes() const {
    if (coalesced) return q4_super.size() * kSuperBlockBytes;
    if (scheme == QuantScheme::q4_0) return q4.size() * kBlockQ4Bytes;
    return q8.size() * kBlockQ8Bytes;
}

BlockQ4_0 quantize_group_q4_0(std::span<const float> g) {
    if (g.size() != kGroupSize) throw validation_error("q4_0 group must have 32 elements");

    float amax = 0.0f;
    float max = 0.0f; // signed value of the max-magnitude element
    for (float x : g) {
        const float ax = std::fabs(x);
        if (ax > amax) {
            amax = ax;
            max = x;
        }
    }

    BlockQ4_0 b;
    const float scale = max / -8.0f;
    b.scale = Half(scale);
    const float inv = scale != 0.0f ? 1.0f / scale : 0.0f;

    uint8_t codes[32];
    for (int64_t i = 0; i < kGroupSize; ++i) {
        const float q = std::nearbyintf(g[static_cast<size_t>(i)] * inv) + 8.0f;
        codes[i] = static_cast<uint8_t>(q < 0.0f ? 0.0f : (q > 15.0f ? 15.0f : q));
    }
    for (size_t j = 0; j < 16; ++j) {
        b.qs[j] = static_cast<uint8_t>(codes[j] | (codes[j + 16] << 4));
    }
    return b;
}

BlockQ8_0 quantize_group_q8_0(std::span<const float> g) {
    if (g.size() != kGroupSize) throw validation_error("q8_0 group must have 32 elements");

    float amax = 0.0f;
    for (float x : g) amax = std::fmax(amax, std::fabs(x));

    BlockQ8_0 b;
    const float scale = amax / 127.0f;
    b.scale = Half(scale);
    const float inv = scale != 0.0f ? 1.0f / scale : 0.0f;

    for (int64_t i = 0; i < kGroupSize; ++i) {
        const float q = std::nearbyintf(g[static_cast<size_t>(i)] * inv);
        b.qs[static_cast<size_t>(i)] = static_cast<int8_t>(q < -127.0f ? -127.0f : (q > 127.0f ? 127.0f : q));
    }
    return b;
}

void dequantize_group_q4_0(const BlockQ4_0 & b, const DecodeLut16 & lut, std::span<Half> out) {
    const float scale = b.scale.to_float();
    for (int64_t i = 0; i < kGroupSize; ++i) {
        out[static_cast<size_t>(i)] = Half(lut.values[static_cast<size_t>(q4_code(b, i))].to_float() * scale);
    }
}

void dequantize_group_q8_0(const BlockQ8_0 & b, std::span<Half> out) {
    const float scale = b.scale.to_float();
    for (int64_t i = 0; i < kGroupSize; ++i) {
        out[static_cast<size_t>(i)] = Half(static_cast<float>(b.qs[static_cast<size_t>(i)]) * scale);
    }
}

std::array<Half, 32> dequantize_block_lut(const BlockQ4_0 & b, const DecodeLut16 & lut) {
    std::array<Half, 32> out;
    dequantize_group_q4_0(b, lut, out);
    return out;
}

std::array<Half, 256> dequantize_block_lut(const SuperBlockQ4 & s, const DecodeLut16 & lut) {
    std::array<Half, 256> out;
    for (int64_t g = 0; g < kSuperGroups; ++g) {
        const float scale = s.scales[static_cast<size_t>(g)].to_float();
        for (int64_t i = 0; i < kGroupSize; ++i) {
            const int64_t e = g * kGroupSize + i;
            out[static_cast<size_t>(e)] =
                Half(lut.values[static_cast<size_t>(super_q4_code(s, e))].to_float() * scale);
        }
    }
    return out;
}

QuantTensor quantize_tensor(const HalfMatrix & m, QuantScheme scheme, Grouping grouping) {
    if (m.rows < 1 || m.cols < 1) throw validation_error("quantize_tensor: dimensions must be >= 1");

    QuantTensor q;
    q.rows = m.rows;
    q.cols = m.cols;
    q.padded_rows = ceil_to_tile(m.rows);
    q.padded_cols = ceil_to_tile(m.cols);
    q.scheme = scheme;
    q.grouping = grouping;

    // stage the padded buffer in group order so quantization is one linear pass
    std::vector<float> staged(static_cast<size_t>(q.padded_elems()), 0.0f);
    if (grouping == Grouping::tile) {
        for (int64_t r = 0; r < m.rows; ++r) {
            for (int64_t c = 0; c < m.cols; ++c) {
                staged[static_cast<size_t>(tiled_offset(r, c, q.padded_rows))] = m.at(r, c).to_float();
            }
        }
    } else {
        for (int64_t r = 0; r < m.rows; ++r) {
            for (int64_t c = 0; c < m.cols; ++c) {
                staged[static_cast<size_t>(padded_col_major_index(r, c, q.padded_rows))] = m.at(r, c).to_float();
            }
        }
    }

    const int64_t blocks = q.block_count();
    if (scheme == QuantScheme::q4_0) {
        q.q4.resize(static_cast<size_t>(blocks));
        parallel_for(blocks, [&](int64_t b) {
            q.q4[static_cast<size_t>(b)] =
                quantize_group_q4_0(std::span<const float>(staged.data() + b * kGroupSize, kGroupSize));
        });
    } else {
        q.q8.resize(static_cast<size_t>(blocks));
        parallel_for(blocks, [&](int64_t b) {
            q.q8[static_cast<size_t>(b)] =
                quantize_group_q8_0(std::span<const float>(staged.data() + b * kGroupSize, kGroupSize));
        });
    }
    return q;
}

QuantTensor coalesce_super_blocks(const QuantTensor & q) {
    if (q.scheme != QuantScheme::q4_0 || q.grouping != Grouping::tile) {
        throw validation_error("coalesce_super_blocks: requires q4_0 tensor with tile grouping");
    }
    if (q.coalesced) throw validation_error("coalesce_super_blocks: already coalesced");
    if (q.block_count() % kSuperGroups != 0) {
        throw validation_error("coalesce_super_blocks: block count not divisible by 8");
    }

    QuantTensor out = q;
    out.q4.clear();
    out.coalesced = true;
    out.q4_super.resize(static_cast<size_t>(q.block_count() / kSuperGroups));

    parallel_for(static_cast<int64_t>(out.q4_super.size()), [&](int64_t s) {
        SuperBlockQ4 & sb = out.q4_super[static_cast<size_t>(s)];
        const BlockQ4_0 * groups = q.q4.data() + s * kSuperGroups;
        for (int64_t e = 0; e < kSuperElems; e += 2) {
            const int lo = q4_code(groups[e / kGroupSize], e % kGroupSize);
            const int hi = q4_code(groups[(e + 1) / kGroupSize], (e + 1) % kGroupSize);
            sb.qs[static_cast<size_t>(e >> 1)] = static_cast<uint8_t>(lo | (hi << 4));
        }
        for (int64_t g = 0; g < kSuperGroups; ++g) {
            sb.scales[static_cast<size_t>(g)] = groups[g].scale;
        }
    });
    return out;
}

QuantTensor uncoalesce_super_blocks(const QuantTensor & q) {
    if (!q.coalesced) throw validation_error("uncoalesce_super_blocks: tensor is not coalesced");

    QuantTensor out = q;
    out.q4_super.clear();
    out.coalesced = false;
    out.q4.resize(static_cast<size_t>(q.block_count()));

    parallel_for(static_cast<int64_t>(q.q4_super.size()), [&](int64_t s) {
        const SuperBlockQ4 & sb = q.q4_super[static_cast<size_t>(s)];
        for (int64_t g = 0; g < kSuperGroups; ++g) {
            BlockQ4_0 & blk = out.q4[static_cast<size_t>(s * kSuperGroups + g)];
            blk.scale = sb.scales[static_cast<size_t>(g)];
            uint8_t codes[32];
            for (int64_t i = 0; i < kGroupSize; ++i) {
                codes[i] = static_cast<uint8_t>(super_q4_code(sb, g * kGroupSize + i));
            }
            for (size_t j = 0; j < 16; ++j) {
                blk.qs[j] = static_cast<uint8_t>(codes[j] | (codes[j + 16] << 4));
            }
        }
    });
    return out;
}

TiledF16Matrix dequantize_to_tiled(const QuantTensor & q) {
    if (q.grouping != Grouping::tile) {
        throw validation_error("dequantize_to_tiled: tensor does not use tile grouping");
    }
    TiledF16Matrix t = make_tiled(q.rows, q.cols);
    const DecodeLut16 & lut = codebook_table(q.codebook);

    if (q.coalesced) {
        parallel_for(static_cast<int64_t>(q.q4_super.size()), [&](int64_t s) {
            const auto vals = dequantize_block_lut(q.q4_super[static_cast<size_t>(s)], lut);
            std::copy(vals.begin(), vals.end(), t.data.begin() + s * kSuperElems);
        });
    } else if (q.scheme == QuantScheme::q4_0) {
        parallel_for(q.block_count(), [&](int64_t b) {
            dequantize_group_q4_0(q.q4[static_cast<size_t>(b)], lut,
                                  std::span<Half>(t.data.data() + b * kGroupSize, kGroupSize));
        });
    } else {
        parallel_for(q.block_count(), [&](int64_t b) {
            dequantize_group_q8_0(q.q8[static_cast<size_t>(b)],
                                  std::span<Half>(t.data.data() + b * kGroupSize, kGroupSize));
        });
    }
    return t;
}

std::vector<Half> dequantize_to_columns(const QuantTensor & q) {
    if (q.grouping != Grouping::conventional) {
        throw validation_error("dequantize_to_columns: tensor does not use conventional grouping");
    }
    std::vector<Half> cm(static_cast<size_t>(q.padded_elems()));
    const DecodeLut16 & lut = codebook_table(q.codebook);

    if (q.scheme == QuantScheme::q4_0) {
        parallel_for(q.block_count(), [&](int64_t b) {
            dequantize_group_q4_0(q.q4[static_cast<size_t>(b)], lut,
                                  std::span<Half>(cm.data() + b * kGroupSize, kGroupSize));
        });
    } else {
        parallel_for(q.block_count(), [&](int64_t b) {
            dequantize_group_q8_0(q.q8[static_cast<size_t>(b)],
                                  std::span<Half>(cm.data() + b * kGroupSize, kGroupSize));
        });
    }
    return cm;
}

HalfMatrix dequantize_tensor(const QuantTensor & q) {
    if (q.grouping == Grouping::tile) {
        return from_tiled(dequantize_to_tiled(q));
    }
    const std::vector<Half> cm = dequantize_to_columns(q);
    HalfMatrix m = make_half_matrix(q.rows, q.cols);
    for (int64_t c = 0; c < q.cols; ++c) {
        for (int64_t r = 0; r < q.rows; ++r) {
            m.at(r, c) = cm[static_cast<size_t>(padded_col_major_index(r, c, q.padded_rows))];
        }
    }
    return m;
}

} // namespace tqk
