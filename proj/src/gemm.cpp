#include "tqk/gemm.hpp"

#include "tqk/errors.hpp"
#include "tqk/parallel.hpp"

namespace tqk {

namespace {

void unpack_tile(const Half * tile, float out[kTileDim][kTileDim]) {
    for (int64_t r = 0; r < kTileDim; ++r) {
        for (int64_t c = 0; c < kTileDim; ++c) {
            out[r][c] = tile[intra_tile_offset(r, c)].to_float();
        }
    }
}

void validate_epilogue(const TileGemmParams & p, int64_t n) {
    if (p.per_channel_scale && static_cast<int64_t>(p.per_channel_scale->size()) != n) {
        throw validation_error("per_channel_scale size must equal N");
    }
    if (p.per_channel_bias && static_cast<int64_t>(p.per_channel_bias->size()) != n) {
        throw validation_error("per_channel_bias size must equal N");
    }
}

} // namespace

TiledF16Matrix tile_gemm_f16(const TiledF16Matrix & a, const TiledF16Matrix & w,
                             const TileGemmParams & p, GemmStats * stats) {
    if (a.cols != w.rows) {
        throw validation_error("tile_gemm_f16: inner dimensions do not match");
    }
    const int64_t m = a.rows, n = w.cols;
    validate_epilogue(p, n);

    TiledF16Matrix out = make_tiled(m, n);
    const int64_t n_ti = out.tile_rows();
    const int64_t n_tj = out.tile_cols();
    const int64_t n_tk = a.tile_cols();

    parallel_for(n_ti * n_tj, [&](int64_t t) {
        const int64_t ti = t % n_ti; // column-major over the output tile grid
        const int64_t tj = t / n_ti;

        float acc[kTileDim][kTileDim] = {};
        float at[kTileDim][kTileDim];
        float wt[kTileDim][kTileDim];

        for (int64_t tk = 0; tk < n_tk; ++tk) { // ascending K tiles
            unpack_tile(a.data.data() + a.tile_base(ti, tk), at);
            unpack_tile(w.data.data() + w.tile_base(tk, tj), wt);
            for (int64_t r = 0; r < kTileDim; ++r) {
                for (int64_t c = 0; c < kTileDim; ++c) {
                    float s = acc[r][c];
                    for (int64_t kk = 0; kk < kTileDim; ++kk) { // ascending k
                        s += at[r][kk] * wt[kk][c];
                    }
                    acc[r][c] = s;
                }
            }
        }

        Half * dst = out.data.data() + out.tile_base(ti, tj);
        for (int64_t r = 0; r < kTileDim; ++r) {
            const int64_t gr = ti * kTileDim + r;
            for (int64_t c = 0; c < kTileDim; ++c) {
                const int64_t gc = tj * kTileDim + c;
                Half v; // padding stays zero
                if (gr < m && gc < n) {
                    float x = acc[r][c];
                    if (p.per_channel_scale) x *= (*p.per_channel_scale)[static_cast<size_t>(gc)].to_float();
                    if (p.per_channel_bias) x += (*p.per_channel_bias)[static_cast<size_t>(gc)].to_float();
                    v = Half(x);
                }
                dst[intra_tile_offset(r, c)] = v;
            }
        }
    });

    if (stats) {
        stats->macs += static_cast<uint64_t>(n_ti * n_tj * n_tk) * kTileElems * kTileDim;
    }
    return out;
}

TiledF16Matrix gemm_quant(const TiledF16Matrix & a, const QuantTensor & wq,
                          const TileGemmParams & p, DequantPath path, GemmStats * stats) {
    if (a.cols != wq.rows) {
        throw validation_error("gemm_quant: inner dimensions do not match");
    }

    const uint64_t w_elems = static_cast<uint64_t>(wq.padded_elems());
    const uint64_t decodes = wq.scheme == QuantScheme::q4_0 ? w_elems : 0;

    TiledF16Matrix w;
    if (path == DequantPath::tiled) {
        if (wq.grouping != Grouping::tile) {
            throw validation_error("gemm_quant: tiled path requires tile grouping");
        }
        // one linear decode pass; every weight element is produced exactly once
        w = dequantize_to_tiled(wq);
        if (stats) {
            stats->weight_elements_visited += w_elems;
            stats->lut_decodes += decodes;
        }
    } else {
        if (wq.grouping != Grouping::conventional) {
            throw validation_error("gemm_quant: scatter baseline requires conventional grouping");
        }
        // decode the column-major groups, then place every element with an
        // individual positioned store into the tiled buffer
        const std::vector<Half> cm = dequantize_to_columns(wq);
        w = make_tiled(wq.rows, wq.cols);
        uint64_t writes = 0;
        for (int64_t c = 0; c < wq.padded_cols; ++c) {
            for (int64_t r = 0; r < wq.padded_rows; ++r) {
                w.data[static_cast<size_t>(tiled_offset(r, c, wq.padded_rows))] =
                    cm[static_cast<size_t>(c * wq.padded_rows + r)];
                ++writes;
            }
        }
        if (stats) {
            stats->weight_elements_visited += w_elems;
            stats->lut_decodes += decodes;
            stats->positioned_writes += writes;
        }
    }
    return tile_gemm_f16(a, w, p, stats);
}

std::vector<double> reference_gemm(std::span<const double> a, int64_t m, int64_t k,
                                   std::span<const double> w, int64_t n) {
    if (static_cast<int64_t>(a.size()) != m * k || static_cast<int64_t>(w.size()) != k * n) {
        throw validation_error("reference_gemm: buffer sizes do not match shape");
    }
    std::vector<double> out(static_cast<size_t>(m * n), 0.0);
    for (int64_t i = 0; i < m; ++i) {
        for (int64_t j = 0; j < n; ++j) {
            double s = 0.0;
            for (int64_t kk = 0; kk < k; ++kk) {
                s += a[static_cast<size_t>(i * k + kk)] * w[static_cast<size_t>(kk * n + j)];
            }
            out[static_cast<size_t>(i * n + j)] = s;
        }
    }
    return out;
}

} // namespace tqk
