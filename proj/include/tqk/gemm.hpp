#pragma once

#include "tqk/half.hpp"
#include "tqk/quantize.hpp"
#include "tqk/tile_layout.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace tqk {

// Per-output-channel epilogue applied after the full K accumulation, in
// FP32, before the single rounding to FP16.
struct TileGemmParams {
    std::optional<std::vector<Half>> per_channel_scale; // size N
    std::optional<std::vector<Half>> per_channel_bias;  // size N
};

// Operation-count proxies; wall clock lives in the bench harness.
struct GemmStats {
    uint64_t weight_elements_visited = 0; // weight elements dequantized/read
    uint64_t positioned_writes = 0;       // single-element scatter stores
    uint64_t lut_decodes = 0;             // 4-bit codebook lookups
    uint64_t macs = 0;
};

// Emulated matrix-unit GEMM: FP16 in/out, FP32 accumulation, fixed order
// (K tiles ascending, k within a tile ascending), per-channel scale/bias
// fused into the output rounding. Bit-exact for any thread count.
TiledF16Matrix tile_gemm_f16(const TiledF16Matrix & a, const TiledF16Matrix & w,
                             const TileGemmParams & p = {}, GemmStats * stats = nullptr);

enum class DequantPath {
    tiled,            // decode once, straight into tiled order
    scatter_baseline, // conventional groups decoded then scattered element-wise
};

// Mixed-precision GEMM over quantized weights. Numerically identical to
// dequantize + tile_gemm_f16; the path only changes memory movement and the
// counters. Tile grouping requires the tiled path, conventional grouping the
// scatter baseline.
TiledF16Matrix gemm_quant(const TiledF16Matrix & a, const QuantTensor & wq,
                          const TileGemmParams & p = {}, DequantPath path = DequantPath::tiled,
                          GemmStats * stats = nullptr);

// FP64 oracle: textbook triple loop over row-major inputs.
std::vector<double> reference_gemm(std::span<const double> a, int64_t m, int64_t k,
                                   std::span<const double> w, int64_t n);

} // namespace tqk
