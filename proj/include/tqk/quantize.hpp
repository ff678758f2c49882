#pragma once

#include "tqk/half.hpp"
#include "tqk/tile_layout.hpp"

#include <array>
#include <cstdint>
#include <span>
#include <vector>

namespace tqk {

inline constexpr int64_t kGroupSize = 32;      // weights per quantization group
inline constexpr int64_t kSuperGroups = 8;     // groups per super-block
inline constexpr int64_t kSuperElems = kGroupSize * kSuperGroups; // 256

enum class QuantScheme : uint8_t { q4_0 = 0, q8_0 = 1 };
enum class Grouping : uint8_t { conventional = 0, tile = 1 };

// 4-bit codebooks: code -> value before scaling. The quantizer always emits
// linear round-to-nearest codes; alternate tables only change decoding.
enum class Codebook : uint8_t { q4_linear = 0, nf4 = 1, iq4_nl = 2 };

struct DecodeLut16 {
    std::array<Half, 16> values{};
};

const DecodeLut16 & codebook_table(Codebook cb);

// 32 weights, 18 bytes serialized: FP16 scale then 16 code bytes.
// Byte j holds code j in the low nibble and code j+16 in the high nibble.
struct BlockQ4_0 {
    Half scale;
    std::array<uint8_t, 16> qs{};
};

inline int q4_code(const BlockQ4_0 & b, int64_t e) {
    return e < 16 ? (b.qs[static_cast<size_t>(e)] & 0x0F) : (b.qs[static_cast<size_t>(e - 16)] >> 4);
}

// 32 weights, 34 bytes serialized: FP16 scale then 32 signed code bytes.
struct BlockQ8_0 {
    Half scale;
    std::array<int8_t, 32> qs{};
};

// 8 coalesced Q4_0 groups: 256 codes packed into 128 bytes (byte i = code 2i
// low nibble, code 2i+1 high nibble) followed by the 8 group scales.
// 144 bytes serialized.
struct SuperBlockQ4 {
    std::array<uint8_t, 128> qs{};
    std::array<Half, 8> scales{};
};

inline int super_q4_code(const SuperBlockQ4 & s, int64_t e) {
    const uint8_t byte = s.qs[static_cast<size_t>(e >> 1)];
    return (e & 1) ? (byte >> 4) : (byte & 0x0F);
}

inline constexpr size_t kBlockQ4Bytes = 18;
inline constexpr size_t kBlockQ8Bytes = 34;
inline constexpr size_t kSuperBlockBytes = 144;

// Group-quantized weight tensor in either memory order. Blocks follow the
// tiled element order for tile grouping, or column-major runs of 32 along
// the accumulation axis for the conventional baseline. Both dimensions are
// padded to tile multiples so the two groupings cover identical buffers.
struct QuantTensor {
    int64_t rows = 0;
    int64_t cols = 0;
    int64_t padded_rows = 0;
    int64_t padded_cols = 0;
    QuantScheme scheme = QuantScheme::q4_0;
    Grouping grouping = Grouping::tile;
    bool coalesced = false;
    Codebook codebook = Codebook::q4_linear;

    std::vector<BlockQ4_0> q4;
    std::vector<BlockQ8_0> q8;
    std::vector<SuperBlockQ4> q4_super;

    int64_t padded_elems() const { return padded_rows * padded_cols; }
    int64_t block_count() const { return padded_elems() / kGroupSize; }
    size_t payload_bytes() const;
};

// scale = max-magnitude element / -8 (sign kept so the extreme maps to code
// 0); all-zero groups get scale 0 and neutral codes
BlockQ4_0 quantize_group_q4_0(std::span<const float> g);
BlockQ8_0 quantize_group_q8_0(std::span<const float> g);

void dequantize_group_q4_0(const BlockQ4_0 & b, const DecodeLut16 & lut, std::span<Half> out);
void dequantize_group_q8_0(const BlockQ8_0 & b, std::span<Half> out);

std::array<Half, 32> dequantize_block_lut(const BlockQ4_0 & b, const DecodeLut16 & lut);
std::array<Half, 256> dequantize_block_lut(const SuperBlockQ4 & s, const DecodeLut16 & lut);

QuantTensor quantize_tensor(const HalfMatrix & m, QuantScheme scheme, Grouping grouping);

// Lossless repack of 8 consecutive Q4_0 tile groups into one super-block.
QuantTensor coalesce_super_blocks(const QuantTensor & q);
QuantTensor uncoalesce_super_blocks(const QuantTensor & q);

// tile grouping decodes straight into tiled order (no scatter)
TiledF16Matrix dequantize_to_tiled(const QuantTensor & q);

// conventional grouping decodes into a padded column-major buffer
std::vector<Half> dequantize_to_columns(const QuantTensor & q);

// logical row-major view for either grouping
HalfMatrix dequantize_tensor(const QuantTensor & q);

} // namespace tqk
