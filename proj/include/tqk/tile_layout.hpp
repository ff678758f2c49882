#pragma once

#include "tqk/half.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace tqk {

inline constexpr int64_t kTileDim = 32;
inline constexpr int64_t kTileElems = kTileDim * kTileDim;
inline constexpr int64_t kTileBytes = kTileElems * 2; // 2048

// Row-major FP16 matrix.
struct HalfMatrix {
    int64_t rows = 0;
    int64_t cols = 0;
    std::vector<Half> data; // rows * cols

    Half at(int64_t r, int64_t c) const { return data[r * cols + c]; }
    Half & at(int64_t r, int64_t c) { return data[r * cols + c]; }
};

HalfMatrix make_half_matrix(int64_t rows, int64_t cols);

// Matrix stored as column-major 32x32 tiles. Within a tile, every two rows
// are interleaved: element (r, c) sits at (r/2)*64 + 2*c + (r%2), i.e. each
// row pair is laid out as its transposed 2x32 sub-matrix. Padding is zero.
struct TiledF16Matrix {
    int64_t rows = 0;
    int64_t cols = 0;
    int64_t padded_rows = 0; // multiples of 32
    int64_t padded_cols = 0;
    std::vector<Half> data;  // padded_rows * padded_cols

    int64_t tile_rows() const { return padded_rows / kTileDim; }
    int64_t tile_cols() const { return padded_cols / kTileDim; }
    int64_t tile_count() const { return tile_rows() * tile_cols(); }
    size_t byte_size() const { return data.size() * sizeof(Half); }

    Half at(int64_t r, int64_t c) const;
    Half & at(int64_t r, int64_t c);

    // base element offset of tile (tr, tc); tiles are column-major
    int64_t tile_base(int64_t tr, int64_t tc) const {
        return (tc * tile_rows() + tr) * kTileElems;
    }
};

inline int64_t ceil_to_tile(int64_t n) { return (n + kTileDim - 1) / kTileDim * kTileDim; }

// offset of element (r, c) inside its own tile
inline int64_t intra_tile_offset(int64_t r, int64_t c) {
    return (r >> 1) * 64 + 2 * c + (r & 1);
}

// flat offset of logical (r, c) in a buffer with the given padded row count
inline int64_t tiled_offset(int64_t r, int64_t c, int64_t padded_rows) {
    const int64_t tile = (c / kTileDim) * (padded_rows / kTileDim) + r / kTileDim;
    return tile * kTileElems + intra_tile_offset(r % kTileDim, c % kTileDim);
}

inline Half TiledF16Matrix::at(int64_t r, int64_t c) const {
    return data[tiled_offset(r, c, padded_rows)];
}
inline Half & TiledF16Matrix::at(int64_t r, int64_t c) {
    return data[tiled_offset(r, c, padded_rows)];
}

// allocate a zeroed tiled matrix for the given logical shape
TiledF16Matrix make_tiled(int64_t rows, int64_t cols);

TiledF16Matrix to_tiled(const HalfMatrix & m);
TiledF16Matrix to_tiled(std::span<const Half> m, int64_t rows, int64_t cols);

HalfMatrix from_tiled(const TiledF16Matrix & t);

// logical row-major index -> tiled buffer offset, for all rows*cols elements
std::vector<int64_t> tile_index_map(int64_t rows, int64_t cols);

} // namespace tqk
