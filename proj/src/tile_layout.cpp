#include "tqk/tile_layout.hpp"

#include "tqk/errors.hpp"

namespace tqk {

HalfMatrix make_half_matrix(int64_t rows, int64_t cols) {
    if (rows < 1 || cols < 1) {
        throw validation_error("matrix dimensions must be >= 1");
    }
    HalfMatrix m;
    m.rows = rows;
    m.cols = cols;
    m.data.assign(static_cast<size_t>(rows * cols), Half{});
    return m;
}

TiledF16Matrix make_tiled(int64_t rows, int64_t cols) {
    if (rows < 1 || cols < 1) {
        throw validation_error("matrix dimensions must be >= 1");
    }
    TiledF16Matrix t;
    t.rows = rows;
    t.cols = cols;
    t.padded_rows = ceil_to_tile(rows);
    t.padded_cols = ceil_to_tile(cols);
    t.data.assign(static_cast<size_t>(t.padded_rows * t.padded_cols), Half{});
    return t;
}

TiledF16Matrix to_tiled(std::span<const Half> m, int64_t rows, int64_t cols) {
    if (rows < 1 || cols < 1) {
        throw validation_error("to_tiled: dimensions must be >= 1");
    }
    if (static_cast<int64_t>(m.size()) != rows * cols) {
        throw validation_error("to_tiled: buffer size does not match shape");
    }
    TiledF16Matrix t = make_tiled(rows, cols);
    for (int64_t r = 0; r < rows; ++r) {
        const Half * src = m.data() + r * cols;
        for (int64_t c = 0; c < cols; ++c) {
            t.data[tiled_offset(r, c, t.padded_rows)] = src[c];
        }
    }
    return t;
}

TiledF16Matrix to_tiled(const HalfMatrix & m) {
    return to_tiled(std::span<const Half>(m.data), m.rows, m.cols);
}

HalfMatrix from_tiled(const TiledF16Matrix & t) {
    HalfMatrix m = make_half_matrix(t.rows, t.cols);
    for (int64_t r = 0; r < t.rows; ++r) {
        Half * dst = m.data.data() + r * t.cols;
        for (int64_t c = 0; c < t.cols; ++c) {
            dst[c] = t.data[tiled_offset(r, c, t.padded_rows)];
        }
    }
    return m;
}

std::vector<int64_t> tile_index_map(int64_t rows, int64_t cols) {
    if (rows < 1 || cols < 1) {
        throw validation_error("tile_index_map: dimensions must be >= 1");
    }
    const int64_t padded_rows = ceil_to_tile(rows);
    std::vector<int64_t> map(static_cast<size_t>(rows * cols));
    for (int64_t r = 0; r < rows; ++r) {
        for (int64_t c = 0; c < cols; ++c) {
            map[static_cast<size_t>(r * cols + c)] = tiled_offset(r, c, padded_rows);
        }
    }
    return map;
}

} // namespace tqk
