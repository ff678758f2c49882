#include "tqk/tile_layout.hpp"

#include "tqk/errors.hpp"

#include <doctest.h>

#include <algorithm>
#include <random>
#include <set>

using namespace tqk;

namespace {

HalfMatrix random_matrix(int64_t rows, int64_t cols, uint64_t seed) {
    std::mt19937_64 rng(seed);
    HalfMatrix m = make_half_matrix(rows, cols);
    for (Half & h : m.data) h = Half::from_bits(static_cast<uint16_t>(rng() & 0x7BFF)); // finite
    return m;
}

} // namespace

TEST_CASE("intra-tile offsets follow the two-row shuffle") {
    CHECK(intra_tile_offset(0, 0) == 0);
    CHECK(intra_tile_offset(1, 0) == 1);
    CHECK(intra_tile_offset(0, 1) == 2);
    CHECK(intra_tile_offset(1, 1) == 3);
    CHECK(intra_tile_offset(2, 5) == 74);
    CHECK(intra_tile_offset(31, 31) == 15 * 64 + 62 + 1);

    auto map = tile_index_map(32, 32);
    CHECK(map[0 * 32 + 0] == 0);
    CHECK(map[1 * 32 + 0] == 1);
    CHECK(map[0 * 32 + 1] == 2);
    CHECK(map[2 * 32 + 5] == 74);
}

TEST_CASE("a 32x32 matrix is a single 2048-byte tile") {
    const HalfMatrix zeros = make_half_matrix(32, 32);
    const TiledF16Matrix t = to_tiled(zeros);
    CHECK(t.tile_count() == 1);
    CHECK(t.byte_size() == 2048);
    CHECK(std::all_of(t.data.begin(), t.data.end(), [](Half h) { return h.bits == 0; }));
}

TEST_CASE("tiles are ordered column-major over the tile grid") {
    // 33x40 pads to 64x64 = 2x2 tiles
    HalfMatrix m = make_half_matrix(33, 40);
    m.at(0, 0) = Half(1.0f);   // tile (0,0)
    m.at(32, 0) = Half(2.0f);  // tile (1,0)
    m.at(0, 32) = Half(3.0f);  // tile (0,1)
    m.at(32, 32) = Half(4.0f); // tile (1,1)

    const TiledF16Matrix t = to_tiled(m);
    CHECK(t.padded_rows == 64);
    CHECK(t.padded_cols == 64);
    CHECK(t.tile_count() == 4);
    CHECK(t.byte_size() == 4 * 2048);

    CHECK(t.data[t.tile_base(0, 0)].to_float() == 1.0f);
    CHECK(t.data[t.tile_base(1, 0)].to_float() == 2.0f);
    CHECK(t.data[t.tile_base(0, 1)].to_float() == 3.0f);
    CHECK(t.data[t.tile_base(1, 1)].to_float() == 4.0f);
    CHECK(t.tile_base(1, 0) == 1024);  // (0,0),(1,0),(0,1),(1,1) order
    CHECK(t.tile_base(0, 1) == 2048);
}

TEST_CASE("roundtrip is the identity") {
    SUBCASE("identity matrix") {
        HalfMatrix eye = make_half_matrix(32, 32);
        for (int64_t i = 0; i < 32; ++i) eye.at(i, i) = Half(1.0f);
        const HalfMatrix back = from_tiled(to_tiled(eye));
        CHECK(back.data == eye.data);
    }
    SUBCASE("gemv activation row") {
        const HalfMatrix row = random_matrix(1, 32, 5);
        const TiledF16Matrix t = to_tiled(row);
        CHECK(t.padded_rows == 32);
        const HalfMatrix back = from_tiled(t);
        REQUIRE(back.rows == 1);
        CHECK(back.data == row.data);
    }
    SUBCASE("random shapes") {
        std::mt19937_64 rng(99);
        for (int it = 0; it < 200; ++it) {
            const int64_t rows = 1 + static_cast<int64_t>(rng() % 200);
            const int64_t cols = 1 + static_cast<int64_t>(rng() % 200);
            const HalfMatrix m = random_matrix(rows, cols, rng());
            const TiledF16Matrix t = to_tiled(m);
            CHECK(t.byte_size() == static_cast<size_t>(t.tile_count()) * 2048);
            const HalfMatrix back = from_tiled(t);
            REQUIRE(back.data == m.data);
        }
    }
    SUBCASE("96x160 bit-exact") {
        const HalfMatrix m = random_matrix(96, 160, 17);
        CHECK(from_tiled(to_tiled(m)).data == m.data);
    }
}

TEST_CASE("tile_index_map is a bijection onto non-padding offsets") {
    std::mt19937_64 rng(123);
    for (int it = 0; it < 20; ++it) {
        const int64_t rows = 1 + static_cast<int64_t>(rng() % 70);
        const int64_t cols = 1 + static_cast<int64_t>(rng() % 70);
        const auto map = tile_index_map(rows, cols);
        const int64_t total = ceil_to_tile(rows) * ceil_to_tile(cols);
        std::set<int64_t> seen;
        for (int64_t off : map) {
            CHECK(off >= 0);
            CHECK(off < total);
            CHECK(seen.insert(off).second); // injective
        }
    }
}

TEST_CASE("consecutive 32 tiled elements form a 2x16 rectangle") {
    const int64_t rows = 64, cols = 96;
    const auto map = tile_index_map(rows, cols);
    const int64_t groups = ceil_to_tile(rows) * ceil_to_tile(cols) / 32;

    // invert the map: offset -> (r, c)
    std::vector<std::pair<int64_t, int64_t>> coord(
        static_cast<size_t>(ceil_to_tile(rows) * ceil_to_tile(cols)), {-1, -1});
    for (int64_t r = 0; r < rows; ++r) {
        for (int64_t c = 0; c < cols; ++c) {
            coord[static_cast<size_t>(map[r * cols + c])] = {r, c};
        }
    }

    for (int64_t g = 0; g < groups; ++g) {
        int64_t rmin = INT64_MAX, rmax = INT64_MIN, cmin = INT64_MAX, cmax = INT64_MIN;
        int count = 0;
        for (int64_t i = g * 32; i < (g + 1) * 32; ++i) {
            const auto [r, c] = coord[static_cast<size_t>(i)];
            if (r < 0) continue; // padding
            rmin = std::min(rmin, r);
            rmax = std::max(rmax, r);
            cmin = std::min(cmin, c);
            cmax = std::max(cmax, c);
            ++count;
        }
        REQUIRE(count == 32); // 64x96 has no padding
        CHECK(rmax - rmin == 1);
        CHECK(rmin % 2 == 0);
        CHECK(cmax - cmin == 15);
        CHECK(cmin % 16 == 0);
    }
}

TEST_CASE("zero-sized matrices are rejected") {
    CHECK_THROWS_AS((void)make_half_matrix(0, 4), validation_error);
    CHECK_THROWS_AS((void)to_tiled(std::span<const Half>{}, 0, 0), validation_error);
    CHECK_THROWS_AS((void)tile_index_map(3, 0), validation_error);
}
