#include <doctest.h>

#include "test_support.hpp"
#include "voxmap/error.hpp"
#include "voxmap/raycast.hpp"

using namespace voxmap;
using voxtest::Rng;
using voxtest::supercover_oracle;

TEST_SUITE_BEGIN("raycast");

TEST_CASE("degenerate ray yields no voxels") {
    const MapConfig cfg = voxtest::small_config(6, 0.1);
    CHECK(raycast(cfg, {0.05, 0.05, 0.05}, {0.05, 0.05, 0.05}, 0).empty());
}

TEST_CASE("axis-aligned ray covers origin..endpoint-1, endpoint excluded") {
    const MapConfig cfg = voxtest::small_config(6, 0.1);
    const auto cells = raycast(cfg, {0.05, 0.05, 0.05}, {0.55, 0.05, 0.05}, 0);
    REQUIRE(cells.size() == 5);
    const auto [x0, y0, z0] = morton_decode(cells.front().morton);
    for (size_t i = 0; i < cells.size(); ++i) {
        const auto [x, y, z] = morton_decode(cells[i].morton);
        CHECK(x == x0 + i);
        CHECK(y == y0);
        CHECK(z == z0);
    }
}

TEST_CASE("output equals the exact supercover oracle on random segments") {
    const MapConfig cfg = voxtest::small_config(6, 1.0);  // 64^3 grid
    Rng rng(31);
    const double h = cfg.half_extent() - 0.01;
    for (int i = 0; i < 1000; ++i) {
        const Vec3 a{rng.uniform(-h, h), rng.uniform(-h, h), rng.uniform(-h, h)};
        const Vec3 b{rng.uniform(-h, h), rng.uniform(-h, h), rng.uniform(-h, h)};
        const uint8_t depth = static_cast<uint8_t>(rng.below(3));
        const auto got = raycast(cfg, a, b, depth);
        const auto want = supercover_oracle(cfg, a, b, depth);
        REQUIRE(got.size() == want.size());
        for (size_t k = 0; k < got.size(); ++k) CHECK(got[k] == want[k]);
    }
}

TEST_CASE("face-aligned grazing rays follow the half-open convention") {
    const MapConfig cfg = voxtest::small_config(4, 1.0);  // 16^3 grid, cells on integers

    SUBCASE("ray in a face plane owns the higher-index row") {
        // Travels along +x exactly on the y=0 plane: every point belongs to
        // the y-index-8 row (grid index of coordinate 0).
        const auto cells = raycast(cfg, {-3.0, 0.0, 0.5}, {3.0, 0.0, 0.5}, 0);
        REQUIRE(cells.size() == 6);
        for (const NodeCode& c : cells) {
            const auto [x, y, z] = morton_decode(c.morton);
            (void)x;
            CHECK(y == 8);
            CHECK(z == 8);
        }
    }

    SUBCASE("exact diagonal corner crossing steps diagonally") {
        const auto cells = raycast(cfg, {0.5, 0.5, 0.25}, {2.5, 2.5, 0.25}, 0);
        // Cells (8,8), (9,9) at z=8; the side cells (8,9)/(9,8) are only
        // touched at the corner point, which belongs to the higher cell.
        REQUIRE(cells.size() == 2);
        const auto [x0, y0, z0] = morton_decode(cells[0].morton);
        const auto [x1, y1, z1] = morton_decode(cells[1].morton);
        CHECK(x0 == 8);
        CHECK(y0 == 8);
        CHECK(x1 == 9);
        CHECK(y1 == 9);
        CHECK(z0 == 8);
        CHECK(z1 == 8);
    }

    SUBCASE("starting on a face moving negative starts in the lower cell") {
        const auto cells = raycast(cfg, {1.0, 0.5, 0.5}, {-1.5, 0.5, 0.5}, 0);
        // Open segment starts just below x=1.0: cells x-index 8 downward.
        REQUIRE(cells.size() == 2);
        const auto [x0, y0, z0] = morton_decode(cells[0].morton);
        CHECK(x0 == 8);
        (void)y0;
        (void)z0;
    }

    SUBCASE("endpoint exactly on a face excludes the face-owning cell") {
        const auto cells = raycast(cfg, {0.5, 0.5, 0.5}, {2.0, 0.5, 0.5}, 0);
        REQUIRE(cells.size() == 2);  // x-indices 8 and 9; endpoint cell 10 excluded
        const auto [x1, y1, z1] = morton_decode(cells[1].morton);
        CHECK(x1 == 9);
        (void)y1;
        (void)z1;
    }

    SUBCASE("oracle agrees on hand-built grazing rays") {
        const Vec3 cases[][2] = {
            {{-3.0, 0.0, 0.0}, {3.0, 0.0, 0.0}},      // edge-aligned
            {{0.0, 0.0, 0.0}, {3.0, 3.0, 3.0}},       // exact 3D diagonal through corners
            {{-2.0, -2.0, 0.5}, {2.0, 2.0, 0.5}},     // 2D diagonal
            {{1.0, 1.0, 1.0}, {-2.0, 1.5, 1.0}},      // face start, negative x
            {{0.5, -4.0, 0.25}, {0.5, 4.0, 0.25}},    // axis ray crossing many cells
        };
        for (const auto& c : cases) {
            const auto got = raycast(cfg, c[0], c[1], 0);
            const auto want = supercover_oracle(cfg, c[0], c[1], 0);
            REQUIRE(got.size() == want.size());
            for (size_t k = 0; k < got.size(); ++k) CHECK(got[k] == want[k]);
        }
    }
}

TEST_CASE("rays are ordered by distance from the origin") {
    const MapConfig cfg = voxtest::small_config(6, 0.5);
    Rng rng(32);
    const double h = cfg.half_extent() - 0.01;
    for (int i = 0; i < 50; ++i) {
        const Vec3 a{rng.uniform(-h, h), rng.uniform(-h, h), rng.uniform(-h, h)};
        const Vec3 b{rng.uniform(-h, h), rng.uniform(-h, h), rng.uniform(-h, h)};
        const auto cells = raycast(cfg, a, b, 0);
        OccupancyMap map(cfg);
        double prev = -1.0;
        for (const NodeCode& c : cells) {
            const double d = (map.point_from_code(c) - a).norm();
            // Center distances of consecutively traversed cells can only
            // decrease by less than one cell diagonal.
            CHECK(d > prev - cfg.resolution * 1.8);
            prev = std::max(prev, d);
        }
    }
}

TEST_CASE("out-of-extent endpoints are rejected") {
    const MapConfig cfg = voxtest::small_config(4, 1.0);
    CHECK_THROWS_AS(raycast(cfg, {0, 0, 0}, {9.0, 0, 0}, 0), OutOfBoundsError);
    CHECK_THROWS_AS(raycast(cfg, {-8.5, 0, 0}, {0, 0, 0}, 0), OutOfBoundsError);
}

TEST_SUITE_END();
