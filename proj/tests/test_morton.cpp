#include <doctest.h>

#include "test_support.hpp"
#include "voxmap/error.hpp"
#include "voxmap/map.hpp"
#include "voxmap/morton.hpp"

using namespace voxmap;
using voxtest::Rng;

TEST_SUITE_BEGIN("morton");

TEST_CASE("encode matches the naive bit-interleave oracle") {
    Rng rng(1);
    for (int i = 0; i < 2000; ++i) {
        const uint32_t x = static_cast<uint32_t>(rng.below(1u << 21));
        const uint32_t y = static_cast<uint32_t>(rng.below(1u << 21));
        const uint32_t z = static_cast<uint32_t>(rng.below(1u << 21));
        const uint64_t m = morton_encode(x, y, z);
        CHECK(m == voxtest::morton_naive(x, y, z));
        const auto [dx, dy, dz] = morton_decode(m);
        CHECK(dx == x);
        CHECK(dy == y);
        CHECK(dz == z);
    }
}

TEST_CASE("parent/child round trips at every depth") {
    Rng rng(2);
    for (int i = 0; i < 500; ++i) {
        const uint8_t depth = static_cast<uint8_t>(1 + rng.below(20));
        uint64_t m = rng.gen() & ((uint64_t{1} << 63) - 1);
        m = (m >> (3 * depth)) << (3 * depth);
        const NodeCode c{m, depth};
        REQUIRE(c.canonical());
        for (unsigned oct = 0; oct < 8; ++oct) {
            const NodeCode child = c.child(oct);
            CHECK(child.canonical());
            CHECK(child.depth == depth - 1);
            CHECK(child.parent() == c);
            CHECK(child.octant() == oct);
            CHECK(c.ancestor_of(child));
        }
    }
}

TEST_CASE("code_from_point maps a voxel center to that voxel") {
    OccupancyMap map(voxtest::small_config(4, 0.1));
    const NodeCode c = map.code_from_point({0.05, 0.05, 0.05}, 0);
    const Vec3 center = map.point_from_code(c);
    CHECK(center.x == doctest::Approx(0.05));
    CHECK(center.y == doctest::Approx(0.05));
    CHECK(center.z == doctest::Approx(0.05));
}

TEST_CASE("point -> code -> point round trips for random codes at all depths") {
    MapConfig cfg = voxtest::small_config(16, 0.25);
    OccupancyMap map(cfg);
    Rng rng(3);
    for (int i = 0; i < 1000; ++i) {
        const uint8_t depth = static_cast<uint8_t>(rng.below(cfg.depth_levels));
        const uint32_t mask = (1u << (cfg.depth_levels - depth)) - 1;
        const uint32_t x = static_cast<uint32_t>(rng.below(mask + 1)) << depth;
        const uint32_t y = static_cast<uint32_t>(rng.below(mask + 1)) << depth;
        const uint32_t z = static_cast<uint32_t>(rng.below(mask + 1)) << depth;
        const NodeCode c{morton_encode(x, y, z), depth};
        REQUIRE(c.canonical());
        CHECK(map.code_from_point(map.point_from_code(c), depth) == c);
    }
}

TEST_CASE("half-open cells: a face point belongs to the higher-index voxel") {
    OccupancyMap map(voxtest::small_config(6, 0.1));
    const auto on_face = map.code_from_point({0.10, 0.0, 0.0}, 0);
    const auto below = map.code_from_point({0.0999, 0.0, 0.0}, 0);
    const auto [x1, y1, z1] = morton_decode(on_face.morton);
    const auto [x0, y0, z0] = morton_decode(below.morton);
    CHECK(x1 == x0 + 1);
    CHECK(y1 == y0);
    CHECK(z1 == z0);
}

TEST_CASE("code_from_point agrees with the per-axis floor oracle") {
    MapConfig cfg = voxtest::small_config(6, 0.1);
    OccupancyMap map(cfg);
    Rng rng(4);
    const double h = cfg.half_extent();
    for (int i = 0; i < 2000; ++i) {
        const Vec3 p{rng.uniform(-h, h - 1e-9), rng.uniform(-h, h - 1e-9),
                     rng.uniform(-h, h - 1e-9)};
        const NodeCode c = map.code_from_point(p, 0);
        const auto [x, y, z] = morton_decode(c.morton);
        const int64_t half = cfg.cells_per_axis() / 2;
        CHECK(static_cast<int64_t>(x) == static_cast<int64_t>(std::floor(p.x / cfg.resolution)) + half);
        CHECK(static_cast<int64_t>(y) == static_cast<int64_t>(std::floor(p.y / cfg.resolution)) + half);
        CHECK(static_cast<int64_t>(z) == static_cast<int64_t>(std::floor(p.z / cfg.resolution)) + half);
    }
}

TEST_CASE("points outside the world extent are rejected") {
    OccupancyMap map(voxtest::small_config(4, 1.0));  // world spans [-8, 8)
    CHECK_THROWS_AS(map.code_from_point({8.0, 0, 0}, 0), OutOfBoundsError);
    CHECK_THROWS_AS(map.code_from_point({0, -8.0001, 0}, 0), OutOfBoundsError);
    CHECK_NOTHROW(map.code_from_point({7.9999, -8.0, 0}, 0));
}

TEST_SUITE_END();
