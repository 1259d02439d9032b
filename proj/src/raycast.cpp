#include "voxmap/raycast.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <limits>

#include "voxmap/error.hpp"

namespace voxmap {

namespace {

struct GridPoint {
    double g[3];
};

// Grid coordinates at a given depth: cells are unit cubes [i, i+1).
GridPoint to_grid(const MapConfig& cfg, const Vec3& p, uint8_t depth) {
    const double scale = cfg.resolution * static_cast<double>(uint64_t{1} << depth);
    const double half = static_cast<double>(uint64_t{1} << (cfg.depth_levels - depth - 1));
    return {{p.x / scale + half, p.y / scale + half, p.z / scale + half}};
}

void check_inside(const MapConfig& cfg, const Vec3& p) {
    const auto cells = static_cast<int64_t>(cfg.cells_per_axis());
    const auto half = cells / 2;
    for (int a = 0; a < 3; ++a) {
        const int64_t g = static_cast<int64_t>(std::floor(p[a] / cfg.resolution)) + half;
        if (g < 0 || g >= cells) throw OutOfBoundsError("raycast point outside world extent");
    }
}

}  // namespace

void raycast_append(const MapConfig& cfg, const Vec3& origin, const Vec3& endpoint, uint8_t depth,
                    std::vector<NodeCode>& out) {
    assert(depth < cfg.depth_levels);
    out.clear();
    check_inside(cfg, origin);
    check_inside(cfg, endpoint);

    const GridPoint g0 = to_grid(cfg, origin, depth);
    const GridPoint g1 = to_grid(cfg, endpoint, depth);
    const double d[3] = {g1.g[0] - g0.g[0], g1.g[1] - g0.g[1], g1.g[2] - g0.g[2]};
    const int64_t max_idx = (int64_t{1} << (cfg.depth_levels - depth)) - 1;

    int64_t cur[3], end[3];
    int step[3];
    double t_max[3];
    for (int a = 0; a < 3; ++a) {
        double fl = std::floor(g0.g[a]);
        // The open segment excludes t=0: starting exactly on a face and moving
        // toward lower indices means the segment only ever occupies the lower
        // cell.
        if (d[a] < 0.0 && fl == g0.g[a]) fl -= 1.0;
        cur[a] = std::clamp(static_cast<int64_t>(fl), int64_t{0}, max_idx);
        end[a] = std::clamp(static_cast<int64_t>(std::floor(g1.g[a])), int64_t{0}, max_idx);
        if (d[a] > 0.0) {
            step[a] = 1;
            t_max[a] = (static_cast<double>(cur[a] + 1) - g0.g[a]) / d[a];
        } else if (d[a] < 0.0) {
            step[a] = -1;
            t_max[a] = (static_cast<double>(cur[a]) - g0.g[a]) / d[a];
        } else {
            step[a] = 0;
            t_max[a] = std::numeric_limits<double>::infinity();
        }
    }

    auto emit = [&](const int64_t c[3]) {
        const uint64_t m = morton_encode(static_cast<uint32_t>(c[0]), static_cast<uint32_t>(c[1]),
                                         static_cast<uint32_t>(c[2]))
                           << (3 * depth);
        out.push_back(NodeCode{m, depth});
    };

    // Worst case one step per axis-plane crossing.
    const int64_t guard = 3 * (max_idx + 2) + 8;
    for (int64_t it = 0; it <= guard; ++it) {
        if (cur[0] == end[0] && cur[1] == end[1] && cur[2] == end[2]) return;
        emit(cur);
        const double tm = std::min({t_max[0], t_max[1], t_max[2]});
        if (!(tm < 1.0)) return;  // next crossing is at/after the endpoint
        for (int a = 0; a < 3; ++a) {
            if (t_max[a] != tm) continue;  // equal t values step together (corner jump)
            cur[a] += step[a];
            const int64_t boundary = step[a] > 0 ? cur[a] + 1 : cur[a];
            t_max[a] = (static_cast<double>(boundary) - g0.g[a]) / d[a];
        }
    }
    assert(false && "raycast failed to terminate");
    out.clear();
}

std::vector<NodeCode> raycast(const MapConfig& cfg, const Vec3& origin, const Vec3& endpoint,
                              uint8_t depth) {
    std::vector<NodeCode> out;
    raycast_append(cfg, origin, endpoint, depth, out);
    return out;
}

}  // namespace voxmap
