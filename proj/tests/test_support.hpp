#pragma once

// Shared test fixtures and the independent reference oracles the suites
// check the implementation against. Everything here recomputes results from
// first principles (dense shadow state, flat summaries, slab clipping)
// rather than reusing the octree code paths.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <vector>

#include "voxmap/config.hpp"
#include "voxmap/geometry.hpp"
#include "voxmap/map.hpp"
#include "voxmap/morton.hpp"
#include "voxmap/payload.hpp"
#include "voxmap/query.hpp"

namespace voxtest {

using namespace voxmap;

struct Rng {
    std::mt19937_64 gen;

    explicit Rng(uint64_t seed) : gen(seed) {}

    double uniform() { return static_cast<double>(gen() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    uint64_t below(uint64_t n) {
        return static_cast<uint64_t>((static_cast<__uint128_t>(gen()) * n) >> 64);
    }
    bool chance(double p) { return uniform() < p; }
};

inline MapConfig small_config(uint8_t depth_levels = 4, double resolution = 1.0) {
    MapConfig cfg;
    cfg.resolution = resolution;
    cfg.depth_levels = depth_levels;
    return cfg;
}

// --- dense shadow model -----------------------------------------------------
//
// Reference world state: one payload per leaf plus a touched flag, updated by
// the rules as written (clamped additive log-odds, max timestep, running
// color average, per-label counts). Summaries are recomputed flat from the
// leaf block, independent of the octree's incremental propagation.

class ShadowMap {
public:
    explicit ShadowMap(const MapConfig& cfg)
        : cfg_(cfg),
          cells_(size_t{1} << cfg.depth_levels),
          leaves_(cells_ * cells_ * cells_),
          touched_(leaves_.size(), false) {}

    const MapConfig& config() const { return cfg_; }
    size_t cells() const { return cells_; }
    void set_frame(uint32_t t) { frame_ = t; }
    uint32_t frame() const { return frame_; }

    size_t index(size_t x, size_t y, size_t z) const { return (z * cells_ + y) * cells_ + x; }

    void update_leaf(size_t x, size_t y, size_t z, double delta, std::optional<Color> color,
                     const std::vector<uint16_t>& labels) {
        LeafPayload& p = leaves_[index(x, y, z)];
        touched_[index(x, y, z)] = true;
        p.log_odds = std::clamp(p.log_odds + delta, cfg_.l_min, cfg_.l_max);
        p.timestep = std::max(p.timestep, frame_);
        if (color) {
            const uint64_t k = p.color_count;
            auto avg = [&](uint8_t old, uint8_t add) {
                return static_cast<uint8_t>((static_cast<uint64_t>(old) * k + add) / (k + 1));
            };
            p.color = {avg(p.color.r, color->r), avg(p.color.g, color->g), avg(p.color.b, color->b)};
            p.color_count = saturating_add_u32(p.color_count, 1);
        }
        for (uint16_t l : labels) semantics_increment(p.semantics, l);
    }

    /// Blanket update of the whole block of a depth-d voxel.
    void update_region(size_t x0, size_t y0, size_t z0, uint8_t depth, double delta) {
        const size_t side = size_t{1} << depth;
        for (size_t z = z0; z < z0 + side; ++z)
            for (size_t y = y0; y < y0 + side; ++y)
                for (size_t x = x0; x < x0 + side; ++x) update_leaf(x, y, z, delta, {}, {});
    }

    /// Flat reference summary of the depth-d voxel at block corner
    /// (x0,y0,z0): nullopt when no leaf in the block was ever touched.
    /// Color is left zeroed; the octree's recursive color averaging is
    /// checked by dedicated unit tests instead.
    std::optional<LeafPayload> payload_at(size_t x0, size_t y0, size_t z0, uint8_t depth) const {
        const size_t side = size_t{1} << depth;
        LeafPayload s;
        bool any = false, all = true;
        double max_lo = 0.0;
        for (size_t z = z0; z < z0 + side; ++z)
            for (size_t y = y0; y < y0 + side; ++y)
                for (size_t x = x0; x < x0 + side; ++x) {
                    const size_t i = index(x, y, z);
                    if (!touched_[i]) {
                        all = false;
                        continue;
                    }
                    const LeafPayload& p = leaves_[i];
                    if (!any || p.log_odds > max_lo) max_lo = p.log_odds;
                    any = true;
                    s.timestep = std::max(s.timestep, p.timestep);
                    semantics_merge(s.semantics, p.semantics);
                }
        if (!any) return std::nullopt;
        s.log_odds = all ? max_lo : std::max(max_lo, 0.0);
        if (depth == 0) {
            const LeafPayload& p = leaves_[index(x0, y0, z0)];
            s.color = p.color;
            s.color_count = p.color_count;
        }
        return s;
    }

    OccupancyState state_at(size_t x0, size_t y0, size_t z0, uint8_t depth) const {
        const auto p = payload_at(x0, y0, z0, depth);
        return classify_log_odds(p ? p->log_odds : 0.0, cfg_);
    }

    uint64_t label_total(uint16_t label) const {
        uint64_t t = 0;
        for (size_t i = 0; i < leaves_.size(); ++i)
            if (touched_[i]) t += semantics_count_of(leaves_[i].semantics, label);
        return t;
    }

private:
    MapConfig cfg_;
    size_t cells_;
    std::vector<LeafPayload> leaves_;
    std::vector<bool> touched_;
    uint32_t frame_ = 0;
};

/// A map plus its shadow, driven by the same random update stream.
struct MirroredMap {
    OccupancyMap map;
    ShadowMap shadow;

    explicit MirroredMap(const MapConfig& cfg) : map(cfg), shadow(cfg) {}
};

inline Vec3 leaf_center(const MapConfig& cfg, size_t x, size_t y, size_t z) {
    const double half = static_cast<double>(cfg.cells_per_axis()) / 2.0;
    return {(static_cast<double>(x) - half + 0.5) * cfg.resolution,
            (static_cast<double>(y) - half + 0.5) * cfg.resolution,
            (static_cast<double>(z) - half + 0.5) * cfg.resolution};
}

/// Random mixed workload: leaf updates with occasional labels/colors plus a
/// few coarse blanket updates, mirrored into the shadow model.
inline void random_updates(MirroredMap& m, Rng& rng, size_t count, bool with_regions = true) {
    const size_t cells = m.shadow.cells();
    for (size_t i = 0; i < count; ++i) {
        if (rng.chance(0.1)) {
            const uint32_t t = m.map.frame_counter() + 1;
            m.map.set_frame_counter(t);
            m.shadow.set_frame(t);
        }
        if (with_regions && rng.chance(0.08)) {
            const uint8_t depth = static_cast<uint8_t>(1 + rng.below(2));
            const size_t side = size_t{1} << depth;
            const size_t x = rng.below(cells / side) * side;
            const size_t y = rng.below(cells / side) * side;
            const size_t z = rng.below(cells / side) * side;
            const double delta = m.map.config().logit_miss();
            const uint64_t morton = morton_encode(static_cast<uint32_t>(x),
                                                  static_cast<uint32_t>(y),
                                                  static_cast<uint32_t>(z));
            m.map.update_region(NodeCode{morton, depth}, delta);
            m.shadow.update_region(x, y, z, depth, delta);
            continue;
        }
        const size_t x = rng.below(cells), y = rng.below(cells), z = rng.below(cells);
        const double delta = rng.chance(0.6) ? m.map.config().logit_hit()
                                             : (rng.chance(0.5) ? m.map.config().logit_miss()
                                                                : rng.uniform(-1.0, 1.0));
        std::optional<Color> color;
        if (rng.chance(0.3))
            color = Color{static_cast<uint8_t>(rng.below(256)), static_cast<uint8_t>(rng.below(256)),
                          static_cast<uint8_t>(rng.below(256))};
        std::vector<uint16_t> labels;
        if (rng.chance(0.4)) labels.push_back(static_cast<uint16_t>(1 + rng.below(5)));
        m.map.update_leaf(m.map.code_from_point(leaf_center(m.map.config(), x, y, z), 0), delta,
                          color, std::span<const uint16_t>(labels));
        m.shadow.update_leaf(x, y, z, delta, color, labels);
    }
    m.map.propagate();
}

// --- morton oracle ------------------------------------------------------------

inline uint64_t morton_naive(uint32_t x, uint32_t y, uint32_t z) {
    uint64_t m = 0;
    for (int i = 0; i < 21; ++i) {
        m |= (static_cast<uint64_t>(x >> i) & 1) << (3 * i);
        m |= (static_cast<uint64_t>(y >> i) & 1) << (3 * i + 1);
        m |= (static_cast<uint64_t>(z >> i) & 1) << (3 * i + 2);
    }
    return m;
}

// --- exact supercover oracle -----------------------------------------------------
//
// Independent reference for raycast: candidate cells come from dense segment
// sampling (half-cell steps, expanded one cell in every direction), then each
// candidate is kept iff the open segment's exact per-axis ownership interval
// intersection is nonempty. Ownership follows the half-open convention:
// moving up enters a cell at the boundary (closed), moving down leaves it at
// the boundary (closed on the departing side).

struct TBound {
    double t;
    bool open;
};

inline std::vector<NodeCode> supercover_oracle(const MapConfig& cfg, const Vec3& origin,
                                               const Vec3& endpoint, uint8_t depth) {
    const double scale = cfg.resolution * static_cast<double>(uint64_t{1} << depth);
    const double half = static_cast<double>(uint64_t{1} << (cfg.depth_levels - depth - 1));
    const int64_t cells = int64_t{1} << (cfg.depth_levels - depth);
    double g0[3], g1[3], d[3];
    for (int a = 0; a < 3; ++a) {
        g0[a] = origin[a] / scale + half;
        g1[a] = endpoint[a] / scale + half;
        d[a] = g1[a] - g0[a];
    }

    // Candidates: sampled owner cells and their 1-neighborhood.
    std::set<std::array<int64_t, 3>> candidates;
    const double len = std::sqrt(d[0] * d[0] + d[1] * d[1] + d[2] * d[2]);
    const size_t samples = static_cast<size_t>(std::ceil(len / 0.5)) + 2;
    for (size_t s = 0; s <= samples; ++s) {
        const double t = static_cast<double>(s) / static_cast<double>(samples);
        std::array<int64_t, 3> c;
        for (int a = 0; a < 3; ++a)
            c[a] = static_cast<int64_t>(std::floor(g0[a] + t * d[a]));
        for (int dx = -1; dx <= 1; ++dx)
            for (int dy = -1; dy <= 1; ++dy)
                for (int dz = -1; dz <= 1; ++dz) {
                    std::array<int64_t, 3> n{c[0] + dx, c[1] + dy, c[2] + dz};
                    if (n[0] >= 0 && n[0] < cells && n[1] >= 0 && n[1] < cells && n[2] >= 0 &&
                        n[2] < cells)
                        candidates.insert(n);
                }
    }

    const int64_t end_cell[3] = {static_cast<int64_t>(std::floor(g1[0])),
                                 static_cast<int64_t>(std::floor(g1[1])),
                                 static_cast<int64_t>(std::floor(g1[2]))};

    struct Entry {
        double t;
        std::array<int64_t, 3> cell;
    };
    std::vector<Entry> found;
    for (const auto& c : candidates) {
        if (c[0] == end_cell[0] && c[1] == end_cell[1] && c[2] == end_cell[2]) continue;
        // Intersection of per-axis ownership intervals with the open (0,1).
        TBound lo{0.0, true}, hi{1.0, true};
        bool empty = false;
        for (int a = 0; a < 3 && !empty; ++a) {
            TBound alo{}, ahi{};
            if (d[a] > 0.0) {
                alo = {(static_cast<double>(c[a]) - g0[a]) / d[a], false};
                ahi = {(static_cast<double>(c[a] + 1) - g0[a]) / d[a], true};
            } else if (d[a] < 0.0) {
                alo = {(static_cast<double>(c[a] + 1) - g0[a]) / d[a], true};
                ahi = {(static_cast<double>(c[a]) - g0[a]) / d[a], false};
            } else {
                if (std::floor(g0[a]) != static_cast<double>(c[a])) empty = true;
                continue;
            }
            if (alo.t > lo.t || (alo.t == lo.t && alo.open)) lo = alo;
            if (ahi.t < hi.t || (ahi.t == hi.t && ahi.open)) hi = ahi;
        }
        if (empty) continue;
        const bool nonempty = lo.t < hi.t || (lo.t == hi.t && !lo.open && !hi.open);
        if (!nonempty) continue;
        found.push_back({lo.t, c});
    }
    std::sort(found.begin(), found.end(), [](const Entry& a, const Entry& b) {
        if (a.t != b.t) return a.t < b.t;
        return a.cell < b.cell;
    });
    std::vector<NodeCode> out;
    out.reserve(found.size());
    for (const Entry& e : found) {
        const uint64_t m = morton_encode(static_cast<uint32_t>(e.cell[0]),
                                         static_cast<uint32_t>(e.cell[1]),
                                         static_cast<uint32_t>(e.cell[2]))
                           << (3 * depth);
        out.push_back(NodeCode{m, depth});
    }
    return out;
}

}  // namespace voxtest
