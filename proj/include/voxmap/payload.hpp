#pragma once

#include <algorithm>
#include <bit>
#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include "voxmap/config.hpp"
#include "voxmap/geometry.hpp"

namespace voxmap {

struct LabelCount {
    uint16_t label = 0;
    uint32_t count = 0;

    bool operator==(const LabelCount&) const = default;
};

/// Per-label observation counters, sorted ascending by label, labels unique,
/// counts >= 1. Counts saturate at 2^32-1 instead of wrapping.
using SemanticList = std::vector<LabelCount>;

inline uint32_t saturating_add_u32(uint32_t a, uint64_t b) {
    const uint64_t s = static_cast<uint64_t>(a) + b;
    return s > std::numeric_limits<uint32_t>::max() ? std::numeric_limits<uint32_t>::max()
                                                    : static_cast<uint32_t>(s);
}

inline uint32_t saturating_mul_u32(uint32_t a, uint64_t k) {
    const uint64_t max = std::numeric_limits<uint32_t>::max();
    if (k != 0 && a > max / k) return std::numeric_limits<uint32_t>::max();
    return static_cast<uint32_t>(static_cast<uint64_t>(a) * k);
}

inline void semantics_increment(SemanticList& sem, uint16_t label, uint32_t by = 1) {
    auto it = std::lower_bound(sem.begin(), sem.end(), label,
                               [](const LabelCount& lc, uint16_t l) { return lc.label < l; });
    if (it != sem.end() && it->label == label)
        it->count = saturating_add_u32(it->count, by);
    else
        sem.insert(it, LabelCount{label, by});
}

/// Merge `src` into `dst`, summing counts per label (union semantics).
inline void semantics_merge(SemanticList& dst, const SemanticList& src) {
    for (const auto& lc : src) semantics_increment(dst, lc.label, lc.count);
}

inline uint32_t semantics_count_of(const SemanticList& sem, uint16_t label) {
    auto it = std::lower_bound(sem.begin(), sem.end(), label,
                               [](const LabelCount& lc, uint16_t l) { return lc.label < l; });
    return (it != sem.end() && it->label == label) ? it->count : 0;
}

/// State of one voxel. For inner nodes the same struct carries the child
/// summary (max log-odds, latest timestep, per-label count sums).
struct LeafPayload {
    double log_odds = 0.0;
    Color color;
    uint32_t color_count = 0;  // number of color-carrying updates folded into `color`
    uint32_t timestep = 0;
    SemanticList semantics;

    bool operator==(const LeafPayload& o) const {
        return std::bit_cast<uint64_t>(log_odds) == std::bit_cast<uint64_t>(o.log_odds) &&
               color == o.color && color_count == o.color_count && timestep == o.timestep &&
               semantics == o.semantics;
    }
};

/// The payload a never-touched voxel is read as: unknown prior, no history.
inline const LeafPayload& absent_payload() {
    static const LeafPayload p{};
    return p;
}

/// View of a collapsed uniform subtree at `scale = 8^depth` voxels: counts sum
/// across the identical leaves, everything else is invariant under max/average.
inline LeafPayload scale_payload_counts(const LeafPayload& p, uint64_t scale) {
    LeafPayload out = p;
    out.color_count = saturating_mul_u32(p.color_count, scale);
    for (auto& lc : out.semantics) lc.count = saturating_mul_u32(lc.count, scale);
    return out;
}

inline OccupancyState classify_payload(const LeafPayload* payload, const MapConfig& cfg) {
    return classify_log_odds(payload ? payload->log_odds : 0.0, cfg);
}

}  // namespace voxmap
