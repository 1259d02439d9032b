#pragma once

#include <cstdint>
#include <initializer_list>
#include <memory>
#include <vector>

#include "voxmap/geometry.hpp"
#include "voxmap/map.hpp"

namespace voxmap {

/// Spatial filter: an axis-aligned box, a ball, or the whole world. Box
/// membership tests cell overlap; sphere membership tests the voxel center
/// against the (closed) ball.
struct Region {
    enum class Kind : uint8_t { Everything, Box, Sphere };

    Kind kind = Kind::Everything;
    Aabb box;
    Vec3 center;
    double radius = 0.0;

    static Region everything() { return {}; }
    static Region aabb(const Vec3& min, const Vec3& max);
    static Region sphere(const Vec3& center, double radius);
};

enum class Tri : uint8_t { No, Maybe, Yes };

/// Boolean combination of payload atoms, evaluated against a voxel's payload
/// snapshot (absent voxels read as the unknown payload: log-odds 0, timestep
/// 0, no labels).
class Predicate {
public:
    static Predicate always_true();
    static Predicate state_in(std::initializer_list<OccupancyState> states);
    static Predicate state_mask(unsigned mask);
    static Predicate has_label(uint16_t label);
    static Predicate top_label_is(uint16_t label);
    static Predicate updated_before(uint32_t timestep);    // timestep <  t
    static Predicate updated_at_or_after(uint32_t timestep);  // timestep >= t

    Predicate operator&&(const Predicate& o) const;
    Predicate operator||(const Predicate& o) const;
    Predicate operator!() const;

    /// Exact evaluation; payload == nullptr means absent.
    bool matches(const LeafPayload* payload, const OccupancyMap& map) const;

    /// Three-valued check against an inner-node summary: No means no voxel in
    /// the subtree can match (sound pruning), Yes means all of them do.
    Tri summary_matches(const LeafPayload& summary, const OccupancyMap& map) const;

    struct Expr;

private:
    explicit Predicate(std::shared_ptr<const Expr> e) : expr_(std::move(e)) {}
    std::shared_ptr<const Expr> expr_;
};

struct QueryHit {
    NodeCode code;
    LeafPayload payload;
};

struct QueryOptions {
    bool use_summary_pruning = true;
};

/// All voxels at `depth` whose cell intersects `region` and whose payload
/// satisfies `predicate`. Never-touched space is enumerated lazily as Unknown
/// voxels when the predicate admits them. Expects propagate() to have run
/// since the last mutation.
std::vector<QueryHit> query(const OccupancyMap& map, const Region& region,
                            const Predicate& predicate, uint8_t depth,
                            const QueryOptions& opts = {});

/// Voxels that are Unknown or last updated before now - stale_after:
/// equivalent to query(region, Unknown OR UpdatedBefore(now - stale_after)).
std::vector<NodeCode> occluded(const OccupancyMap& map, const Region& region, uint32_t now,
                               uint32_t stale_after, uint8_t depth);

struct StateCounts {
    uint64_t unknown = 0;
    uint64_t free = 0;
    uint64_t occupied = 0;

    uint64_t total() const { return unknown + free + occupied; }
};

/// Tri-state voxel counts over the region at `depth`; uniform space is
/// counted arithmetically, not enumerated.
StateCounts count_states(const OccupancyMap& map, const Region& region, uint8_t depth);

}  // namespace voxmap
