#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "voxmap/geometry.hpp"
#include "voxmap/map.hpp"

namespace voxmap {

inline constexpr size_t kMaxLabelSlots = 8;

/// One measured point in the sensor frame. Slot k of `labels` holds the
/// top-1 class of network k; only the first ScanFrame::label_slots entries
/// are meaningful.
struct PointRecord {
    Vec3 position;
    Color color;
    std::array<uint16_t, kMaxLabelSlots> labels{};
};

/// A posed, colored, multi-label point cloud: one sensor revolution.
struct ScanFrame {
    uint32_t timestep = 0;
    RigidTransform pose;  // sensor -> world
    uint8_t label_slots = 0;
    std::vector<PointRecord> points;
};

struct IntegratorConfig {
    double max_range = 100.0;  // rays truncated beyond this; endpoint miss-only
    uint8_t free_depth = 0;    // level at which free-space marking is discretized
    bool early_stop = false;   // stop rays at the first already-occupied voxel
};

struct IntegrationStats {
    uint64_t hit_voxels = 0;   // distinct leaves that received a hit update
    uint64_t miss_voxels = 0;  // distinct free-depth voxels that received a miss update
    double duration_ms = 0.0;
};

/// logit(p_hit) for hits, logit(p_miss) for misses.
inline double inverse_sensor_logodds(bool is_hit, const MapConfig& cfg) {
    return is_hit ? cfg.logit_hit() : cfg.logit_miss();
}

/// Validate a label-slot selection against the frame's declared slot count.
/// Duplicates are dropped; throws UnknownSlotError for out-of-range slots.
std::vector<uint8_t> fuse_network_slots(const ScanFrame& frame, std::span<const uint8_t> slots);

/// Integrate one posed frame. Each leaf hit by at least one point receives
/// exactly one +logit(p_hit) update, the average color of its points, and one
/// count increment per point per slot in `slots`. Every free_depth voxel
/// crossed by a ray and not containing a hit receives exactly one
/// +logit(p_miss) update (hit wins within a frame). Points beyond max_range
/// or outside the map are clamped and treated as miss-only endpoints.
/// Finishes with propagate(). Deterministic: two runs on identical maps
/// produce bit-identical results.
IntegrationStats integrate_frame(OccupancyMap& map, const ScanFrame& frame,
                                 const IntegratorConfig& cfg, std::span<const uint8_t> slots);

}  // namespace voxmap
