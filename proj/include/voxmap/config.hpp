#pragma once

#include <cmath>
#include <cstdint>

#include "voxmap/error.hpp"

namespace voxmap {

inline double logit(double p) { return std::log(p / (1.0 - p)); }
inline double sigmoid(double l) { return 1.0 - 1.0 / (1.0 + std::exp(l)); }

enum class OccupancyState : uint8_t { Unknown = 0, Free = 1, Occupied = 2 };

inline const char* to_string(OccupancyState s) {
    switch (s) {
        case OccupancyState::Free: return "free";
        case OccupancyState::Occupied: return "occupied";
        default: return "unknown";
    }
}

/// Map geometry and sensor-fusion parameters. The world spans
/// resolution * 2^depth_levels meters per axis, centered on the origin.
struct MapConfig {
    double resolution = 0.1;
    uint8_t depth_levels = 16;
    double p_hit = 0.7;
    double p_miss = 0.4;
    double l_min = logit(0.12);
    double l_max = logit(0.97);
    double occ_threshold = 0.5;
    double free_threshold = 0.5;

    void validate() const {
        if (!(resolution > 0.0)) throw InvalidConfigError("resolution must be > 0");
        if (depth_levels < 2 || depth_levels > 21)
            throw InvalidConfigError("depth_levels must be in [2, 21]");
        if (!(p_hit > 0.5 && p_hit < 1.0)) throw InvalidConfigError("p_hit must be in (0.5, 1)");
        if (!(p_miss > 0.0 && p_miss < 0.5)) throw InvalidConfigError("p_miss must be in (0, 0.5)");
        if (!(l_min < 0.0 && l_max > 0.0)) throw InvalidConfigError("need l_min < 0 < l_max");
        if (!(occ_threshold >= 0.5 && occ_threshold < 1.0))
            throw InvalidConfigError("occ_threshold must be in [0.5, 1)");
        if (!(free_threshold > 0.0 && free_threshold <= 0.5))
            throw InvalidConfigError("free_threshold must be in (0, 0.5]");
        if (free_threshold > occ_threshold)
            throw InvalidConfigError("free_threshold must be <= occ_threshold");
    }

    double logit_hit() const { return logit(p_hit); }
    double logit_miss() const { return logit(p_miss); }
    double logit_occ() const { return logit(occ_threshold); }
    double logit_free() const { return logit(free_threshold); }

    uint32_t cells_per_axis() const { return uint32_t{1} << depth_levels; }
    /// Half the world extent per axis, meters.
    double half_extent() const { return resolution * static_cast<double>(uint64_t{1} << (depth_levels - 1)); }

    bool operator==(const MapConfig&) const = default;
};

/// Two-threshold tri-state classification of a log-odds value. Thresholds are
/// strict, so with occ == free == 0.5 a probability of exactly 0.5 is Unknown.
inline OccupancyState classify_log_odds(double log_odds, const MapConfig& cfg) {
    if (log_odds > cfg.logit_occ()) return OccupancyState::Occupied;
    if (log_odds < cfg.logit_free()) return OccupancyState::Free;
    return OccupancyState::Unknown;
}

}  // namespace voxmap
