#pragma once

#include <cstdint>
#include <vector>

#include "voxmap/config.hpp"
#include "voxmap/geometry.hpp"
#include "voxmap/morton.hpp"

namespace voxmap {

/// Every voxel at `depth` intersected by the open segment (origin, endpoint),
/// in traversal order, excluding the endpoint's voxel. Incremental grid
/// traversal; grazing contacts on faces, edges and corners follow the
/// half-open cell convention (a boundary point belongs to the voxel with the
/// larger index), so exact corner crossings step diagonally. Throws
/// OutOfBoundsError if either point lies outside the world extent.
std::vector<NodeCode> raycast(const MapConfig& cfg, const Vec3& origin, const Vec3& endpoint,
                              uint8_t depth);

/// As raycast(), appending to `out` (cleared first). Reusable-buffer variant
/// for tight integration loops.
void raycast_append(const MapConfig& cfg, const Vec3& origin, const Vec3& endpoint, uint8_t depth,
                    std::vector<NodeCode>& out);

}  // namespace voxmap
