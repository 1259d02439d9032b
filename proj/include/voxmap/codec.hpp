#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "voxmap/map.hpp"

namespace voxmap {

// Little-endian wire formats.
//
// Map file ("VOXMAP01"):
//   [magic 8B]["version" u16][resolution f64][depth_levels u8]
//   [p_hit f64][p_miss f64][l_min f64][l_max f64][occ f64][free f64]
//   [frame_counter u32][publish_seq u64][node_count u64][records...]
//
// Delta frame ("VOXDLT01"), always length-prefixed for stream transport:
//   [length u32][magic 8B][seq u64][frame_counter u32][record_count u32]
//   [config_digest u64][records...]
// where length counts everything after itself.
//
// Record:
//   [morton u64][depth u8][bitmap u8][fields in bitmap order]
// bitmap bit 0: log_odds f64; bit 1: color r,g,b u8 + pad u8 + color_count
// u32; bit 2: timestep u32; bit 3: semantics u16 pair count + pairs of
// (label u16, count u32); bit 7: tombstone (no fields). Records are sorted
// by depth descending then morton ascending, so parents precede children.

inline constexpr uint16_t kMapFormatVersion = 1;

uint64_t config_digest(const MapConfig& cfg);

/// Whole map as a map-file byte stream; runs propagate() first.
/// deserialize(serialize_full(m)) reproduces m bit-identically.
std::vector<uint8_t> serialize_full(OccupancyMap& map);

/// Rebuild a map from a map-file byte stream. Throws CorruptStreamError.
OccupancyMap deserialize(std::span<const uint8_t> bytes);

/// One length-prefixed delta frame holding exactly the nodes modified since
/// the last publish (changed leaves, changed inner summaries, tombstones for
/// pruned nodes), then clears the modified flags. Runs propagate() first and
/// increments the publish sequence number. A publish with no intervening
/// mutation yields a frame with zero records.
std::vector<uint8_t> publish_delta(OccupancyMap& map);

/// Apply a byte stream to a replica: either a bare map file (full overwrite)
/// or a sequence of length-prefixed frames (deltas applied in order, embedded
/// full snapshots allowed). Frames are checked for config digest
/// (ConfigMismatchError), framing/truncation (CorruptStreamError) and
/// sequence-number gaps (OutOfOrderError); a frame is applied atomically or
/// not at all.
void apply_delta(OccupancyMap& replica, std::span<const uint8_t> bytes);

void write_map_file(OccupancyMap& map, const std::filesystem::path& path);
OccupancyMap read_map_file(const std::filesystem::path& path);

}  // namespace voxmap
