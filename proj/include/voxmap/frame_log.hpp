#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "voxmap/integrate.hpp"

namespace voxmap {

// A frame log is a directory of binary point-cloud files plus sidecar text:
//
//   NNNNNN.pts   one frame, zero-padded ascending indices
//   poses.txt    one line per frame: 12 floats, row-major 3x4 sensor-to-world
//   meta.txt     key-value lines: `slots <K>` and `labels <path>`
//
// Frame file layout (little-endian): [magic "VOXPTS01"][point count u32]
// [label slots u8], then per point 3x f32 position (meters, sensor frame),
// 3x u8 RGB, 1x u8 pad, K x u16 labels.

/// Reader for a frame-log directory; poses and metadata are loaded eagerly,
/// frames on demand.
class FrameLog {
public:
    static FrameLog open(const std::filesystem::path& dir);

    size_t frame_count() const { return frame_files_.size(); }
    uint8_t label_slots() const { return label_slots_; }
    /// Path of the label-set file named in meta.txt (resolved against the
    /// log directory), empty if none was declared.
    std::filesystem::path labels_file() const { return labels_file_; }
    const RigidTransform& pose(size_t index) const { return poses_.at(index); }

    /// Frame `index` with its pose and timestep = index.
    ScanFrame read_frame(size_t index) const;

private:
    std::filesystem::path dir_;
    std::vector<std::filesystem::path> frame_files_;
    std::vector<RigidTransform> poses_;
    uint8_t label_slots_ = 0;
    std::filesystem::path labels_file_;
};

ScanFrame read_frame_file(const std::filesystem::path& path);
void write_frame_file(const std::filesystem::path& path, const ScanFrame& frame);

RigidTransform parse_pose_line(const std::string& line, size_t lineno);
std::string format_pose_line(const RigidTransform& pose);

/// Write a complete log directory: frames, poses.txt and meta.txt.
/// `labels_file` is recorded relative to the directory when non-empty.
void write_log(const std::filesystem::path& dir, const std::vector<ScanFrame>& frames,
               uint8_t label_slots, const std::string& labels_file = "");

/// Convert a LiDAR-odometry-style dataset (per-frame x/y/z/intensity f32
/// binaries, u32 label files with the semantic id in the lower 16 bits, and a
/// 12-float-per-line pose file) into a native log. Intensity is dropped and
/// colors are zeroed. Returns the number of frames converted.
size_t convert_external_log(const std::filesystem::path& velodyne_dir,
                            const std::filesystem::path& label_dir,
                            const std::filesystem::path& poses_file,
                            const std::filesystem::path& out_dir);

}  // namespace voxmap
