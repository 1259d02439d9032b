#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "voxmap/geometry.hpp"
#include "voxmap/integrate.hpp"
#include "voxmap/semantics.hpp"

namespace voxmap {

struct SceneBox {
    Aabb box;
    uint16_t label = 0;
};

/// Description of a synthetic scene: labeled axis-aligned boxes (a ground
/// plane is just a large flat box), a straight-line sensor trajectory and the
/// beam pattern. Label slot 0 of generated frames is ground truth; slot k+1
/// is a copy corrupted at noise_rates[k] (uniform flips to another scene
/// label).
struct SceneSpec {
    std::vector<SceneBox> boxes;
    Vec3 traj_start{0, 0, 0};
    Vec3 traj_end{10, 0, 0};
    double sensor_height = 1.5;
    uint32_t beams_per_frame = 2000;
    double max_range = 60.0;
    double elev_min_deg = -25.0;
    double elev_max_deg = 3.0;
    std::vector<double> noise_rates;

    uint8_t label_slots() const { return static_cast<uint8_t>(1 + noise_rates.size()); }
    std::vector<uint16_t> label_universe() const;

    static SceneBox ground_plane(double z, double half_extent, uint16_t label);
    static SceneSpec load_json(const std::filesystem::path& path);
};

/// Deterministic pseudo-random scans of the scene: identical (spec, seed)
/// pairs produce identical frames. Beams with no surface within max_range
/// yield no point.
std::vector<ScanFrame> synth_frames(const SceneSpec& spec, size_t frames, uint64_t seed);

/// Label set covering the scene: ids named class_<id>, all scene labels
/// evaluated, 0 reserved as the ignore label.
LabelSet synth_label_set(const SceneSpec& spec);

/// Generate and write a complete frame log (frames, poses, meta, labels.txt).
void synth_log(const SceneSpec& spec, size_t frames, uint64_t seed,
               const std::filesystem::path& out_dir);

}  // namespace voxmap
