#include "voxmap/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <set>

#include <json.hpp>

#include "voxmap/error.hpp"
#include "voxmap/frame_log.hpp"

namespace voxmap {

namespace {

constexpr double kPi = 3.14159265358979323846;

// Distribution-free draws so identical seeds give identical logs on any
// standard library.
struct Rng {
    std::mt19937_64 gen;

    explicit Rng(uint64_t seed) : gen(seed) {}

    double uniform() { return static_cast<double>(gen() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    uint64_t below(uint64_t n) {
        return static_cast<uint64_t>((static_cast<__uint128_t>(gen()) * n) >> 64);
    }
};

// Slab intersection of a ray with a closed box; returns the entry parameter
// in (0, +inf) or a negative value on miss.
double ray_box(const Vec3& origin, const Vec3& dir, const Aabb& box) {
    double t_near = 0.0;
    double t_far = std::numeric_limits<double>::infinity();
    for (int a = 0; a < 3; ++a) {
        const double d = dir[a];
        if (d == 0.0) {
            if (origin[a] < box.min[a] || origin[a] > box.max[a]) return -1.0;
            continue;
        }
        double t0 = (box.min[a] - origin[a]) / d;
        double t1 = (box.max[a] - origin[a]) / d;
        if (t0 > t1) std::swap(t0, t1);
        t_near = std::max(t_near, t0);
        t_far = std::min(t_far, t1);
        if (t_near > t_far) return -1.0;
    }
    return t_near > 0.0 ? t_near : -1.0;
}

Color palette(uint16_t label) {
    return {static_cast<uint8_t>((label * 73 + 31) & 0xff),
            static_cast<uint8_t>((label * 151 + 87) & 0xff),
            static_cast<uint8_t>((label * 211 + 3) & 0xff)};
}

}  // namespace

std::vector<uint16_t> SceneSpec::label_universe() const {
    std::set<uint16_t> set;
    for (const SceneBox& b : boxes) set.insert(b.label);
    return {set.begin(), set.end()};
}

SceneBox SceneSpec::ground_plane(double z, double half_extent, uint16_t label) {
    return {{{-half_extent, -half_extent, z - 0.2}, {half_extent, half_extent, z}}, label};
}

SceneSpec SceneSpec::load_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open scene file: " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw IoError("bad scene json: " + std::string(e.what()));
    }
    SceneSpec spec;
    try {
        auto vec3 = [](const nlohmann::json& a) {
            return Vec3{a.at(0).get<double>(), a.at(1).get<double>(), a.at(2).get<double>()};
        };
        if (j.contains("ground")) {
            const auto& g = j["ground"];
            spec.boxes.push_back(ground_plane(g.value("z", 0.0), g.value("half_extent", 100.0),
                                              g.at("label").get<uint16_t>()));
        }
        for (const auto& b : j.value("boxes", nlohmann::json::array())) {
            spec.boxes.push_back(
                SceneBox{{vec3(b.at("min")), vec3(b.at("max"))}, b.at("label").get<uint16_t>()});
        }
        if (j.contains("trajectory")) {
            spec.traj_start = vec3(j["trajectory"].at("start"));
            spec.traj_end = vec3(j["trajectory"].at("end"));
        }
        spec.sensor_height = j.value("sensor_height", spec.sensor_height);
        spec.beams_per_frame = j.value("beams_per_frame", spec.beams_per_frame);
        spec.max_range = j.value("max_range", spec.max_range);
        spec.elev_min_deg = j.value("elev_min_deg", spec.elev_min_deg);
        spec.elev_max_deg = j.value("elev_max_deg", spec.elev_max_deg);
        for (const auto& r : j.value("noise_rates", nlohmann::json::array()))
            spec.noise_rates.push_back(r.get<double>());
    } catch (const nlohmann::json::exception& e) {
        throw IoError("bad scene json: " + std::string(e.what()));
    }
    if (spec.boxes.empty()) throw IoError("scene has no boxes and no ground plane");
    if (spec.label_slots() > kMaxLabelSlots)
        throw IoError("too many noise slots (max " + std::to_string(kMaxLabelSlots - 1) + ")");
    for (const SceneBox& b : spec.boxes) {
        if (!b.box.valid()) throw IoError("scene box must have min <= max");
    }
    return spec;
}

std::vector<ScanFrame> synth_frames(const SceneSpec& spec, size_t frames, uint64_t seed) {
    if (spec.boxes.empty()) throw IoError("scene has no geometry");
    if (spec.label_slots() > kMaxLabelSlots) throw IoError("too many noise slots");
    const std::vector<uint16_t> universe = spec.label_universe();
    Rng rng(seed);

    std::vector<ScanFrame> out;
    out.reserve(frames);
    const double elev_lo = spec.elev_min_deg * kPi / 180.0;
    const double elev_hi = spec.elev_max_deg * kPi / 180.0;
    for (size_t f = 0; f < frames; ++f) {
        const double s = frames > 1 ? static_cast<double>(f) / static_cast<double>(frames - 1) : 0.0;
        const Vec3 sensor = spec.traj_start + (spec.traj_end - spec.traj_start) * s +
                            Vec3{0, 0, spec.sensor_height};
        ScanFrame frame;
        frame.timestep = static_cast<uint32_t>(f);
        frame.pose = RigidTransform::identity();
        frame.pose.trans = sensor;
        frame.label_slots = spec.label_slots();
        frame.points.reserve(spec.beams_per_frame);

        for (uint32_t b = 0; b < spec.beams_per_frame; ++b) {
            const double az = rng.uniform(0.0, 2.0 * kPi);
            const double el = rng.uniform(elev_lo, elev_hi);
            const Vec3 dir{std::cos(el) * std::cos(az), std::cos(el) * std::sin(az), std::sin(el)};

            double best_t = -1.0;
            uint16_t best_label = 0;
            for (const SceneBox& box : spec.boxes) {
                const double t = ray_box(sensor, dir, box.box);
                if (t > 0.0 && t <= spec.max_range && (best_t < 0.0 || t < best_t)) {
                    best_t = t;
                    best_label = box.label;
                }
            }
            // Noise draws are consumed even for no-return beams, keeping the
            // stream per-beam aligned and the frames reproducible.
            std::array<uint16_t, kMaxLabelSlots> labels{};
            labels[0] = best_label;
            for (size_t k = 0; k < spec.noise_rates.size(); ++k) {
                const bool flip = rng.uniform() < spec.noise_rates[k];
                uint16_t l = best_label;
                const uint64_t pick = rng.below(universe.size() > 1 ? universe.size() - 1 : 1);
                if (flip && universe.size() > 1) {
                    size_t idx = static_cast<size_t>(pick);
                    const auto self =
                        std::find(universe.begin(), universe.end(), best_label) - universe.begin();
                    if (idx >= static_cast<size_t>(self)) ++idx;
                    l = universe[idx];
                }
                labels[k + 1] = l;
            }
            if (best_t < 0.0) continue;

            const Vec3 world = sensor + dir * best_t;
            PointRecord pt;
            pt.position = world - sensor;  // identity rotation
            pt.color = palette(best_label);
            pt.labels = labels;
            frame.points.push_back(pt);
        }
        out.push_back(std::move(frame));
    }
    return out;
}

LabelSet synth_label_set(const SceneSpec& spec) {
    LabelSet ls;
    ls.ignore_label = 0;
    for (uint16_t l : spec.label_universe()) {
        ls.names[l] = "class_" + std::to_string(l);
        if (l != ls.ignore_label) ls.eval_subset.push_back(l);
    }
    return ls;
}

void synth_log(const SceneSpec& spec, size_t frames, uint64_t seed,
               const std::filesystem::path& out_dir) {
    const std::vector<ScanFrame> generated = synth_frames(spec, frames, seed);
    write_log(out_dir, generated, spec.label_slots(), "labels.txt");
    synth_label_set(spec).save(out_dir / "labels.txt");
}

}  // namespace voxmap
