#include <doctest.h>
#include <unistd.h>

#include <filesystem>
#include <fstream>

#include "test_support.hpp"
#include "voxmap/error.hpp"
#include "voxmap/frame_log.hpp"
#include "voxmap/report.hpp"
#include "voxmap/synth.hpp"

using namespace voxmap;
using voxtest::Rng;

namespace {

namespace fs = std::filesystem;

struct TempDir {
    fs::path path;

    explicit TempDir(const std::string& tag) {
        path = fs::temp_directory_path() / ("voxmap_test_" + tag + "_" + std::to_string(::getpid()));
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

std::vector<uint8_t> slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in);
    return std::vector<uint8_t>((std::istreambuf_iterator<char>(in)),
                                std::istreambuf_iterator<char>());
}

SceneSpec demo_scene() {
    SceneSpec spec;
    spec.boxes.push_back(SceneSpec::ground_plane(0.0, 60.0, 1));
    spec.boxes.push_back(SceneBox{{{4, -2, 0}, {6, 0, 1.5}}, 2});
    spec.boxes.push_back(SceneBox{{{-6, 3, 0}, {-4, 5, 2.0}}, 3});
    spec.traj_start = {0, 0, 0};
    spec.traj_end = {8, 0, 0};
    spec.beams_per_frame = 800;
    spec.max_range = 40.0;
    return spec;
}

}  // namespace

TEST_SUITE_BEGIN("ingest");

TEST_CASE("frame file round trip is byte-identical") {
    TempDir tmp("frame_rt");
    Rng rng(81);
    ScanFrame f;
    f.label_slots = 2;
    for (int i = 0; i < 100; ++i) {
        PointRecord pt;
        pt.position = {rng.uniform(-10, 10), rng.uniform(-10, 10), rng.uniform(-2, 3)};
        pt.color = {static_cast<uint8_t>(rng.below(256)), static_cast<uint8_t>(rng.below(256)),
                    static_cast<uint8_t>(rng.below(256))};
        pt.labels[0] = static_cast<uint16_t>(rng.below(20));
        pt.labels[1] = static_cast<uint16_t>(rng.below(20));
        f.points.push_back(pt);
    }
    const fs::path a = tmp.path / "a.pts";
    const fs::path b = tmp.path / "b.pts";
    write_frame_file(a, f);
    write_frame_file(b, read_frame_file(a));
    CHECK(slurp(a) == slurp(b));
}

TEST_CASE("zero-point frames are valid") {
    TempDir tmp("frame_empty");
    ScanFrame f;
    f.label_slots = 1;
    write_frame_file(tmp.path / "e.pts", f);
    const ScanFrame back = read_frame_file(tmp.path / "e.pts");
    CHECK(back.points.empty());
    CHECK(back.label_slots == 1);
}

TEST_CASE("pose lines parse row-major 3x4 transforms") {
    const RigidTransform t = parse_pose_line("1 0 0 0 0 1 0 0 0 0 1 0", 1);
    CHECK(t.is_rotation());
    CHECK(t.trans.x == 0.0);
    const RigidTransform moved = parse_pose_line("1 0 0 2.5 0 1 0 -1 0 0 1 0.25", 1);
    CHECK(moved.trans.x == 2.5);
    CHECK(moved.trans.y == -1.0);
    CHECK(moved.trans.z == 0.25);
    CHECK_THROWS_AS(parse_pose_line("1 0 0", 3), PoseParseError);
    CHECK_THROWS_AS(parse_pose_line("1 0 0 0 0 1 0 0 0 0 1 0 9", 3), PoseParseError);
}

TEST_CASE("log round trip preserves frames, poses and metadata") {
    TempDir tmp("log_rt");
    SceneSpec spec = demo_scene();
    spec.noise_rates = {0.3};
    synth_log(spec, 5, 99, tmp.path);

    const FrameLog log = FrameLog::open(tmp.path);
    CHECK(log.frame_count() == 5);
    CHECK(log.label_slots() == 2);
    CHECK(!log.labels_file().empty());
    const LabelSet ls = LabelSet::load(log.labels_file());
    CHECK(ls.eval_subset.size() == 3);

    const ScanFrame f2 = log.read_frame(2);
    CHECK(f2.timestep == 2);
    CHECK(f2.pose.is_rotation());
    CHECK(!f2.points.empty());
}

TEST_CASE("frame/pose count mismatch is rejected") {
    TempDir tmp("log_mismatch");
    synth_log(demo_scene(), 3, 7, tmp.path);
    std::ofstream poses(tmp.path / "poses.txt", std::ios::app);
    poses << "1 0 0 0 0 1 0 0 0 0 1 0\n";
    poses.close();
    CHECK_THROWS_AS(FrameLog::open(tmp.path), CountMismatchError);
}

TEST_CASE("synthetic logs are deterministic under a fixed seed") {
    TempDir a("synth_a"), b("synth_b");
    SceneSpec spec = demo_scene();
    spec.noise_rates = {0.3, 0.3};
    synth_log(spec, 4, 1234, a.path);
    synth_log(spec, 4, 1234, b.path);
    for (int i = 0; i < 4; ++i) {
        char name[16];
        std::snprintf(name, sizeof name, "%06d.pts", i);
        CHECK(slurp(a.path / name) == slurp(b.path / name));
    }
    CHECK(slurp(a.path / "poses.txt") == slurp(b.path / "poses.txt"));

    TempDir c("synth_c");
    synth_log(spec, 4, 1235, c.path);
    CHECK(slurp(a.path / "000000.pts") != slurp(c.path / "000000.pts"));
}

TEST_CASE("ground-only scenes label every point ground") {
    SceneSpec spec;
    spec.boxes.push_back(SceneSpec::ground_plane(0.0, 80.0, 7));
    spec.beams_per_frame = 500;
    const auto frames = synth_frames(spec, 2, 5);
    size_t points = 0;
    for (const auto& f : frames)
        for (const auto& pt : f.points) {
            CHECK(pt.labels[0] == 7);
            ++points;
        }
    CHECK(points > 100);
}

TEST_CASE("zero noise copies the ground-truth slot") {
    SceneSpec spec = demo_scene();
    spec.noise_rates = {0.0};
    for (const auto& f : synth_frames(spec, 3, 11))
        for (const auto& pt : f.points) CHECK(pt.labels[1] == pt.labels[0]);
}

TEST_CASE("noise rate matches the observed flip fraction") {
    SceneSpec spec = demo_scene();
    spec.noise_rates = {0.3};
    spec.beams_per_frame = 30000;
    size_t flips = 0, total = 0;
    for (const auto& f : synth_frames(spec, 5, 21)) {
        for (const auto& pt : f.points) {
            flips += pt.labels[1] != pt.labels[0];
            ++total;
        }
    }
    REQUIRE(total > 100000);
    const double rate = static_cast<double>(flips) / static_cast<double>(total);
    CHECK(rate > 0.29);
    CHECK(rate < 0.31);
}

TEST_CASE("surface points land on the scene geometry") {
    SceneSpec spec = demo_scene();
    const auto frames = synth_frames(spec, 3, 31);
    for (const auto& f : frames) {
        for (const auto& pt : f.points) {
            const Vec3 w = f.pose.apply(pt.position);
            bool near_surface = false;
            for (const SceneBox& b : spec.boxes) {
                Aabb grown = b.box;
                const double eps = 1e-3;  // f32 quantization slack
                grown.min = grown.min - Vec3{eps, eps, eps};
                grown.max = grown.max + Vec3{eps, eps, eps};
                near_surface |= grown.contains(w);
            }
            CHECK(near_surface);
        }
    }
}

TEST_CASE("external dataset layout converts losslessly") {
    TempDir tmp("convert");
    const fs::path vel = tmp.path / "velodyne";
    const fs::path lab = tmp.path / "labels";
    fs::create_directories(vel);
    fs::create_directories(lab);

    Rng rng(91);
    std::vector<std::vector<float>> gt_points(3);
    std::vector<std::vector<uint32_t>> gt_labels(3);
    std::ofstream poses(tmp.path / "poses.txt");
    for (int fidx = 0; fidx < 3; ++fidx) {
        char name[16];
        std::snprintf(name, sizeof name, "%06d", fidx);
        std::ofstream bin(vel / (std::string(name) + ".bin"), std::ios::binary);
        std::ofstream label(lab / (std::string(name) + ".label"), std::ios::binary);
        for (int i = 0; i < 50; ++i) {
            const float xyz[4] = {static_cast<float>(rng.uniform(-20, 20)),
                                  static_cast<float>(rng.uniform(-20, 20)),
                                  static_cast<float>(rng.uniform(-2, 2)),
                                  static_cast<float>(rng.uniform(0, 1))};
            bin.write(reinterpret_cast<const char*>(xyz), 16);
            gt_points[fidx].insert(gt_points[fidx].end(), xyz, xyz + 3);
            // Upper 16 bits carry an instance id that must be masked away.
            const uint32_t word = (static_cast<uint32_t>(rng.below(0xffff)) << 16) |
                                  static_cast<uint32_t>(rng.below(30));
            label.write(reinterpret_cast<const char*>(&word), 4);
            gt_labels[fidx].push_back(word & 0xffff);
        }
        poses << "1 0 0 " << fidx << " 0 1 0 0 0 0 1 0\n";
    }
    poses.close();

    const fs::path out = tmp.path / "log";
    CHECK(convert_external_log(vel, lab, tmp.path / "poses.txt", out) == 3);

    const FrameLog log = FrameLog::open(out);
    REQUIRE(log.frame_count() == 3);
    for (size_t fidx = 0; fidx < 3; ++fidx) {
        const ScanFrame f = log.read_frame(fidx);
        REQUIRE(f.points.size() == 50);
        for (size_t i = 0; i < 50; ++i) {
            CHECK(static_cast<float>(f.points[i].position.x) == gt_points[fidx][3 * i]);
            CHECK(static_cast<float>(f.points[i].position.y) == gt_points[fidx][3 * i + 1]);
            CHECK(static_cast<float>(f.points[i].position.z) == gt_points[fidx][3 * i + 2]);
            CHECK(f.points[i].labels[0] == gt_labels[fidx][i]);
            CHECK(f.points[i].color == Color{0, 0, 0});
        }
        CHECK(f.pose.trans.x == static_cast<double>(fidx));
    }
}

TEST_CASE("label word masking keeps the low 16 bits") {
    // 0x0005000A -> semantic id 0x000A, already covered structurally above;
    // pin the exact example.
    const uint32_t word = 0x0005000A;
    CHECK(static_cast<uint16_t>(word & 0xffff) == 0x000A);
}

TEST_CASE("scene json parsing") {
    TempDir tmp("scene_json");
    {
        std::ofstream out(tmp.path / "scene.json");
        out << R"({
            "ground": {"z": 0.0, "half_extent": 50.0, "label": 1},
            "boxes": [{"min": [2, -1, 0], "max": [4, 1, 2], "label": 5}],
            "trajectory": {"start": [0, 0, 0], "end": [5, 0, 0]},
            "beams_per_frame": 1234,
            "noise_rates": [0.25]
        })";
    }
    const SceneSpec spec = SceneSpec::load_json(tmp.path / "scene.json");
    CHECK(spec.boxes.size() == 2);
    CHECK(spec.beams_per_frame == 1234);
    CHECK(spec.label_slots() == 2);
    CHECK(spec.boxes[1].label == 5);
    CHECK_THROWS_AS(SceneSpec::load_json(tmp.path / "missing.json"), IoError);
}

TEST_SUITE_END();

TEST_SUITE_BEGIN("report");

TEST_CASE("uncertainty formatting matches the value(uncertainty) convention") {
    CHECK(format_uncertainty(0.05, 0.01) == "0.05(1)");
    CHECK(format_uncertainty(20.65, 10.95) == "20.65(1095)");
    CHECK(format_uncertainty(1.62, 0.31) == "1.62(31)");
    CHECK(format_uncertainty(3.0, 0.0) == "3.00(0)");
}

TEST_CASE("aggregate computes mean and sample standard deviation") {
    const double v[] = {1.0, 2.0, 3.0, 4.0};
    const Aggregate a = aggregate(v);
    CHECK(a.mean == doctest::Approx(2.5));
    CHECK(a.stddev == doctest::Approx(std::sqrt(5.0 / 3.0)));
    CHECK(aggregate(std::span<const double>(v, 1)).stddev == 0.0);
}

TEST_CASE("csv round trip is lossless") {
    TempDir tmp("report_csv");
    RunReport r;
    Rng rng(95);
    for (int i = 0; i < 20; ++i)
        r.frames.push_back({rng.uniform(0, 50), rng.uniform(0, 5), rng.uniform(0, 10),
                            rng.gen() % 100000});
    const fs::path csv = tmp.path / "report.csv";
    r.write_csv(csv);
    const auto back = RunReport::read_csv(csv);
    REQUIRE(back.size() == r.frames.size());
    for (size_t i = 0; i < back.size(); ++i) {
        CHECK(back[i].integrate_ms == r.frames[i].integrate_ms);
        CHECK(back[i].publish_ms == r.frames[i].publish_ms);
        CHECK(back[i].query_ms == r.frames[i].query_ms);
        CHECK(back[i].delta_bytes == r.frames[i].delta_bytes);
    }
}

TEST_SUITE_END();
