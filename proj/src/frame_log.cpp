#include "voxmap/frame_log.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "voxmap/error.hpp"

namespace voxmap {

namespace {

constexpr char kFrameMagic[8] = {'V', 'O', 'X', 'P', 'T', 'S', '0', '1'};

std::vector<uint8_t> read_all(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open file: " + path.string());
    return std::vector<uint8_t>((std::istreambuf_iterator<char>(in)),
                                std::istreambuf_iterator<char>());
}

uint32_t get_u32(const uint8_t* p) {
    return static_cast<uint32_t>(p[0]) | static_cast<uint32_t>(p[1]) << 8 |
           static_cast<uint32_t>(p[2]) << 16 | static_cast<uint32_t>(p[3]) << 24;
}

float get_f32(const uint8_t* p) { return std::bit_cast<float>(get_u32(p)); }

void put_u32(std::vector<uint8_t>& out, uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<uint8_t>(v >> (8 * i)));
}

void put_f32(std::vector<uint8_t>& out, float v) { put_u32(out, std::bit_cast<uint32_t>(v)); }

void put_u16(std::vector<uint8_t>& out, uint16_t v) {
    out.push_back(static_cast<uint8_t>(v));
    out.push_back(static_cast<uint8_t>(v >> 8));
}

std::string frame_name(size_t index) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%06zu.pts", index);
    return buf;
}

}  // namespace

ScanFrame read_frame_file(const std::filesystem::path& path) {
    const std::vector<uint8_t> bytes = read_all(path);
    if (bytes.size() < 13 || std::memcmp(bytes.data(), kFrameMagic, 8) != 0)
        throw CorruptFrameError("bad frame magic: " + path.string());
    const uint32_t count = get_u32(bytes.data() + 8);
    const uint8_t slots = bytes[12];
    if (slots > kMaxLabelSlots)
        throw CorruptFrameError("frame declares " + std::to_string(slots) + " label slots, max " +
                                std::to_string(kMaxLabelSlots));
    const size_t stride = 12 + 4 + 2 * static_cast<size_t>(slots);
    if (bytes.size() != 13 + stride * count)
        throw CorruptFrameError("frame size mismatch: " + path.string());

    ScanFrame frame;
    frame.label_slots = slots;
    frame.points.resize(count);
    const uint8_t* p = bytes.data() + 13;
    for (uint32_t i = 0; i < count; ++i, p += stride) {
        PointRecord& pt = frame.points[i];
        pt.position = {get_f32(p), get_f32(p + 4), get_f32(p + 8)};
        if (!pt.position.finite())
            throw CorruptFrameError("non-finite point in frame: " + path.string());
        pt.color = {p[12], p[13], p[14]};
        for (uint8_t s = 0; s < slots; ++s)
            pt.labels[s] = static_cast<uint16_t>(p[16 + 2 * s] | p[16 + 2 * s + 1] << 8);
    }
    return frame;
}

void write_frame_file(const std::filesystem::path& path, const ScanFrame& frame) {
    std::vector<uint8_t> bytes;
    const size_t stride = 12 + 4 + 2 * static_cast<size_t>(frame.label_slots);
    bytes.reserve(13 + stride * frame.points.size());
    bytes.insert(bytes.end(), kFrameMagic, kFrameMagic + 8);
    put_u32(bytes, static_cast<uint32_t>(frame.points.size()));
    bytes.push_back(frame.label_slots);
    for (const PointRecord& pt : frame.points) {
        put_f32(bytes, static_cast<float>(pt.position.x));
        put_f32(bytes, static_cast<float>(pt.position.y));
        put_f32(bytes, static_cast<float>(pt.position.z));
        bytes.push_back(pt.color.r);
        bytes.push_back(pt.color.g);
        bytes.push_back(pt.color.b);
        bytes.push_back(0);
        for (uint8_t s = 0; s < frame.label_slots; ++s) put_u16(bytes, pt.labels[s]);
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write frame file: " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("short write to frame file: " + path.string());
}

RigidTransform parse_pose_line(const std::string& line, size_t lineno) {
    std::istringstream ss(line);
    double v[12];
    for (int i = 0; i < 12; ++i) {
        if (!(ss >> v[i]))
            throw PoseParseError("poses.txt line " + std::to_string(lineno) +
                                 ": expected 12 numbers");
    }
    std::string rest;
    if (ss >> rest)
        throw PoseParseError("poses.txt line " + std::to_string(lineno) + ": trailing content");
    RigidTransform t;
    for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 3; ++c) t.rot[r][c] = v[4 * r + c];
    }
    t.trans = {v[3], v[7], v[11]};
    return t;
}

std::string format_pose_line(const RigidTransform& pose) {
    std::ostringstream ss;
    ss.precision(17);
    for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 3; ++c) ss << pose.rot[r][c] << " ";
        ss << pose.trans[r] << (r == 2 ? "" : " ");
    }
    return ss.str();
}

FrameLog FrameLog::open(const std::filesystem::path& dir) {
    if (!std::filesystem::is_directory(dir)) throw IoError("not a directory: " + dir.string());
    FrameLog log;
    log.dir_ = dir;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        if (entry.path().extension() == ".pts") log.frame_files_.push_back(entry.path());
    }
    std::sort(log.frame_files_.begin(), log.frame_files_.end());

    std::ifstream poses(dir / "poses.txt");
    if (!poses) throw IoError("missing poses.txt in " + dir.string());
    std::string line;
    size_t lineno = 0;
    while (std::getline(poses, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        log.poses_.push_back(parse_pose_line(line, lineno));
    }
    if (log.poses_.size() != log.frame_files_.size())
        throw CountMismatchError("log has " + std::to_string(log.frame_files_.size()) +
                                 " frames but " + std::to_string(log.poses_.size()) + " poses");

    std::ifstream meta(dir / "meta.txt");
    if (!meta) throw IoError("missing meta.txt in " + dir.string());
    while (std::getline(meta, line)) {
        std::istringstream ss(line);
        std::string key;
        if (!(ss >> key) || key[0] == '#') continue;
        if (key == "slots") {
            unsigned k = 0;
            if (!(ss >> k) || k > kMaxLabelSlots)
                throw IoError("meta.txt: bad slots value in " + dir.string());
            log.label_slots_ = static_cast<uint8_t>(k);
        } else if (key == "labels") {
            std::string rest;
            std::getline(ss, rest);
            const auto b = rest.find_first_not_of(" \t");
            if (b != std::string::npos) {
                const auto e = rest.find_last_not_of(" \t\r");
                log.labels_file_ = dir / rest.substr(b, e - b + 1);
            }
        }
    }
    return log;
}

ScanFrame FrameLog::read_frame(size_t index) const {
    if (index >= frame_files_.size())
        throw IoError("frame index " + std::to_string(index) + " out of range");
    ScanFrame frame = read_frame_file(frame_files_[index]);
    if (frame.label_slots != label_slots_)
        throw CorruptFrameError("frame " + std::to_string(index) +
                                " label slot count differs from meta.txt");
    frame.timestep = static_cast<uint32_t>(index);
    frame.pose = poses_[index];
    return frame;
}

void write_log(const std::filesystem::path& dir, const std::vector<ScanFrame>& frames,
               uint8_t label_slots, const std::string& labels_file) {
    std::filesystem::create_directories(dir);
    std::ofstream poses(dir / "poses.txt", std::ios::trunc);
    if (!poses) throw IoError("cannot write poses.txt in " + dir.string());
    for (size_t i = 0; i < frames.size(); ++i) {
        write_frame_file(dir / frame_name(i), frames[i]);
        poses << format_pose_line(frames[i].pose) << "\n";
    }
    poses.close();
    std::ofstream meta(dir / "meta.txt", std::ios::trunc);
    if (!meta) throw IoError("cannot write meta.txt in " + dir.string());
    meta << "slots " << static_cast<unsigned>(label_slots) << "\n";
    if (!labels_file.empty()) meta << "labels " << labels_file << "\n";
}

size_t convert_external_log(const std::filesystem::path& velodyne_dir,
                            const std::filesystem::path& label_dir,
                            const std::filesystem::path& poses_file,
                            const std::filesystem::path& out_dir) {
    if (!std::filesystem::is_directory(velodyne_dir))
        throw IoError("not a directory: " + velodyne_dir.string());
    std::vector<std::filesystem::path> scans;
    for (const auto& entry : std::filesystem::directory_iterator(velodyne_dir)) {
        if (entry.path().extension() == ".bin") scans.push_back(entry.path());
    }
    std::sort(scans.begin(), scans.end());
    if (scans.empty()) throw IoError("no .bin scans in " + velodyne_dir.string());

    std::ifstream poses_in(poses_file);
    if (!poses_in) throw IoError("cannot open poses file: " + poses_file.string());
    std::vector<RigidTransform> poses;
    std::string line;
    size_t lineno = 0;
    while (std::getline(poses_in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        poses.push_back(parse_pose_line(line, lineno));
    }
    if (poses.size() != scans.size())
        throw CountMismatchError("scan count " + std::to_string(scans.size()) +
                                 " != pose count " + std::to_string(poses.size()));

    std::vector<ScanFrame> frames;
    frames.reserve(scans.size());
    for (size_t i = 0; i < scans.size(); ++i) {
        const std::vector<uint8_t> bin = read_all(scans[i]);
        if (bin.size() % 16 != 0)
            throw CorruptFrameError("scan size not a multiple of 16: " + scans[i].string());
        const size_t n = bin.size() / 16;

        std::filesystem::path label_path = label_dir / scans[i].filename();
        label_path.replace_extension(".label");
        const std::vector<uint8_t> lab = read_all(label_path);
        if (lab.size() != n * 4)
            throw CountMismatchError("label count differs from point count: " +
                                     label_path.string());

        ScanFrame frame;
        frame.timestep = static_cast<uint32_t>(i);
        frame.pose = poses[i];
        frame.label_slots = 1;
        frame.points.resize(n);
        for (size_t p = 0; p < n; ++p) {
            PointRecord& pt = frame.points[p];
            pt.position = {get_f32(bin.data() + 16 * p), get_f32(bin.data() + 16 * p + 4),
                           get_f32(bin.data() + 16 * p + 8)};
            // Lower 16 bits of the label word carry the semantic id.
            pt.labels[0] = static_cast<uint16_t>(get_u32(lab.data() + 4 * p) & 0xffff);
        }
        frames.push_back(std::move(frame));
    }
    write_log(out_dir, frames, 1);
    return frames.size();
}

}  // namespace voxmap
