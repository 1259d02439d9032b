#include "voxmap/codec.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>

#include "voxmap/error.hpp"

namespace voxmap {

namespace {

constexpr char kMapMagic[8] = {'V', 'O', 'X', 'M', 'A', 'P', '0', '1'};
constexpr char kDeltaMagic[8] = {'V', 'O', 'X', 'D', 'L', 'T', '0', '1'};

constexpr uint8_t kFieldLogOdds = 1u << 0;
constexpr uint8_t kFieldColor = 1u << 1;
constexpr uint8_t kFieldTimestep = 1u << 2;
constexpr uint8_t kFieldSemantics = 1u << 3;
constexpr uint8_t kFieldTombstone = 1u << 7;
constexpr uint8_t kAllFields = kFieldLogOdds | kFieldColor | kFieldTimestep | kFieldSemantics;

class Writer {
public:
    explicit Writer(std::vector<uint8_t>& out) : out_(out) {}

    void u8(uint8_t v) { out_.push_back(v); }
    void u16(uint16_t v) {
        for (int i = 0; i < 2; ++i) out_.push_back(static_cast<uint8_t>(v >> (8 * i)));
    }
    void u32(uint32_t v) {
        for (int i = 0; i < 4; ++i) out_.push_back(static_cast<uint8_t>(v >> (8 * i)));
    }
    void u64(uint64_t v) {
        for (int i = 0; i < 8; ++i) out_.push_back(static_cast<uint8_t>(v >> (8 * i)));
    }
    void f64(double v) { u64(std::bit_cast<uint64_t>(v)); }
    void raw(const char* p, size_t n) {
        out_.insert(out_.end(), reinterpret_cast<const uint8_t*>(p),
                    reinterpret_cast<const uint8_t*>(p) + n);
    }

private:
    std::vector<uint8_t>& out_;
};

class Reader {
public:
    explicit Reader(std::span<const uint8_t> in) : in_(in) {}

    size_t remaining() const { return in_.size() - pos_; }
    size_t position() const { return pos_; }

    uint8_t u8() { return take(1)[0]; }
    uint16_t u16() {
        auto b = take(2);
        return static_cast<uint16_t>(b[0] | b[1] << 8);
    }
    uint32_t u32() {
        auto b = take(4);
        return static_cast<uint32_t>(b[0]) | static_cast<uint32_t>(b[1]) << 8 |
               static_cast<uint32_t>(b[2]) << 16 | static_cast<uint32_t>(b[3]) << 24;
    }
    uint64_t u64() {
        uint64_t v = 0;
        auto b = take(8);
        for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(b[i]) << (8 * i);
        return v;
    }
    double f64() { return std::bit_cast<double>(u64()); }
    std::span<const uint8_t> take(size_t n) {
        if (remaining() < n) throw CorruptStreamError("truncated stream");
        auto s = in_.subspan(pos_, n);
        pos_ += n;
        return s;
    }

private:
    std::span<const uint8_t> in_;
    size_t pos_ = 0;
};

void write_config(Writer& w, const MapConfig& cfg) {
    w.f64(cfg.resolution);
    w.u8(cfg.depth_levels);
    w.f64(cfg.p_hit);
    w.f64(cfg.p_miss);
    w.f64(cfg.l_min);
    w.f64(cfg.l_max);
    w.f64(cfg.occ_threshold);
    w.f64(cfg.free_threshold);
}

MapConfig read_config(Reader& r) {
    MapConfig cfg;
    cfg.resolution = r.f64();
    cfg.depth_levels = r.u8();
    cfg.p_hit = r.f64();
    cfg.p_miss = r.f64();
    cfg.l_min = r.f64();
    cfg.l_max = r.f64();
    cfg.occ_threshold = r.f64();
    cfg.free_threshold = r.f64();
    return cfg;
}

void write_record(Writer& w, NodeCode code, const LeafPayload* payload) {
    w.u64(code.morton);
    w.u8(code.depth);
    if (!payload) {
        w.u8(kFieldTombstone);
        return;
    }
    w.u8(kAllFields);
    w.f64(payload->log_odds);
    w.u8(payload->color.r);
    w.u8(payload->color.g);
    w.u8(payload->color.b);
    w.u8(0);
    w.u32(payload->color_count);
    w.u32(payload->timestep);
    w.u16(static_cast<uint16_t>(payload->semantics.size()));
    for (const LabelCount& lc : payload->semantics) {
        w.u16(lc.label);
        w.u32(lc.count);
    }
}

struct RecordView {
    NodeCode code;
    bool tombstone = false;
    uint8_t fields = 0;
    LeafPayload payload;
};

RecordView read_record(Reader& r, uint8_t depth_levels) {
    RecordView rec;
    rec.code.morton = r.u64();
    rec.code.depth = r.u8();
    if (rec.code.depth >= depth_levels || !rec.code.canonical())
        throw CorruptStreamError("record code is not canonical for the map");
    const uint8_t bitmap = r.u8();
    rec.fields = bitmap;
    if (bitmap & kFieldTombstone) {
        rec.tombstone = true;
        return rec;
    }
    if (bitmap & kFieldLogOdds) rec.payload.log_odds = r.f64();
    if (bitmap & kFieldColor) {
        rec.payload.color.r = r.u8();
        rec.payload.color.g = r.u8();
        rec.payload.color.b = r.u8();
        r.u8();  // pad
        rec.payload.color_count = r.u32();
    }
    if (bitmap & kFieldTimestep) rec.payload.timestep = r.u32();
    if (bitmap & kFieldSemantics) {
        const uint16_t n = r.u16();
        rec.payload.semantics.reserve(n);
        uint32_t prev_label = 0;
        for (uint16_t i = 0; i < n; ++i) {
            LabelCount lc;
            lc.label = r.u16();
            lc.count = r.u32();
            if (lc.count == 0 || (i > 0 && lc.label <= prev_label))
                throw CorruptStreamError("semantics list not sorted-unique with counts >= 1");
            prev_label = lc.label;
            rec.payload.semantics.push_back(lc);
        }
    }
    return rec;
}

void apply_record_view(OccupancyMap& map, const RecordView& rec) {
    if (rec.tombstone) {
        map.remove_subtree(rec.code);
        return;
    }
    if (rec.fields == kAllFields) {
        map.apply_record(rec.code, rec.payload);
        return;
    }
    // Partial record: overwrite only the listed fields.
    LeafPayload merged = map.get_payload(rec.code).value_or(LeafPayload{});
    if (rec.fields & kFieldLogOdds) merged.log_odds = rec.payload.log_odds;
    if (rec.fields & kFieldColor) {
        merged.color = rec.payload.color;
        merged.color_count = rec.payload.color_count;
    }
    if (rec.fields & kFieldTimestep) merged.timestep = rec.payload.timestep;
    if (rec.fields & kFieldSemantics) merged.semantics = rec.payload.semantics;
    map.apply_record(rec.code, merged);
}

std::vector<std::pair<NodeCode, const LeafPayload*>> sorted_stored(const OccupancyMap& map) {
    std::vector<std::pair<NodeCode, const LeafPayload*>> nodes;
    nodes.reserve(map.node_count());
    map.visit_stored([&](NodeCode code, const OccupancyMap::Node& n) {
        nodes.emplace_back(code, &n.payload);
    });
    std::sort(nodes.begin(), nodes.end(), [](const auto& a, const auto& b) {
        return NodeCodeStreamOrder{}(a.first, b.first);
    });
    return nodes;
}

}  // namespace

uint64_t config_digest(const MapConfig& cfg) {
    std::vector<uint8_t> bytes;
    Writer w(bytes);
    write_config(w, cfg);
    uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
    for (uint8_t b : bytes) {
        h ^= b;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::vector<uint8_t> serialize_full(OccupancyMap& map) {
    map.propagate();
    std::vector<uint8_t> out;
    Writer w(out);
    w.raw(kMapMagic, 8);
    w.u16(kMapFormatVersion);
    write_config(w, map.config());
    w.u32(map.frame_counter());
    w.u64(map.publish_seq());
    const auto nodes = sorted_stored(map);
    w.u64(nodes.size());
    for (const auto& [code, payload] : nodes) write_record(w, code, payload);
    return out;
}

OccupancyMap deserialize(std::span<const uint8_t> bytes) {
    Reader r(bytes);
    if (std::memcmp(r.take(8).data(), kMapMagic, 8) != 0)
        throw CorruptStreamError("bad map magic");
    const uint16_t version = r.u16();
    if (version != kMapFormatVersion)
        throw CorruptStreamError("unsupported map version " + std::to_string(version));
    const MapConfig cfg = read_config(r);
    OccupancyMap map(cfg);
    map.set_frame_counter(r.u32());
    map.set_publish_seq(r.u64());
    const uint64_t count = r.u64();
    for (uint64_t i = 0; i < count; ++i) {
        const RecordView rec = read_record(r, cfg.depth_levels);
        if (rec.tombstone) throw CorruptStreamError("tombstone record in a full map stream");
        apply_record_view(map, rec);
    }
    if (r.remaining() != 0) throw CorruptStreamError("trailing bytes after map records");
    return map;
}

std::vector<uint8_t> publish_delta(OccupancyMap& map) {
    map.propagate();
    auto changes = map.collect_changes();

    std::vector<std::pair<NodeCode, const LeafPayload*>> records;
    records.reserve(changes.updated.size() + changes.removed.size());
    for (const auto& u : changes.updated) records.push_back(u);
    for (const NodeCode& code : changes.removed) records.emplace_back(code, nullptr);
    std::sort(records.begin(), records.end(), [](const auto& a, const auto& b) {
        return NodeCodeStreamOrder{}(a.first, b.first);
    });

    std::vector<uint8_t> body;
    Writer w(body);
    w.raw(kDeltaMagic, 8);
    const uint64_t seq = map.publish_seq() + 1;
    w.u64(seq);
    w.u32(map.frame_counter());
    w.u32(static_cast<uint32_t>(records.size()));
    w.u64(config_digest(map.config()));
    for (const auto& [code, payload] : records) write_record(w, code, payload);

    std::vector<uint8_t> out;
    Writer frame(out);
    frame.u32(static_cast<uint32_t>(body.size()));
    out.insert(out.end(), body.begin(), body.end());

    map.set_publish_seq(seq);
    map.clear_change_tracking();
    return out;
}

namespace {

void apply_one_frame(OccupancyMap& replica, std::span<const uint8_t> body) {
    Reader r(body);
    const auto magic = r.take(8);
    if (std::memcmp(magic.data(), kMapMagic, 8) == 0) {
        // Embedded full snapshot: absolute overwrite.
        OccupancyMap full = deserialize(body);
        if (!(full.config() == replica.config()))
            throw ConfigMismatchError("snapshot config differs from replica config");
        replica = std::move(full);
        return;
    }
    if (std::memcmp(magic.data(), kDeltaMagic, 8) != 0)
        throw CorruptStreamError("bad delta magic");
    const uint64_t seq = r.u64();
    const uint32_t frame_counter = r.u32();
    const uint32_t count = r.u32();
    const uint64_t digest = r.u64();
    if (digest != config_digest(replica.config()))
        throw ConfigMismatchError("delta config digest differs from replica config");
    if (seq != replica.publish_seq() + 1)
        throw OutOfOrderError("delta sequence gap: expected " +
                                  std::to_string(replica.publish_seq() + 1) + ", got " +
                                  std::to_string(seq),
                              replica.publish_seq() + 1, seq);
    // Parse everything before mutating so a truncated frame leaves the
    // replica untouched.
    std::vector<RecordView> records;
    records.reserve(count);
    for (uint32_t i = 0; i < count; ++i)
        records.push_back(read_record(r, replica.config().depth_levels));
    if (r.remaining() != 0) throw CorruptStreamError("trailing bytes in delta frame");
    for (const RecordView& rec : records) apply_record_view(replica, rec);
    replica.set_frame_counter(frame_counter);
    replica.set_publish_seq(seq);
}

}  // namespace

void apply_delta(OccupancyMap& replica, std::span<const uint8_t> bytes) {
    if (bytes.size() >= 8 && std::memcmp(bytes.data(), kMapMagic, 8) == 0) {
        apply_one_frame(replica, bytes);  // bare map file
        return;
    }
    Reader r(bytes);
    while (r.remaining() > 0) {
        const uint32_t len = r.u32();
        apply_one_frame(replica, r.take(len));
    }
}

void write_map_file(OccupancyMap& map, const std::filesystem::path& path) {
    const auto bytes = serialize_full(map);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write map file: " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("short write to map file: " + path.string());
}

OccupancyMap read_map_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open map file: " + path.string());
    std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                               std::istreambuf_iterator<char>());
    return deserialize(bytes);
}

}  // namespace voxmap
