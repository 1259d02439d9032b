#include "voxmap/integrate.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <unordered_map>
#include <unordered_set>

#include "voxmap/error.hpp"
#include "voxmap/raycast.hpp"

namespace voxmap {

namespace {

// Open-addressing set of morton codes sized for the per-frame free-space
// dedup, where std::unordered_set is too slow.
class MortonSet {
public:
    explicit MortonSet(size_t expected) {
        size_t cap = 64;
        while (cap < expected * 2) cap <<= 1;
        slots_.assign(cap, kEmpty);
        mask_ = cap - 1;
    }

    bool insert(uint64_t m) {
        if (size_ * 10 >= slots_.size() * 7) grow();
        return insert_nogrow(m);
    }

    bool contains(uint64_t m) const {
        size_t i = hash(m) & mask_;
        while (slots_[i] != kEmpty) {
            if (slots_[i] == m) return true;
            i = (i + 1) & mask_;
        }
        return false;
    }

    std::vector<uint64_t> extract_sorted() const {
        std::vector<uint64_t> out;
        out.reserve(size_);
        for (uint64_t s : slots_)
            if (s != kEmpty) out.push_back(s);
        std::sort(out.begin(), out.end());
        return out;
    }

    size_t size() const { return size_; }

private:
    static constexpr uint64_t kEmpty = ~uint64_t{0};

    static size_t hash(uint64_t m) {
        m ^= m >> 33;
        m *= 0xff51afd7ed558ccdULL;
        m ^= m >> 33;
        return static_cast<size_t>(m);
    }

    bool insert_nogrow(uint64_t m) {
        size_t i = hash(m) & mask_;
        while (slots_[i] != kEmpty) {
            if (slots_[i] == m) return false;
            i = (i + 1) & mask_;
        }
        slots_[i] = m;
        ++size_;
        return true;
    }

    void grow() {
        std::vector<uint64_t> old;
        old.swap(slots_);
        slots_.assign(old.size() * 2, kEmpty);
        mask_ = slots_.size() - 1;
        size_ = 0;
        for (uint64_t s : old)
            if (s != kEmpty) insert_nogrow(s);
    }

    std::vector<uint64_t> slots_;
    size_t mask_ = 0;
    size_t size_ = 0;
};

struct HitAccum {
    uint64_t morton;
    uint64_t color_sum[3] = {0, 0, 0};
    uint32_t points = 0;
};

}  // namespace

std::vector<uint8_t> fuse_network_slots(const ScanFrame& frame, std::span<const uint8_t> slots) {
    std::vector<uint8_t> out;
    for (uint8_t s : slots) {
        if (s >= frame.label_slots)
            throw UnknownSlotError("label slot " + std::to_string(s) + " not in frame (have " +
                                   std::to_string(frame.label_slots) + ")");
        if (std::find(out.begin(), out.end(), s) == out.end()) out.push_back(s);
    }
    return out;
}

IntegrationStats integrate_frame(OccupancyMap& map, const ScanFrame& frame,
                                 const IntegratorConfig& cfg, std::span<const uint8_t> slots) {
    const auto t_start = std::chrono::steady_clock::now();
    if (!frame.pose.is_rotation()) throw PoseInvalidError("frame pose rotation is not orthonormal");
    if (cfg.free_depth >= map.config().depth_levels)
        throw InvalidConfigError("free_depth must be below depth_levels");
    const std::vector<uint8_t> use_slots = fuse_network_slots(frame, slots);

    const Vec3 origin = frame.pose.trans;
    if (!map.contains(origin)) throw PoseInvalidError("sensor origin outside world extent");
    map.set_frame_counter(frame.timestep);

    const MapConfig& mc = map.config();
    const double hi = mc.half_extent();
    const double lo = -hi;
    const double hi_inside = std::nextafter(hi, lo);
    const uint8_t fd = cfg.free_depth;
    const uint64_t fd_mask = ~((uint64_t{1} << (3 * fd)) - 1);

    std::unordered_map<uint64_t, uint32_t> hit_index;
    std::vector<HitAccum> hits;
    std::vector<std::pair<uint64_t, uint16_t>> hit_labels;
    hit_index.reserve(frame.points.size());
    hits.reserve(frame.points.size());
    hit_labels.reserve(frame.points.size() * use_slots.size());
    MortonSet free_set(frame.points.size() * 8);
    std::vector<NodeCode> ray;

    for (const PointRecord& pt : frame.points) {
        const Vec3 w = frame.pose.apply(pt.position);
        Vec3 end = w;
        bool is_hit = true;
        const Vec3 dir = w - origin;
        const double dist = dir.norm();
        if (dist > cfg.max_range) {
            end = origin + dir * (cfg.max_range / dist);
            is_hit = false;
        }
        if (!map.contains(end)) {
            // Clip the ray to the map volume; the clipped endpoint is miss-only.
            double t_exit = 1.0;
            for (int a = 0; a < 3; ++a) {
                const double d = end[a] - origin[a];
                if (d > 0.0)
                    t_exit = std::min(t_exit, (hi - origin[a]) / d);
                else if (d < 0.0)
                    t_exit = std::min(t_exit, (lo - origin[a]) / d);
            }
            const Vec3 delta = end - origin;
            end = origin + delta * std::max(t_exit, 0.0);
            end = {std::clamp(end.x, lo, hi_inside), std::clamp(end.y, lo, hi_inside),
                   std::clamp(end.z, lo, hi_inside)};
            is_hit = false;
        }

        if (is_hit) {
            const uint64_t m = map.code_from_point(w, 0).morton;
            auto [it, fresh] = hit_index.try_emplace(m, static_cast<uint32_t>(hits.size()));
            if (fresh) hits.push_back(HitAccum{m});
            HitAccum& acc = hits[it->second];
            acc.color_sum[0] += pt.color.r;
            acc.color_sum[1] += pt.color.g;
            acc.color_sum[2] += pt.color.b;
            acc.points += 1;
            for (uint8_t s : use_slots) hit_labels.emplace_back(m, pt.labels[s]);
        }

        raycast_append(mc, origin, end, fd, ray);
        for (const NodeCode& c : ray) {
            if (cfg.early_stop && map.state_at(c) == OccupancyState::Occupied) break;
            free_set.insert(c.morton);
        }
    }

    // Free-depth cells containing a hit this frame are excluded: hit wins.
    std::unordered_set<uint64_t> hit_parents;
    hit_parents.reserve(hits.size());
    for (const HitAccum& h : hits) hit_parents.insert(h.morton & fd_mask);

    std::vector<uint64_t> free_cells = free_set.extract_sorted();
    const double miss_l = inverse_sensor_logodds(false, mc);
    IntegrationStats stats;
    {
        OccupancyMap::UpdateCursor cursor(map);
        for (uint64_t m : free_cells) {
            if (hit_parents.contains(m)) continue;
            cursor.update_region(NodeCode{m, fd}, miss_l);
            ++stats.miss_voxels;
        }
    }

    std::sort(hits.begin(), hits.end(),
              [](const HitAccum& a, const HitAccum& b) { return a.morton < b.morton; });
    std::sort(hit_labels.begin(), hit_labels.end());
    const double hit_l = inverse_sensor_logodds(true, mc);
    {
        OccupancyMap::UpdateCursor cursor(map);
        size_t li = 0;
        for (const HitAccum& h : hits) {
            const size_t lbegin = li;
            while (li < hit_labels.size() && hit_labels[li].first == h.morton) ++li;
            std::array<uint16_t, 64> buf;
            std::vector<uint16_t> big;
            std::span<const uint16_t> labels;
            const size_t n = li - lbegin;
            if (n <= buf.size()) {
                for (size_t i = 0; i < n; ++i) buf[i] = hit_labels[lbegin + i].second;
                labels = std::span<const uint16_t>(buf.data(), n);
            } else {
                big.reserve(n);
                for (size_t i = 0; i < n; ++i) big.push_back(hit_labels[lbegin + i].second);
                labels = big;
            }
            const Color avg{static_cast<uint8_t>(h.color_sum[0] / h.points),
                            static_cast<uint8_t>(h.color_sum[1] / h.points),
                            static_cast<uint8_t>(h.color_sum[2] / h.points)};
            cursor.update_leaf(NodeCode{h.morton, 0}, hit_l, avg, labels);
            ++stats.hit_voxels;
        }
    }

    map.propagate();
    stats.duration_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t_start)
            .count();
    return stats;
}

}  // namespace voxmap
