#include "voxmap/map.hpp"

#include <algorithm>
#include <bit>
#include <cassert>
#include <cmath>

#include "voxmap/error.hpp"

namespace voxmap {

namespace {

double clamp_log_odds(double l, const MapConfig& cfg) {
    return std::min(std::max(l, cfg.l_min), cfg.l_max);
}

uint64_t subtree_scale(uint8_t depth) { return uint64_t{1} << (3 * depth); }  // 8^depth

}  // namespace

OccupancyMap::OccupancyMap(MapConfig cfg) : cfg_(cfg) {
    cfg_.validate();
    logit_occ_ = logit(cfg_.occ_threshold);
    logit_free_ = logit(cfg_.free_threshold);
    root_.children = std::make_unique<std::array<std::unique_ptr<Node>, 8>>();
}

// --- addressing ---------------------------------------------------------

Aabb OccupancyMap::world_bounds() const {
    const double h = cfg_.half_extent();
    return {{-h, -h, -h}, {h, h, h}};
}

bool OccupancyMap::contains(const Vec3& p) const {
    const auto cells = static_cast<int64_t>(cfg_.cells_per_axis());
    const auto half = cells / 2;
    for (int a = 0; a < 3; ++a) {
        const int64_t g = static_cast<int64_t>(std::floor(p[a] / cfg_.resolution)) + half;
        if (g < 0 || g >= cells) return false;
    }
    return true;
}

NodeCode OccupancyMap::code_from_point(const Vec3& p, uint8_t depth) const {
    assert(depth < cfg_.depth_levels);
    const auto cells = static_cast<int64_t>(cfg_.cells_per_axis());
    const auto half = cells / 2;
    uint32_t idx[3];
    for (int a = 0; a < 3; ++a) {
        const int64_t g = static_cast<int64_t>(std::floor(p[a] / cfg_.resolution)) + half;
        if (g < 0 || g >= cells) throw OutOfBoundsError("point outside world extent");
        idx[a] = static_cast<uint32_t>(g);
    }
    uint64_t m = morton_encode(idx[0], idx[1], idx[2]);
    if (depth > 0) m &= ~((uint64_t{1} << (3 * depth)) - 1);
    return {m, depth};
}

Vec3 OccupancyMap::point_from_code(NodeCode code) const {
    const auto [gx, gy, gz] = morton_decode(code.morton);
    const double half = static_cast<double>(cfg_.cells_per_axis() / 2);
    const double side = static_cast<double>(uint64_t{1} << code.depth);
    auto center = [&](uint32_t g) { return (static_cast<double>(g) - half + side * 0.5) * cfg_.resolution; };
    return {center(gx), center(gy), center(gz)};
}

Aabb OccupancyMap::code_bounds(NodeCode code) const {
    const auto [gx, gy, gz] = morton_decode(code.morton);
    const double half = static_cast<double>(cfg_.cells_per_axis() / 2);
    const double side = static_cast<double>(uint64_t{1} << code.depth) * cfg_.resolution;
    Vec3 lo{(gx - half) * cfg_.resolution, (gy - half) * cfg_.resolution,
            (gz - half) * cfg_.resolution};
    return {lo, lo + Vec3{side, side, side}};
}

// --- node plumbing --------------------------------------------------------

OccupancyMap::Node* OccupancyMap::create_child(Node& parent, uint8_t child_depth,
                                               uint64_t child_morton) {
    const unsigned oct = static_cast<unsigned>((child_morton >> (3 * child_depth)) & 7);
    auto& slot = (*parent.children)[oct];
    assert(!slot);
    slot = std::make_unique<Node>();
    slot->self_changed = true;  // creation always publishes
    slot->dirty_path = true;
    ++node_count_;
    removed_.erase(NodeCode{child_morton, child_depth});
    return slot.get();
}

void OccupancyMap::expand_collapsed(Node& n, uint8_t depth, uint64_t morton_prefix) {
    // All 8 octants inherit the shared leaf payload; the node itself becomes
    // inner and its summary is rebuilt on the next propagate().
    assert(!n.has_children() && depth > 0);
    n.children = std::make_unique<std::array<std::unique_ptr<Node>, 8>>();
    for (unsigned i = 0; i < 8; ++i) {
        const uint64_t child_morton = morton_prefix | (uint64_t{i} << (3 * (depth - 1)));
        Node* c = create_child(n, static_cast<uint8_t>(depth - 1), child_morton);
        c->payload = n.payload;
    }
}

OccupancyMap::Node* OccupancyMap::descend_create(NodeCode code) {
    Node* cur = &root_;
    cur->dirty_path = true;
    for (uint8_t depth = cfg_.depth_levels; depth > code.depth;) {
        const uint64_t prefix = (code.morton >> (3 * depth)) << (3 * depth);
        if (!cur->has_children()) expand_collapsed(*cur, depth, prefix);
        const uint8_t child_depth = static_cast<uint8_t>(depth - 1);
        const unsigned oct = static_cast<unsigned>((code.morton >> (3 * child_depth)) & 7);
        const uint64_t child_morton = (code.morton >> (3 * child_depth)) << (3 * child_depth);
        auto& slot = (*cur->children)[oct];
        if (!slot) {
            Node* c = create_child(*cur, child_depth, child_morton);
            // Intermediate nodes on a fresh path are inner nodes: give them a
            // children array immediately so childless always means leaf/uniform.
            if (child_depth > code.depth)
                c->children = std::make_unique<std::array<std::unique_ptr<Node>, 8>>();
        }
        cur = slot.get();
        cur->dirty_path = true;
        depth = child_depth;
    }
    return cur;
}

// --- mutation --------------------------------------------------------------

void OccupancyMap::apply_leaf_update(Node& n, bool created, double delta_l,
                                     const std::optional<Color>& color,
                                     std::span<const uint16_t> labels) {
    const LeafPayload before = created ? LeafPayload{} : n.payload;
    n.payload.log_odds = clamp_log_odds(n.payload.log_odds + delta_l, cfg_);
    n.payload.timestep = std::max(n.payload.timestep, frame_counter_);
    if (color) {
        const uint64_t k = n.payload.color_count;
        auto avg = [&](uint8_t old, uint8_t add) {
            return static_cast<uint8_t>((static_cast<uint64_t>(old) * k + add) / (k + 1));
        };
        n.payload.color = {avg(n.payload.color.r, color->r), avg(n.payload.color.g, color->g),
                           avg(n.payload.color.b, color->b)};
        n.payload.color_count = saturating_add_u32(n.payload.color_count, 1);
    }
    for (uint16_t label : labels) semantics_increment(n.payload.semantics, label);
    if (created || !(n.payload == before)) n.self_changed = true;
    n.dirty_path = true;
}

void OccupancyMap::update_leaf(NodeCode code, double delta_l, std::optional<Color> color,
                               std::span<const uint16_t> labels) {
    assert(code.depth == 0 && code.canonical());
    Node* leaf = descend_create(code);
    apply_leaf_update(*leaf, false, delta_l, color, labels);
}

void OccupancyMap::update_leaf(NodeCode code, double delta_l, std::optional<Color> color,
                               std::optional<uint16_t> label) {
    if (label) {
        const uint16_t one[1] = {*label};
        update_leaf(code, delta_l, color, std::span<const uint16_t>(one, 1));
    } else {
        update_leaf(code, delta_l, color, std::span<const uint16_t>());
    }
}

void OccupancyMap::apply_region_update(Node& n, uint8_t depth, uint64_t morton_prefix,
                                       double delta_l) {
    n.dirty_path = true;
    if (!n.has_children()) {
        // Leaf or collapsed uniform subtree: one shared payload covers it.
        apply_leaf_update(n, false, delta_l, std::nullopt, {});
        return;
    }
    for (unsigned i = 0; i < 8; ++i) {
        const uint8_t child_depth = static_cast<uint8_t>(depth - 1);
        const uint64_t child_morton = morton_prefix | (uint64_t{i} << (3 * child_depth));
        auto& slot = (*n.children)[i];
        if (slot) {
            apply_region_update(*slot, child_depth, child_morton, delta_l);
        } else {
            // Untouched octant: materializes as a collapsed uniform node.
            Node* c = create_child(n, child_depth, child_morton);
            apply_leaf_update(*c, true, delta_l, std::nullopt, {});
        }
    }
}

void OccupancyMap::update_region(NodeCode code, double delta_l) {
    assert(code.canonical() && code.depth < cfg_.depth_levels);
    Node* target = descend_create(code);
    apply_region_update(*target, code.depth, code.morton, delta_l);
}

// --- summaries --------------------------------------------------------------

LeafPayload OccupancyMap::compute_summary(const Node& n, uint8_t depth) const {
    assert(n.has_children());
    LeafPayload s;
    bool any_missing = false;
    bool any_child = false;
    double max_log_odds = 0.0;
    uint64_t color_sum[3] = {0, 0, 0};
    uint64_t color_n = 0;
    for (unsigned i = 0; i < 8; ++i) {
        const Node* c = n.child(i);
        if (!c) {
            any_missing = true;
            continue;
        }
        const uint8_t child_depth = static_cast<uint8_t>(depth - 1);
        const LeafPayload view = c->has_children()
                                     ? c->payload
                                     : scale_payload_counts(c->payload, subtree_scale(child_depth));
        if (!any_child || view.log_odds > max_log_odds) max_log_odds = view.log_odds;
        any_child = true;
        s.timestep = std::max(s.timestep, view.timestep);
        semantics_merge(s.semantics, view.semantics);
        color_sum[0] += static_cast<uint64_t>(view.color.r) * view.color_count;
        color_sum[1] += static_cast<uint64_t>(view.color.g) * view.color_count;
        color_sum[2] += static_cast<uint64_t>(view.color.b) * view.color_count;
        color_n += view.color_count;
    }
    // Missing octants contribute the unknown prior (log-odds 0).
    s.log_odds = (any_missing || !any_child) ? std::max(max_log_odds, 0.0) : max_log_odds;
    if (color_n > 0) {
        s.color = {static_cast<uint8_t>(color_sum[0] / color_n),
                   static_cast<uint8_t>(color_sum[1] / color_n),
                   static_cast<uint8_t>(color_sum[2] / color_n)};
        s.color_count = color_n > std::numeric_limits<uint32_t>::max()
                            ? std::numeric_limits<uint32_t>::max()
                            : static_cast<uint32_t>(color_n);
    }
    return s;
}

void OccupancyMap::propagate_rec(Node& n, uint8_t depth) {
    for (unsigned i = 0; i < 8; ++i) {
        Node* c = n.children ? (*n.children)[i].get() : nullptr;
        if (c && c->dirty_path && c->has_children())
            propagate_rec(*c, static_cast<uint8_t>(depth - 1));
    }
    LeafPayload summary = compute_summary(n, depth);
    if (!(summary == n.payload)) {
        n.payload = std::move(summary);
        if (depth < cfg_.depth_levels) n.self_changed = true;
    }
}

void OccupancyMap::propagate() {
    if (root_.dirty_path) propagate_rec(root_, cfg_.depth_levels);
}

// --- pruning -----------------------------------------------------------------

size_t OccupancyMap::prune_rec(Node& n, uint8_t depth, uint64_t morton_prefix) {
    size_t count = 0;
    const uint8_t child_depth = static_cast<uint8_t>(depth - 1);
    for (unsigned i = 0; i < 8; ++i) {
        Node* c = (*n.children)[i].get();
        if (c && c->has_children())
            count += prune_rec(*c, child_depth, morton_prefix | (uint64_t{i} << (3 * child_depth)));
    }
    if (depth < cfg_.depth_levels) {  // the root itself never collapses
        bool collapsible = true;
        for (unsigned i = 0; i < 8 && collapsible; ++i) {
            const Node* c = (*n.children)[i].get();
            collapsible = c && !c->has_children() &&
                          (i == 0 || c->payload == (*n.children)[0]->payload);
        }
        if (collapsible) {
            const LeafPayload shared = (*n.children)[0]->payload;
            for (unsigned i = 0; i < 8; ++i) {
                removed_.insert(
                    NodeCode{morton_prefix | (uint64_t{i} << (3 * child_depth)), child_depth});
                --node_count_;
            }
            n.children.reset();
            if (!(n.payload == shared)) {
                n.payload = shared;
                n.self_changed = true;
            }
            n.dirty_path = true;
            ++count;
        }
    }
    if (count > 0) n.dirty_path = true;
    return count;
}

size_t OccupancyMap::prune() {
    propagate();
    return prune_rec(root_, cfg_.depth_levels, 0);
}

// --- reads ---------------------------------------------------------------------

std::optional<LeafPayload> OccupancyMap::get_payload(NodeCode code) const {
    assert(code.canonical() && code.depth < cfg_.depth_levels);
    const Node* cur = &root_;
    for (uint8_t depth = cfg_.depth_levels; depth > code.depth; --depth) {
        if (!cur->has_children())  // collapsed uniform region above the target
            return scale_payload_counts(cur->payload, subtree_scale(code.depth));
        cur = cur->child(static_cast<unsigned>((code.morton >> (3 * (depth - 1))) & 7));
        if (!cur) return std::nullopt;
    }
    if (cur->has_children()) return cur->payload;
    return scale_payload_counts(cur->payload, subtree_scale(code.depth));
}

OccupancyState OccupancyMap::state_at(NodeCode code) const {
    const auto p = get_payload(code);
    return classify(p ? p->log_odds : 0.0);
}

// --- stats / comparison -----------------------------------------------------------

namespace {

uint64_t node_bytes(const OccupancyMap::Node& n) {
    uint64_t b = sizeof(OccupancyMap::Node) + n.payload.semantics.capacity() * sizeof(LabelCount);
    if (n.has_children()) b += sizeof(std::array<std::unique_ptr<OccupancyMap::Node>, 8>);
    return b;
}

uint64_t memory_rec(const OccupancyMap::Node& n) {
    uint64_t b = node_bytes(n);
    if (n.has_children())
        for (unsigned i = 0; i < 8; ++i)
            if (const auto* c = n.child(i)) b += memory_rec(*c);
    return b;
}

bool nodes_equal(const OccupancyMap::Node& a, const OccupancyMap::Node& b) {
    if (!(a.payload == b.payload)) return false;
    if (a.has_children() != b.has_children()) return false;
    if (!a.has_children()) return true;
    for (unsigned i = 0; i < 8; ++i) {
        const auto *ca = a.child(i), *cb = b.child(i);
        if ((ca == nullptr) != (cb == nullptr)) return false;
        if (ca && !nodes_equal(*ca, *cb)) return false;
    }
    return true;
}

void clone_children(const OccupancyMap::Node& src, OccupancyMap::Node& dst) {
    dst.payload = src.payload;
    dst.dirty_path = src.dirty_path;
    dst.self_changed = src.self_changed;
    if (!src.has_children()) return;
    dst.children = std::make_unique<std::array<std::unique_ptr<OccupancyMap::Node>, 8>>();
    for (unsigned i = 0; i < 8; ++i) {
        if (const auto* c = src.child(i)) {
            (*dst.children)[i] = std::make_unique<OccupancyMap::Node>();
            clone_children(*c, *(*dst.children)[i]);
        }
    }
}

}  // namespace

uint64_t OccupancyMap::memory_bytes() const { return memory_rec(root_); }

OccupancyMap OccupancyMap::clone() const {
    OccupancyMap out(cfg_);
    out.frame_counter_ = frame_counter_;
    out.publish_seq_ = publish_seq_;
    out.node_count_ = node_count_;
    out.removed_ = removed_;
    clone_children(root_, out.root_);
    return out;
}

bool OccupancyMap::equals(const OccupancyMap& other) const {
    if (!(cfg_ == other.cfg_) || frame_counter_ != other.frame_counter_ ||
        publish_seq_ != other.publish_seq_)
        return false;
    // The root payload is unaddressable scratch (propagate may cache a whole-
    // map summary there); only the stored children count.
    for (unsigned i = 0; i < 8; ++i) {
        const Node *a = root_.child(i), *b = other.root_.child(i);
        if ((a == nullptr) != (b == nullptr)) return false;
        if (a && !nodes_equal(*a, *b)) return false;
    }
    return true;
}

// --- replication support ------------------------------------------------------------

void OccupancyMap::apply_record(NodeCode code, const LeafPayload& payload) {
    Node* cur = &root_;
    for (uint8_t depth = cfg_.depth_levels; depth > code.depth; --depth) {
        if (!cur->has_children())
            cur->children = std::make_unique<std::array<std::unique_ptr<Node>, 8>>();
        const unsigned oct = static_cast<unsigned>((code.morton >> (3 * (depth - 1))) & 7);
        auto& slot = (*cur->children)[oct];
        if (!slot) {
            slot = std::make_unique<Node>();
            ++node_count_;
        }
        cur = slot.get();
    }
    cur->payload = payload;
}

namespace {

uint64_t count_subtree(const OccupancyMap::Node& n) {
    uint64_t c = 1;
    if (n.has_children())
        for (unsigned i = 0; i < 8; ++i)
            if (const auto* ch = n.child(i)) c += count_subtree(*ch);
    return c;
}

}  // namespace

void OccupancyMap::remove_subtree(NodeCode code) {
    Node* cur = &root_;
    for (uint8_t depth = cfg_.depth_levels; depth > code.depth + 1; --depth) {
        if (!cur->has_children()) return;
        cur = cur->children
                  ? (*cur->children)[static_cast<unsigned>((code.morton >> (3 * (depth - 1))) & 7)]
                        .get()
                  : nullptr;
        if (!cur) return;
    }
    if (!cur->has_children()) return;
    auto& slot = (*cur->children)[static_cast<unsigned>((code.morton >> (3 * code.depth)) & 7)];
    if (!slot) return;
    node_count_ -= count_subtree(*slot);
    slot.reset();
    if (cur != &root_) {
        bool empty = true;
        for (unsigned i = 0; i < 8 && empty; ++i) empty = (*cur->children)[i] == nullptr;
        if (empty) cur->children.reset();  // back to a childless (uniform) node
    }
}

void OccupancyMap::clear() {
    for (unsigned i = 0; i < 8; ++i) (*root_.children)[i].reset();
    root_.payload = LeafPayload{};
    root_.dirty_path = root_.self_changed = false;
    node_count_ = 0;
    removed_.clear();
}

// --- change tracking ---------------------------------------------------------------

namespace {

void collect_rec(const OccupancyMap::Node& n, NodeCode code,
                 std::vector<std::pair<NodeCode, const LeafPayload*>>& out) {
    if (n.self_changed) out.emplace_back(code, &n.payload);
    if (!n.dirty_path || !n.has_children()) return;
    for (unsigned i = 0; i < 8; ++i)
        if (const auto* c = n.child(i)) collect_rec(*c, code.child(i), out);
}

}  // namespace

OccupancyMap::ChangeSet OccupancyMap::collect_changes() const {
    ChangeSet cs;
    if (root_.dirty_path) {
        for (unsigned i = 0; i < 8; ++i) {
            if (const Node* c = root_.child(i))
                collect_rec(*c,
                            NodeCode{uint64_t{i} << (3 * (cfg_.depth_levels - 1)),
                                     static_cast<uint8_t>(cfg_.depth_levels - 1)},
                            cs.updated);
        }
    }
    cs.removed.assign(removed_.begin(), removed_.end());
    return cs;
}

void OccupancyMap::clear_flags_rec(Node& n) {
    n.self_changed = false;
    if (n.dirty_path && n.has_children())
        for (unsigned i = 0; i < 8; ++i)
            if (auto* c = (*n.children)[i].get()) clear_flags_rec(*c);
    n.dirty_path = false;
}

void OccupancyMap::clear_change_tracking() {
    clear_flags_rec(root_);
    removed_.clear();
}

// --- batched cursor --------------------------------------------------------------------

OccupancyMap::UpdateCursor::UpdateCursor(OccupancyMap& map) : map_(map) {
    path_[map_.cfg_.depth_levels] = &map_.root_;
}

OccupancyMap::Node* OccupancyMap::UpdateCursor::seek(NodeCode code) {
    int start = map_.cfg_.depth_levels;
    if (prev_depth_ >= 0) {
        const uint64_t diff = code.morton ^ prev_morton_;
        const int diff_level = diff == 0 ? 0 : (std::bit_width(diff) - 1) / 3 + 1;
        start = std::min(start, std::max(diff_level, prev_depth_));
    }
    Node* cur = path_[start];
    cur->dirty_path = true;
    for (uint8_t depth = static_cast<uint8_t>(start); depth > code.depth;) {
        const uint64_t prefix = (code.morton >> (3 * depth)) << (3 * depth);
        if (!cur->has_children()) map_.expand_collapsed(*cur, depth, prefix);
        const uint8_t child_depth = static_cast<uint8_t>(depth - 1);
        const unsigned oct = static_cast<unsigned>((code.morton >> (3 * child_depth)) & 7);
        const uint64_t child_morton = (code.morton >> (3 * child_depth)) << (3 * child_depth);
        auto& slot = (*cur->children)[oct];
        if (!slot) {
            Node* c = map_.create_child(*cur, child_depth, child_morton);
            if (child_depth > code.depth)
                c->children = std::make_unique<std::array<std::unique_ptr<Node>, 8>>();
        }
        cur = slot.get();
        cur->dirty_path = true;
        path_[child_depth] = cur;
        depth = child_depth;
    }
    prev_morton_ = code.morton;
    prev_depth_ = code.depth;
    return cur;
}

void OccupancyMap::UpdateCursor::update_leaf(NodeCode code, double delta_l,
                                             const std::optional<Color>& color,
                                             std::span<const uint16_t> labels) {
    Node* leaf = seek(code);
    map_.apply_leaf_update(*leaf, false, delta_l, color, labels);
}

void OccupancyMap::UpdateCursor::update_region(NodeCode code, double delta_l) {
    Node* target = seek(code);
    map_.apply_region_update(*target, code.depth, code.morton, delta_l);
}

}  // namespace voxmap
