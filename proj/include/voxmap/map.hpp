#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <vector>

#include "voxmap/config.hpp"
#include "voxmap/geometry.hpp"
#include "voxmap/morton.hpp"
#include "voxmap/payload.hpp"

namespace voxmap {

/// Sparse octree voxel map with explicit unknown space.
///
/// Leaves live at depth 0, the (unaddressable) root at depth_levels. A node
/// without children is either a leaf or a collapsed uniform subtree carrying
/// the shared leaf payload; a node with children is an inner node whose
/// payload is the child summary (max log-odds, latest timestep, per-label
/// count sums) maintained by propagate().
///
/// Single-writer, multiple-reader: mutations must not run concurrently with
/// anything else. Change tracking feeds the delta codec: dirty_path marks
/// subtrees containing changes since the last publish, self_changed marks
/// nodes whose stored payload changed, and removed codes collect tombstones.
class OccupancyMap {
public:
    struct Node {
        LeafPayload payload;
        bool dirty_path = false;
        bool self_changed = false;
        std::unique_ptr<std::array<std::unique_ptr<Node>, 8>> children;

        bool has_children() const { return children != nullptr; }
        const Node* child(unsigned i) const { return children ? (*children)[i].get() : nullptr; }
    };

    explicit OccupancyMap(MapConfig cfg);

    OccupancyMap(OccupancyMap&&) noexcept = default;
    OccupancyMap& operator=(OccupancyMap&&) noexcept = default;

    const MapConfig& config() const { return cfg_; }
    uint32_t frame_counter() const { return frame_counter_; }
    void set_frame_counter(uint32_t t) { frame_counter_ = t; }
    uint64_t publish_seq() const { return publish_seq_; }
    void set_publish_seq(uint64_t s) { publish_seq_ = s; }

    // --- addressing ---------------------------------------------------

    Aabb world_bounds() const;
    bool contains(const Vec3& p) const;
    /// Canonical code of the voxel at `depth` containing p. Cells are
    /// half-open [lo, hi): a coordinate exactly on a face belongs to the
    /// voxel with the larger index. Throws OutOfBoundsError.
    NodeCode code_from_point(const Vec3& p, uint8_t depth) const;
    /// Center of the voxel addressed by `code`.
    Vec3 point_from_code(NodeCode code) const;
    Aabb code_bounds(NodeCode code) const;

    // --- mutation (writer context only) --------------------------------

    /// Additive log-odds update of one leaf, clamped to [l_min, l_max].
    /// Stamps the frame counter, folds `color` into the running average and
    /// increments each label in `labels` by one. Creates missing nodes on
    /// the path, expanding collapsed subtrees as needed.
    void update_leaf(NodeCode code, double delta_l, std::optional<Color> color,
                     std::span<const uint16_t> labels);
    void update_leaf(NodeCode code, double delta_l, std::optional<Color> color = {},
                     std::optional<uint16_t> label = {});

    /// Blanket log-odds update of every leaf under `code` (any depth),
    /// preserving finer structure where it exists. Used for free-space
    /// marking discretized at a coarse level; absent octants materialize as
    /// collapsed uniform nodes.
    void update_region(NodeCode code, double delta_l);

    /// Recompute inner summaries along modified paths.
    void propagate();

    /// Collapse subtrees whose 8 children are all childless with bit-identical
    /// payloads. Requires propagate(); runs it defensively. Returns the number
    /// of collapse events. Query results are unchanged by pruning.
    size_t prune();

    // --- reads ----------------------------------------------------------

    /// Payload snapshot: leaf payload at depth 0, summary payload for inner
    /// nodes, scaled uniform view inside collapsed subtrees. nullopt for
    /// never-touched space (read as Unknown).
    std::optional<LeafPayload> get_payload(NodeCode code) const;
    OccupancyState classify(double log_odds) const {
        if (log_odds > logit_occ_) return OccupancyState::Occupied;
        if (log_odds < logit_free_) return OccupancyState::Free;
        return OccupancyState::Unknown;
    }
    OccupancyState state_at(NodeCode code) const;

    const Node& root() const { return root_; }
    uint64_t node_count() const { return node_count_; }
    uint64_t memory_bytes() const;

    OccupancyMap clone() const;
    bool equals(const OccupancyMap& other) const;

    /// Depth-first visit of every stored (addressable) node.
    template <typename Fn>
    void visit_stored(Fn&& fn) const {
        for (unsigned i = 0; i < 8; ++i) {
            if (const Node* c = root_.child(i))
                visit_rec(*c, NodeCode{uint64_t{i} << (3 * (cfg_.depth_levels - 1)),
                                       static_cast<uint8_t>(cfg_.depth_levels - 1)},
                          fn);
        }
    }

    // --- replication support (codec) ------------------------------------

    /// Absolute create-or-overwrite of a stored payload; no change tracking.
    void apply_record(NodeCode code, const LeafPayload& payload);
    /// Tombstone: drop the node (and any subtree) at `code`; no-op if absent.
    void remove_subtree(NodeCode code);
    /// Drop all stored nodes.
    void clear();

    struct ChangeSet {
        std::vector<std::pair<NodeCode, const LeafPayload*>> updated;
        std::vector<NodeCode> removed;
    };
    /// Nodes whose stored payload changed since the last publish, plus
    /// tombstones for removed ones. Pointers valid until the next mutation.
    ChangeSet collect_changes() const;
    void clear_change_tracking();

    class UpdateCursor;

private:
    friend class UpdateCursor;

    struct WalkFrame {
        Node* node;
        uint8_t depth;
    };

    Node* descend_create(NodeCode code);  // walk/create path root -> code, marking dirty
    void expand_collapsed(Node& n, uint8_t depth, uint64_t morton_prefix);
    Node* create_child(Node& parent, uint8_t child_depth, uint64_t child_morton);
    void apply_leaf_update(Node& n, bool created, double delta_l, const std::optional<Color>& color,
                           std::span<const uint16_t> labels);
    void apply_region_update(Node& n, uint8_t depth, uint64_t morton_prefix, double delta_l);
    LeafPayload compute_summary(const Node& n, uint8_t depth) const;
    void propagate_rec(Node& n, uint8_t depth);
    size_t prune_rec(Node& n, uint8_t depth, uint64_t morton_prefix);
    void clear_flags_rec(Node& n);

    template <typename Fn>
    void visit_rec(const Node& n, NodeCode code, Fn& fn) const {
        fn(code, n);
        if (!n.has_children()) return;
        for (unsigned i = 0; i < 8; ++i)
            if (const Node* c = n.child(i)) visit_rec(*c, code.child(i), fn);
    }

    MapConfig cfg_;
    double logit_occ_ = 0.0;
    double logit_free_ = 0.0;
    uint32_t frame_counter_ = 0;
    uint64_t publish_seq_ = 0;
    uint64_t node_count_ = 0;
    Node root_;
    std::set<NodeCode, NodeCodeStreamOrder> removed_;
};

/// Batched mutation helper exploiting Morton-sorted call order: consecutive
/// codes share tree paths, so the cursor re-enters the tree at the deepest
/// common ancestor instead of the root. Results are bit-identical to the
/// plain OccupancyMap methods.
class OccupancyMap::UpdateCursor {
public:
    explicit UpdateCursor(OccupancyMap& map);

    void update_leaf(NodeCode code, double delta_l, const std::optional<Color>& color,
                     std::span<const uint16_t> labels);
    void update_region(NodeCode code, double delta_l);

private:
    Node* seek(NodeCode code);

    OccupancyMap& map_;
    std::array<Node*, 22> path_{};
    uint64_t prev_morton_ = 0;
    int prev_depth_ = -1;  // -1: cold cursor
};

}  // namespace voxmap
