#include "voxmap/query.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>

#include "voxmap/error.hpp"
#include "voxmap/semantics.hpp"

namespace voxmap {

Region Region::aabb(const Vec3& min, const Vec3& max) {
    Region r;
    r.kind = Kind::Box;
    r.box = {min, max};
    if (!r.box.valid()) throw InvalidConfigError("region box must have min <= max");
    return r;
}

Region Region::sphere(const Vec3& center, double radius) {
    if (!(radius > 0.0)) throw InvalidConfigError("sphere radius must be > 0");
    Region r;
    r.kind = Kind::Sphere;
    r.center = center;
    r.radius = radius;
    return r;
}

// --- predicate ------------------------------------------------------------

struct Predicate::Expr {
    enum class Op : uint8_t { True, StateIn, HasLabel, TopLabel, Before, AtOrAfter, And, Or, Not };

    Op op = Op::True;
    unsigned state_mask = 0;
    uint16_t label = 0;
    uint32_t timestep = 0;
    std::shared_ptr<const Expr> a;
    std::shared_ptr<const Expr> b;
};

namespace {

using Expr = Predicate::Expr;
using Op = Expr::Op;

unsigned state_bit(OccupancyState s) { return 1u << static_cast<unsigned>(s); }

bool eval_exact(const Expr& e, const LeafPayload& p, const OccupancyMap& map) {
    switch (e.op) {
        case Op::True: return true;
        case Op::StateIn: return (e.state_mask & state_bit(map.classify(p.log_odds))) != 0;
        case Op::HasLabel: return semantics_count_of(p.semantics, e.label) > 0;
        case Op::TopLabel: {
            const auto top = voxel_top_label(p, std::nullopt);
            return top && *top == e.label;
        }
        case Op::Before: return p.timestep < e.timestep;
        case Op::AtOrAfter: return p.timestep >= e.timestep;
        case Op::And: return eval_exact(*e.a, p, map) && eval_exact(*e.b, p, map);
        case Op::Or: return eval_exact(*e.a, p, map) || eval_exact(*e.b, p, map);
        case Op::Not: return !eval_exact(*e.a, p, map);
    }
    return false;
}

Tri tri_not(Tri t) {
    if (t == Tri::Yes) return Tri::No;
    if (t == Tri::No) return Tri::Yes;
    return Tri::Maybe;
}

// Summary semantics: max log-odds (missing octants contribute the unknown
// prior), max timestep, per-label count sums. From those, the set of states
// voxels in the subtree can take, and sound No / universal Yes answers.
Tri eval_summary(const Expr& e, const LeafPayload& s, const OccupancyMap& map) {
    switch (e.op) {
        case Op::True: return Tri::Yes;
        case Op::StateIn: {
            unsigned possible = 0;
            switch (map.classify(s.log_odds)) {
                case OccupancyState::Free: possible = state_bit(OccupancyState::Free); break;
                case OccupancyState::Unknown:
                    possible = state_bit(OccupancyState::Free) | state_bit(OccupancyState::Unknown);
                    break;
                case OccupancyState::Occupied:
                    possible = state_bit(OccupancyState::Free) |
                               state_bit(OccupancyState::Unknown) |
                               state_bit(OccupancyState::Occupied);
                    break;
            }
            if ((possible & e.state_mask) == 0) return Tri::No;
            if ((possible & ~e.state_mask) == 0) return Tri::Yes;
            return Tri::Maybe;
        }
        case Op::HasLabel:
        case Op::TopLabel:
            return semantics_count_of(s.semantics, e.label) > 0 ? Tri::Maybe : Tri::No;
        case Op::Before: return Tri::Maybe;
        case Op::AtOrAfter:
            if (e.timestep == 0) return Tri::Yes;
            return s.timestep >= e.timestep ? Tri::Maybe : Tri::No;
        case Op::And: {
            const Tri a = eval_summary(*e.a, s, map);
            if (a == Tri::No) return Tri::No;
            const Tri b = eval_summary(*e.b, s, map);
            if (b == Tri::No) return Tri::No;
            return (a == Tri::Yes && b == Tri::Yes) ? Tri::Yes : Tri::Maybe;
        }
        case Op::Or: {
            const Tri a = eval_summary(*e.a, s, map);
            if (a == Tri::Yes) return Tri::Yes;
            const Tri b = eval_summary(*e.b, s, map);
            if (b == Tri::Yes) return Tri::Yes;
            return (a == Tri::No && b == Tri::No) ? Tri::No : Tri::Maybe;
        }
        case Op::Not: return tri_not(eval_summary(*e.a, s, map));
    }
    return Tri::Maybe;
}

std::shared_ptr<const Expr> make_expr(Expr e) { return std::make_shared<const Expr>(std::move(e)); }

}  // namespace

Predicate Predicate::always_true() { return Predicate(make_expr(Expr{})); }

Predicate Predicate::state_mask(unsigned mask) {
    Expr e;
    e.op = Op::StateIn;
    e.state_mask = mask & 7u;
    return Predicate(make_expr(std::move(e)));
}

Predicate Predicate::state_in(std::initializer_list<OccupancyState> states) {
    unsigned mask = 0;
    for (OccupancyState s : states) mask |= state_bit(s);
    return state_mask(mask);
}

Predicate Predicate::has_label(uint16_t label) {
    Expr e;
    e.op = Op::HasLabel;
    e.label = label;
    return Predicate(make_expr(std::move(e)));
}

Predicate Predicate::top_label_is(uint16_t label) {
    Expr e;
    e.op = Op::TopLabel;
    e.label = label;
    return Predicate(make_expr(std::move(e)));
}

Predicate Predicate::updated_before(uint32_t timestep) {
    Expr e;
    e.op = Op::Before;
    e.timestep = timestep;
    return Predicate(make_expr(std::move(e)));
}

Predicate Predicate::updated_at_or_after(uint32_t timestep) {
    Expr e;
    e.op = Op::AtOrAfter;
    e.timestep = timestep;
    return Predicate(make_expr(std::move(e)));
}

Predicate Predicate::operator&&(const Predicate& o) const {
    Expr e;
    e.op = Op::And;
    e.a = expr_;
    e.b = o.expr_;
    return Predicate(make_expr(std::move(e)));
}

Predicate Predicate::operator||(const Predicate& o) const {
    Expr e;
    e.op = Op::Or;
    e.a = expr_;
    e.b = o.expr_;
    return Predicate(make_expr(std::move(e)));
}

Predicate Predicate::operator!() const {
    Expr e;
    e.op = Op::Not;
    e.a = expr_;
    return Predicate(make_expr(std::move(e)));
}

bool Predicate::matches(const LeafPayload* payload, const OccupancyMap& map) const {
    return eval_exact(*expr_, payload ? *payload : absent_payload(), map);
}

Tri Predicate::summary_matches(const LeafPayload& summary, const OccupancyMap& map) const {
    return eval_summary(*expr_, summary, map);
}

// --- traversal --------------------------------------------------------------

namespace {

// Inclusive index window at the target depth.
struct IndexWindow {
    int64_t lo[3];
    int64_t hi[3];

    bool empty() const { return lo[0] > hi[0] || lo[1] > hi[1] || lo[2] > hi[2]; }
};

IndexWindow window_for(const MapConfig& cfg, const Region& region, uint8_t depth) {
    const int64_t cells = int64_t{1} << (cfg.depth_levels - depth);
    const int64_t half = cells / 2;
    IndexWindow w{{0, 0, 0}, {cells - 1, cells - 1, cells - 1}};
    if (region.kind == Region::Kind::Everything) return w;
    const double res = cfg.resolution * static_cast<double>(uint64_t{1} << depth);
    Vec3 lo, hi;
    if (region.kind == Region::Kind::Box) {
        lo = region.box.min;
        hi = region.box.max;
    } else {
        lo = region.center - Vec3{region.radius, region.radius, region.radius};
        hi = region.center + Vec3{region.radius, region.radius, region.radius};
    }
    for (int a = 0; a < 3; ++a) {
        w.lo[a] = std::max<int64_t>(static_cast<int64_t>(std::floor(lo[a] / res)) + half, 0);
        w.hi[a] = std::min<int64_t>(static_cast<int64_t>(std::floor(hi[a] / res)) + half, cells - 1);
    }
    return w;
}

struct Walker {
    const OccupancyMap& map;
    const Region& region;
    const Predicate& pred;
    uint8_t depth;         // target depth
    bool use_pruning;
    IndexWindow window;
    double res_t;          // voxel edge at target depth
    double half_t;         // cells at target depth / 2
    uint64_t scale_t;      // 8^depth

    std::vector<QueryHit>* hits = nullptr;
    StateCounts* counts = nullptr;

    Vec3 center_of(int64_t ix, int64_t iy, int64_t iz) const {
        return {(static_cast<double>(ix) - half_t + 0.5) * res_t,
                (static_cast<double>(iy) - half_t + 0.5) * res_t,
                (static_cast<double>(iz) - half_t + 0.5) * res_t};
    }

    bool in_sphere(const Vec3& c) const {
        const Vec3 d = c - region.center;
        return d.dot(d) <= region.radius * region.radius;
    }

    NodeCode code_of(int64_t ix, int64_t iy, int64_t iz) const {
        const uint64_t m = morton_encode(static_cast<uint32_t>(ix), static_cast<uint32_t>(iy),
                                         static_cast<uint32_t>(iz))
                           << (3 * depth);
        return {m, depth};
    }

    // Target-depth index span of a node, intersected with the window.
    struct Span3 {
        int64_t lo[3];
        int64_t hi[3];
        bool empty;
    };

    Span3 clip(uint64_t morton_prefix, uint8_t node_depth) const {
        const auto [gx, gy, gz] = morton_decode(morton_prefix);
        const int64_t side = int64_t{1} << (node_depth - depth);
        const int64_t base[3] = {static_cast<int64_t>(gx) >> depth,
                                 static_cast<int64_t>(gy) >> depth,
                                 static_cast<int64_t>(gz) >> depth};
        Span3 s{};
        s.empty = false;
        for (int a = 0; a < 3; ++a) {
            s.lo[a] = std::max(base[a], window.lo[a]);
            s.hi[a] = std::min(base[a] + side - 1, window.hi[a]);
            if (s.lo[a] > s.hi[a]) s.empty = true;
        }
        return s;
    }

    // Uniform block: every target voxel inside shares `payload`.
    void emit_uniform(const Span3& s, const LeafPayload& payload) {
        if (s.empty) return;
        if (counts) {
            uint64_t n = 0;
            if (region.kind == Region::Kind::Sphere) {
                for (int64_t x = s.lo[0]; x <= s.hi[0]; ++x)
                    for (int64_t y = s.lo[1]; y <= s.hi[1]; ++y)
                        for (int64_t z = s.lo[2]; z <= s.hi[2]; ++z)
                            if (in_sphere(center_of(x, y, z))) ++n;
            } else {
                n = static_cast<uint64_t>(s.hi[0] - s.lo[0] + 1) *
                    static_cast<uint64_t>(s.hi[1] - s.lo[1] + 1) *
                    static_cast<uint64_t>(s.hi[2] - s.lo[2] + 1);
            }
            bucket(payload.log_odds) += n;
            return;
        }
        if (!pred.matches(&payload, map)) return;
        for (int64_t x = s.lo[0]; x <= s.hi[0]; ++x)
            for (int64_t y = s.lo[1]; y <= s.hi[1]; ++y)
                for (int64_t z = s.lo[2]; z <= s.hi[2]; ++z) {
                    if (region.kind == Region::Kind::Sphere && !in_sphere(center_of(x, y, z)))
                        continue;
                    hits->push_back({code_of(x, y, z), payload});
                }
    }

    uint64_t& bucket(double log_odds) {
        switch (map.classify(log_odds)) {
            case OccupancyState::Free: return counts->free;
            case OccupancyState::Occupied: return counts->occupied;
            default: return counts->unknown;
        }
    }

    void emit_single(NodeCode code, const LeafPayload& payload) {
        if (region.kind == Region::Kind::Sphere) {
            const auto [gx, gy, gz] = morton_decode(code.morton);
            if (!in_sphere(center_of(static_cast<int64_t>(gx) >> depth,
                                     static_cast<int64_t>(gy) >> depth,
                                     static_cast<int64_t>(gz) >> depth)))
                return;
        }
        if (counts) {
            ++bucket(payload.log_odds);
            return;
        }
        if (pred.matches(&payload, map)) hits->push_back({code, payload});
    }

    void walk(const OccupancyMap::Node* node, uint8_t node_depth, uint64_t morton_prefix) {
        const Span3 span = clip(morton_prefix, node_depth);
        if (span.empty) return;

        if (!node || !node->has_children()) {
            // Absent space or a collapsed uniform subtree.
            const LeafPayload uniform =
                node ? scale_payload_counts(node->payload, scale_t) : absent_payload();
            if (node_depth == depth) {
                emit_single(NodeCode{morton_prefix, depth}, uniform);
            } else {
                emit_uniform(span, uniform);
            }
            return;
        }
        if (node_depth == depth) {
            emit_single(NodeCode{morton_prefix, depth}, node->payload);
            return;
        }
        if (!counts && use_pruning &&
            pred.summary_matches(node->payload, map) == Tri::No)
            return;
        const uint8_t child_depth = static_cast<uint8_t>(node_depth - 1);
        for (unsigned i = 0; i < 8; ++i) {
            walk(node->child(i), child_depth, morton_prefix | (uint64_t{i} << (3 * child_depth)));
        }
    }

    void run() {
        const uint8_t top = static_cast<uint8_t>(map.config().depth_levels - 1);
        for (unsigned i = 0; i < 8; ++i)
            walk(map.root().child(i), top, uint64_t{i} << (3 * top));
    }
};

Walker make_walker(const OccupancyMap& map, const Region& region, const Predicate& pred,
                   uint8_t depth, bool use_pruning) {
    if (depth >= map.config().depth_levels)
        throw InvalidConfigError("query depth must be below depth_levels");
    Walker w{map, region, pred, depth, use_pruning,
             window_for(map.config(), region, depth),
             map.config().resolution * static_cast<double>(uint64_t{1} << depth),
             static_cast<double>((uint64_t{1} << (map.config().depth_levels - depth)) / 2),
             uint64_t{1} << (3 * depth)};
    return w;
}

}  // namespace

std::vector<QueryHit> query(const OccupancyMap& map, const Region& region,
                            const Predicate& predicate, uint8_t depth, const QueryOptions& opts) {
    std::vector<QueryHit> hits;
    Walker w = make_walker(map, region, predicate, depth, opts.use_summary_pruning);
    w.hits = &hits;
    w.run();
    return hits;
}

std::vector<NodeCode> occluded(const OccupancyMap& map, const Region& region, uint32_t now,
                               uint32_t stale_after, uint8_t depth) {
    const uint32_t cutoff = stale_after > now ? 0 : now - stale_after;
    const Predicate pred =
        Predicate::state_in({OccupancyState::Unknown}) || Predicate::updated_before(cutoff);
    std::vector<NodeCode> out;
    for (const QueryHit& h : query(map, region, pred, depth)) out.push_back(h.code);
    return out;
}

StateCounts count_states(const OccupancyMap& map, const Region& region, uint8_t depth) {
    StateCounts counts;
    const Predicate pred = Predicate::always_true();
    Walker w = make_walker(map, region, pred, depth, false);
    w.counts = &counts;
    w.run();
    return counts;
}

}  // namespace voxmap
