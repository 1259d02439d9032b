#pragma once

#include <cstdint>
#include <tuple>

namespace voxmap {

// 3D Morton (Z-order) interleaving for up to 21 bits per axis. Bit 3i of the
// code holds x bit i, bit 3i+1 holds y bit i, bit 3i+2 holds z bit i.

namespace detail {

constexpr uint64_t spread3(uint64_t v) {
    v &= 0x1fffff;
    v = (v | v << 32) & 0x001f00000000ffff;
    v = (v | v << 16) & 0x001f0000ff0000ff;
    v = (v | v << 8) & 0x100f00f00f00f00f;
    v = (v | v << 4) & 0x10c30c30c30c30c3;
    v = (v | v << 2) & 0x1249249249249249;
    return v;
}

constexpr uint64_t compact3(uint64_t v) {
    v &= 0x1249249249249249;
    v = (v | v >> 2) & 0x10c30c30c30c30c3;
    v = (v | v >> 4) & 0x100f00f00f00f00f;
    v = (v | v >> 8) & 0x001f0000ff0000ff;
    v = (v | v >> 16) & 0x001f00000000ffff;
    v = (v | v >> 32) & 0x00000000001fffff;
    return v;
}

}  // namespace detail

constexpr uint64_t morton_encode(uint32_t x, uint32_t y, uint32_t z) {
    return detail::spread3(x) | detail::spread3(y) << 1 | detail::spread3(z) << 2;
}

constexpr std::tuple<uint32_t, uint32_t, uint32_t> morton_decode(uint64_t code) {
    return {static_cast<uint32_t>(detail::compact3(code)),
            static_cast<uint32_t>(detail::compact3(code >> 1)),
            static_cast<uint32_t>(detail::compact3(code >> 2))};
}

/// Address of one octree node: a leaf-scale Morton index plus the node's
/// level. depth 0 is the leaf level; the bits of `morton` below 3*depth are
/// zero, so every code is canonical for its depth.
struct NodeCode {
    uint64_t morton = 0;
    uint8_t depth = 0;

    bool operator==(const NodeCode&) const = default;

    bool canonical() const { return depth >= 21 || (morton & ((uint64_t{1} << (3 * depth)) - 1)) == 0; }

    NodeCode parent() const {
        const int shift = 3 * (depth + 1);
        return {(morton >> shift) << shift, static_cast<uint8_t>(depth + 1)};
    }

    /// Child octant i in 0..7; valid only for depth > 0.
    NodeCode child(unsigned i) const {
        return {morton | (uint64_t{i} << (3 * (depth - 1))), static_cast<uint8_t>(depth - 1)};
    }

    /// Octant of this code within its parent.
    unsigned octant() const { return static_cast<unsigned>((morton >> (3 * depth)) & 7); }

    /// True if `other` lies inside (or equals) this node's subtree.
    bool ancestor_of(const NodeCode& other) const {
        if (other.depth > depth) return false;
        const int shift = 3 * depth;
        return (other.morton >> shift) == (morton >> shift);
    }
};

/// Sort key used by the wire formats: depth descending, then morton ascending,
/// so parents always precede their descendants.
struct NodeCodeStreamOrder {
    bool operator()(const NodeCode& a, const NodeCode& b) const {
        if (a.depth != b.depth) return a.depth > b.depth;
        return a.morton < b.morton;
    }
};

}  // namespace voxmap
