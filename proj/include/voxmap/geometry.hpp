#pragma once

#include <array>
#include <cmath>
#include <cstdint>

namespace voxmap {

struct Vec3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    constexpr Vec3() = default;
    constexpr Vec3(double x_, double y_, double z_) : x(x_), y(y_), z(z_) {}

    constexpr Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    constexpr Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    constexpr Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
    constexpr Vec3 operator/(double s) const { return {x / s, y / s, z / s}; }

    constexpr double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
    double norm() const { return std::sqrt(dot(*this)); }
    constexpr double operator[](int i) const { return i == 0 ? x : (i == 1 ? y : z); }

    bool finite() const { return std::isfinite(x) && std::isfinite(y) && std::isfinite(z); }
};

constexpr Vec3 operator*(double s, const Vec3& v) { return v * s; }

struct Color {
    uint8_t r = 0;
    uint8_t g = 0;
    uint8_t b = 0;

    bool operator==(const Color&) const = default;
};

/// Closed axis-aligned box in meters.
struct Aabb {
    Vec3 min;
    Vec3 max;

    bool valid() const { return min.x <= max.x && min.y <= max.y && min.z <= max.z; }
    bool contains(const Vec3& p) const {
        return p.x >= min.x && p.x <= max.x && p.y >= min.y && p.y <= max.y && p.z >= min.z &&
               p.z <= max.z;
    }
    bool intersects(const Aabb& o) const {
        return min.x <= o.max.x && o.min.x <= max.x && min.y <= o.max.y && o.min.y <= max.y &&
               min.z <= o.max.z && o.min.z <= max.z;
    }
    /// Squared distance from p to the closest point of the box.
    double dist2(const Vec3& p) const {
        auto axis = [](double v, double lo, double hi) {
            double d = v < lo ? lo - v : (v > hi ? v - hi : 0.0);
            return d * d;
        };
        return axis(p.x, min.x, max.x) + axis(p.y, min.y, max.y) + axis(p.z, min.z, max.z);
    }
};

/// Rigid sensor-to-world transform: rotation (row-major 3x3) plus translation.
struct RigidTransform {
    std::array<std::array<double, 3>, 3> rot{{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}};
    Vec3 trans;

    static RigidTransform identity() { return {}; }

    Vec3 apply(const Vec3& p) const {
        return {rot[0][0] * p.x + rot[0][1] * p.y + rot[0][2] * p.z + trans.x,
                rot[1][0] * p.x + rot[1][1] * p.y + rot[1][2] * p.z + trans.y,
                rot[2][0] * p.x + rot[2][1] * p.y + rot[2][2] * p.z + trans.z};
    }

    /// Orthonormality and det(+1) check within `tol`.
    bool is_rotation(double tol = 1e-6) const;
};

}  // namespace voxmap
