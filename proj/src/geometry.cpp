#include "voxmap/geometry.hpp"

#include <cmath>

namespace voxmap {

bool RigidTransform::is_rotation(double tol) const {
    // R * R^T == I
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
            double dot = 0.0;
            for (int k = 0; k < 3; ++k) dot += rot[i][k] * rot[j][k];
            const double expect = i == j ? 1.0 : 0.0;
            if (std::abs(dot - expect) > tol) return false;
        }
    }
    const double det = rot[0][0] * (rot[1][1] * rot[2][2] - rot[1][2] * rot[2][1]) -
                       rot[0][1] * (rot[1][0] * rot[2][2] - rot[1][2] * rot[2][0]) +
                       rot[0][2] * (rot[1][0] * rot[2][1] - rot[1][1] * rot[2][0]);
    return std::abs(det - 1.0) <= tol;
}

}  // namespace voxmap
