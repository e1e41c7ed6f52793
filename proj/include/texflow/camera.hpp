#pragma once

#include <vector>

#include "texflow/vec.hpp"

namespace texflow {

// Pinhole camera looking from position towards target. Depth values are
// distances along the view axis in model units, valid in (near, far).
struct Camera {
    Vec3 position;
    Vec3 target;
    Vec3 up{0, 1, 0};
    double vfov = 0.8;        // vertical field of view, radians
    double near_plane = 0.01;
    double far_plane = 1000.0;
};

// n cameras on a Fibonacci-sphere of the given radius around center, all
// targeting center. Up is global +Y, or +X when the view direction is within
// 1e-6 of +-Y.
std::vector<Camera> fibonacci_viewpoints(int n, const Vec3& center, double radius,
                                         double vfov = 0.8,
                                         double near_plane = 0.0,
                                         double far_plane = 0.0);

} // namespace texflow
