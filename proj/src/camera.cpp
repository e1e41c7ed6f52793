#include "texflow/camera.hpp"

#include <cmath>
#include <stdexcept>

namespace texflow {

std::vector<Camera> fibonacci_viewpoints(int n, const Vec3& center, double radius,
                                         double vfov, double near_plane,
                                         double far_plane) {
    if (n < 1) throw std::invalid_argument("fibonacci_viewpoints: n must be >= 1");
    if (radius <= 0) throw std::invalid_argument("fibonacci_viewpoints: radius must be > 0");
    if (near_plane <= 0) near_plane = 0.01 * radius;
    if (far_plane <= 0) far_plane = 100.0 * radius;

    const double golden_step = M_PI * (std::sqrt(5.0) + 1.0);
    std::vector<Camera> cams;
    cams.reserve(n);
    for (int i = 0; i < n; ++i) {
        // z runs over (-1,1) at midpoints of n equal segments
        double z = -1.0 + (2.0 * i + 1.0) / n;
        double r = std::sqrt(std::max(0.0, 1.0 - z * z));
        double theta = golden_step * i;
        Vec3 dir{r * std::cos(theta), r * std::sin(theta), z};

        Camera cam;
        cam.position = center + dir * radius;
        cam.target = center;
        Vec3 view = normalized(center - cam.position);
        cam.up = std::fabs(std::fabs(view.y) - 1.0) < 1e-6 ? Vec3{1, 0, 0} : Vec3{0, 1, 0};
        cam.vfov = vfov;
        cam.near_plane = near_plane;
        cam.far_plane = far_plane;
        cams.push_back(cam);
    }
    return cams;
}

} // namespace texflow
