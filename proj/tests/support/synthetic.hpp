#pragma once

// Synthetic fixtures shared by the test suites: stripe patterns with a known
// orientation, UV-sphere meshes, guidance-line textures, and scratch-dir
// plumbing.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include "texflow/image.hpp"
#include "texflow/mesh.hpp"
#include "texflow/rng.hpp"

namespace testsupport {

// Sinusoidal stripes with orientation theta (stripes run along theta,
// intensity varies along the normal), values in [0,1].
inline texflow::ImageGrid stripe_image(int w, int h, double theta_deg,
                                       double wavelength, int channels = 3) {
    texflow::ImageGrid img(w, h, channels);
    double t = theta_deg * M_PI / 180.0;
    double k = 2.0 * M_PI / wavelength;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double phase = k * (-x * std::sin(t) + y * std::cos(t));
            double v = 0.5 + 0.5 * std::sin(phase);
            double* p = img.pixel(x, y);
            for (int c = 0; c < channels; ++c) p[c] = v;
        }
    return img;
}

// White texture crossed by dark horizontal guidance lines.
inline texflow::ImageGrid guidance_lines(int w, int h, int spacing, int thickness) {
    texflow::ImageGrid img(w, h, 1, 1.0);
    for (int y = 0; y < h; ++y) {
        if (y % spacing < thickness)
            for (int x = 0; x < w; ++x) img.at(x, y) = 0.0;
    }
    return img;
}

inline texflow::ImageGrid constant_image(int w, int h, int channels, double v) {
    return texflow::ImageGrid(w, h, channels, v);
}

inline texflow::ImageGrid random_image(int w, int h, int channels, uint64_t seed) {
    texflow::ImageGrid img(w, h, channels);
    texflow::Rng rng(seed);
    for (size_t i = 0; i < img.size(); ++i) img.data()[i] = rng.uniform();
    return img;
}

// UV sphere of radius 1: latitude rings mapped to v, longitude to u, with a
// duplicated seam column so the UV chart is rectangular.
inline std::string uv_sphere_obj(int stacks = 12, int slices = 16) {
    std::string out;
    char line[128];
    auto emit = [&](const char* fmt, auto... args) {
        std::snprintf(line, sizeof(line), fmt, args...);
        out += line;
    };
    for (int i = 0; i <= stacks; ++i) {
        double phi = M_PI * i / stacks;
        for (int j = 0; j <= slices; ++j) {
            double psi = 2.0 * M_PI * j / slices;
            emit("v %.9f %.9f %.9f\n", std::sin(phi) * std::cos(psi), std::cos(phi),
                 std::sin(phi) * std::sin(psi));
            emit("vt %.9f %.9f\n", static_cast<double>(j) / slices,
                 1.0 - static_cast<double>(i) / stacks);
        }
    }
    int cols = slices + 1;
    auto idx = [&](int i, int j) { return i * cols + j + 1; }; // 1-based
    for (int i = 0; i < stacks; ++i) {
        for (int j = 0; j < slices; ++j) {
            int a = idx(i, j), b = idx(i, j + 1), c = idx(i + 1, j + 1), d = idx(i + 1, j);
            if (i > 0) emit("f %d/%d %d/%d %d/%d\n", a, a, b, b, c, c);
            if (i + 1 < stacks) emit("f %d/%d %d/%d %d/%d\n", a, a, c, c, d, d);
        }
    }
    return out;
}

// A unit quad in the z=0 plane covering uv [0,1]^2 (two triangles).
inline std::string quad_obj(double half = 1.0) {
    char buf[512];
    std::snprintf(buf, sizeof(buf),
                  "v %.9f %.9f 0\nv %.9f %.9f 0\nv %.9f %.9f 0\nv %.9f %.9f 0\n"
                  "vt 0 0\nvt 1 0\nvt 1 1\nvt 0 1\n"
                  "f 1/1 2/2 3/3\nf 1/1 3/3 4/4\n",
                  -half, -half, half, -half, half, half, -half, half);
    return buf;
}

// Per-test scratch directory under the build tree, wiped on creation.
inline std::string scratch_dir(const std::string& name) {
    namespace fs = std::filesystem;
    fs::path p = fs::path("test_tmp") / name;
    fs::remove_all(p);
    fs::create_directories(p);
    return p.string();
}

inline void write_text(const std::string& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    f << text;
}

inline std::string read_bytes(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>());
}

} // namespace testsupport
