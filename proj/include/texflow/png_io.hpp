#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "texflow/image.hpp"

namespace texflow {

struct PngError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Reads an 8- or 16-bit PNG as 1- or 3-channel values in [0,1] (palette
// expanded, 16-bit divided by 65535). An alpha channel is dropped with a
// note appended to `warnings`.
ImageGrid load_png(const std::string& path, std::vector<std::string>* warnings = nullptr);

// Writes an 8-bit PNG (gray or RGB); values are clamped to [0,1] and
// rounded half-to-even.
void save_png(const ImageGrid& image, const std::string& path);

} // namespace texflow
