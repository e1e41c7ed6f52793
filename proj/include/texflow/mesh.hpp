#pragma once

#include <array>
#include <stdexcept>
#include <string>
#include <vector>

#include "texflow/vec.hpp"

namespace texflow {

struct MeshError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// One triangle corner: indices into Mesh::vertices and Mesh::uvs.
struct FaceVertex {
    int position = 0;
    int uv = 0;
};

using Face = std::array<FaceVertex, 3>;

// Triangulated UV-mapped mesh. UVs lie in [0,1]^2 after ingestion.
struct Mesh {
    std::vector<Vec3> vertices;
    std::vector<Vec2> uvs;
    std::vector<Face> faces;

    Vec3 bounds_min() const;
    Vec3 bounds_max() const;
    Vec3 center() const;
    double bounding_radius() const;
};

// Wavefront OBJ subset: v, vt, f records, comments, negative indices.
// Polygon faces are split into triangle fans. Faces without vt indices are
// rejected (the pipeline requires a UV-mapped mesh).
Mesh load_mesh(const std::string& path);
Mesh parse_obj(const std::string& text, const std::string& source_name);

} // namespace texflow
