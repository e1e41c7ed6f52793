#include "texflow/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace texflow {

Vec3 Mesh::bounds_min() const {
    Vec3 m{1e300, 1e300, 1e300};
    for (const Vec3& v : vertices) {
        m.x = std::min(m.x, v.x);
        m.y = std::min(m.y, v.y);
        m.z = std::min(m.z, v.z);
    }
    return m;
}

Vec3 Mesh::bounds_max() const {
    Vec3 m{-1e300, -1e300, -1e300};
    for (const Vec3& v : vertices) {
        m.x = std::max(m.x, v.x);
        m.y = std::max(m.y, v.y);
        m.z = std::max(m.z, v.z);
    }
    return m;
}

Vec3 Mesh::center() const {
    Vec3 lo = bounds_min(), hi = bounds_max();
    return (lo + hi) * 0.5;
}

double Mesh::bounding_radius() const {
    Vec3 c = center();
    double r = 0;
    for (const Vec3& v : vertices) r = std::max(r, length(v - c));
    return r;
}

namespace {

// values already inside [0,1] are left untouched so seam coordinates at
// exactly 1.0 survive ingestion
double wrap_uv(double v) {
    if (v >= 0.0 && v <= 1.0) return v;
    return v - std::floor(v);
}

[[noreturn]] void fail(const std::string& src, int line, const std::string& what) {
    throw MeshError(src + ":" + std::to_string(line) + ": " + what);
}

int resolve_index(int raw, size_t count, const std::string& src, int line) {
    int idx = raw > 0 ? raw - 1 : static_cast<int>(count) + raw;
    if (raw == 0 || idx < 0 || idx >= static_cast<int>(count))
        fail(src, line, "index " + std::to_string(raw) + " out of range");
    return idx;
}

} // namespace

Mesh parse_obj(const std::string& text, const std::string& source_name) {
    Mesh mesh;
    std::istringstream in(text);
    std::string line_text;
    int line_no = 0;
    while (std::getline(in, line_text)) {
        ++line_no;
        if (!line_text.empty() && line_text.back() == '\r') line_text.pop_back();
        std::istringstream line(line_text);
        std::string tag;
        if (!(line >> tag) || tag[0] == '#') continue;
        if (tag == "v") {
            Vec3 v;
            if (!(line >> v.x >> v.y >> v.z))
                fail(source_name, line_no, "malformed vertex record");
            mesh.vertices.push_back(v);
        } else if (tag == "vt") {
            Vec2 uv;
            if (!(line >> uv.x >> uv.y))
                fail(source_name, line_no, "malformed texture coordinate record");
            uv.x = wrap_uv(uv.x);
            uv.y = wrap_uv(uv.y);
            mesh.uvs.push_back(uv);
        } else if (tag == "f") {
            std::vector<FaceVertex> corners;
            std::string token;
            while (line >> token) {
                size_t s1 = token.find('/');
                if (s1 == std::string::npos)
                    fail(source_name, line_no, "mesh is not UV-mapped");
                size_t s2 = token.find('/', s1 + 1);
                std::string vs = token.substr(0, s1);
                std::string ts = s2 == std::string::npos ? token.substr(s1 + 1)
                                                         : token.substr(s1 + 1, s2 - s1 - 1);
                if (vs.empty() || ts.empty())
                    fail(source_name, line_no, "mesh is not UV-mapped");
                int vi = 0, ti = 0;
                try {
                    vi = std::stoi(vs);
                    ti = std::stoi(ts);
                } catch (const std::exception&) {
                    fail(source_name, line_no, "malformed face record");
                }
                FaceVertex fv;
                fv.position = resolve_index(vi, mesh.vertices.size(), source_name, line_no);
                fv.uv = resolve_index(ti, mesh.uvs.size(), source_name, line_no);
                corners.push_back(fv);
            }
            if (corners.size() < 3)
                fail(source_name, line_no, "face with fewer than 3 vertices");
            for (size_t k = 2; k < corners.size(); ++k)
                mesh.faces.push_back(Face{corners[0], corners[k - 1], corners[k]});
        }
        // vn, o, g, s, usemtl, mtllib and friends are ignored
    }
    if (mesh.faces.empty())
        throw MeshError(source_name + ": mesh contains no faces");
    return mesh;
}

Mesh load_mesh(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw MeshError("cannot open mesh file: " + path);
    std::ostringstream buf;
    buf << f.rdbuf();
    return parse_obj(buf.str(), path);
}

} // namespace texflow
