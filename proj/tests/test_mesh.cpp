#include "doctest.h"

#include <cmath>

#include "texflow/mesh.hpp"

#include "synthetic.hpp"

using namespace texflow;
using namespace testsupport;

TEST_CASE("minimal single-triangle OBJ") {
    Mesh m = parse_obj("v 0 0 0\nv 1 0 0\nv 0 1 0\nvt 0 0\nvt 1 0\nvt 0 1\nf 1/1 2/2 3/3\n",
                       "tri.obj");
    CHECK(m.vertices.size() == 3);
    CHECK(m.uvs.size() == 3);
    CHECK(m.faces.size() == 1);
    CHECK(m.faces[0][0].position == 0);
    CHECK(m.faces[0][2].uv == 2);
}

TEST_CASE("quad face fans into two triangles 1-2-3, 1-3-4") {
    Mesh m = parse_obj(
        "v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nvt 0 0\nvt 1 0\nvt 1 1\nvt 0 1\n"
        "f 1/1 2/2 3/3 4/4\n",
        "quad.obj");
    REQUIRE(m.faces.size() == 2);
    CHECK(m.faces[0][0].position == 0);
    CHECK(m.faces[0][1].position == 1);
    CHECK(m.faces[0][2].position == 2);
    CHECK(m.faces[1][0].position == 0);
    CHECK(m.faces[1][1].position == 2);
    CHECK(m.faces[1][2].position == 3);
}

TEST_CASE("negative indices resolve against current array length") {
    Mesh m = parse_obj("v 0 0 0\nv 1 0 0\nv 0 1 0\nvt 0 0\nvt 1 0\nvt 0 1\nf -3/-3 -2/-2 -1/-1\n",
                       "neg.obj");
    REQUIRE(m.faces.size() == 1);
    CHECK(m.faces[0][0].position == 0);
    CHECK(m.faces[0][1].position == 1);
    CHECK(m.faces[0][2].position == 2);
}

TEST_CASE("v/vt/vn face form accepted, vn ignored") {
    Mesh m = parse_obj(
        "v 0 0 0\nv 1 0 0\nv 0 1 0\nvt 0 0\nvt 1 0\nvt 0 1\nvn 0 0 1\nf 1/1/1 2/2/1 3/3/1\n",
        "n.obj");
    CHECK(m.faces.size() == 1);
}

TEST_CASE("face without uv index is rejected") {
    CHECK_THROWS_WITH_AS(
        parse_obj("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 3\n", "nouv.obj"),
        doctest::Contains("mesh is not UV-mapped"), MeshError);
}

TEST_CASE("malformed records carry source and line number") {
    CHECK_THROWS_WITH_AS(parse_obj("v 0 0\n", "bad.obj"), doctest::Contains("bad.obj:1"),
                         MeshError);
    CHECK_THROWS_WITH_AS(
        parse_obj("v 0 0 0\nvt 0 0\nf 1/1 9/1 1/1\n", "oob.obj"),
        doctest::Contains("oob.obj:3"), MeshError);
    CHECK_THROWS_WITH_AS(parse_obj("v 0 0 0\nvt 0 0\n", "empty.obj"),
                         doctest::Contains("no faces"), MeshError);
}

TEST_CASE("uv coordinates wrap by fractional part, [0,1] untouched") {
    Mesh m = parse_obj(
        "v 0 0 0\nv 1 0 0\nv 0 1 0\nvt 1.25 -0.25\nvt 1.0 0.0\nvt 0.5 2.5\nf 1/1 2/2 3/3\n",
        "wrap.obj");
    CHECK(m.uvs[0].x == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(m.uvs[0].y == doctest::Approx(0.75).epsilon(1e-12));
    CHECK(m.uvs[1].x == 1.0); // seam value survives
    CHECK(m.uvs[1].y == 0.0);
    CHECK(m.uvs[2].y == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("comments and blank lines ignored") {
    Mesh m = parse_obj("# header\n\nv 0 0 0\nv 1 0 0\nv 0 1 0\nvt 0 0\nvt 1 0\nvt 0 1\n"
                       "# mid comment\nf 1/1 2/2 3/3\n",
                       "c.obj");
    CHECK(m.faces.size() == 1);
}

TEST_CASE("bounds, center and bounding radius") {
    Mesh m = parse_obj("v -1 -2 -3\nv 3 2 1\nv 0 0 0\nvt 0 0\nvt 1 0\nvt 0 1\nf 1/1 2/2 3/3\n",
                       "b.obj");
    CHECK(m.bounds_min().x == -1.0);
    CHECK(m.bounds_max().y == 2.0);
    CHECK(m.center().x == 1.0);
    CHECK(m.center().z == -1.0);
    // farthest vertex from center (1,0,-1) is (-1,-2,-3): dist = sqrt(4+4+4)
    CHECK(m.bounding_radius() == doctest::Approx(std::sqrt(12.0)).epsilon(1e-12));
}

TEST_CASE("load_mesh reads files and reports missing ones") {
    std::string dir = scratch_dir("mesh_load");
    write_text(dir + "/q.obj", quad_obj());
    Mesh m = load_mesh(dir + "/q.obj");
    CHECK(m.faces.size() == 2);
    CHECK_THROWS_AS(load_mesh(dir + "/absent.obj"), MeshError);
}

TEST_CASE("uv sphere fixture parses and is watertight enough for rendering") {
    Mesh m = parse_obj(uv_sphere_obj(8, 12), "sphere.obj");
    CHECK(m.vertices.size() == 9 * 13);
    CHECK(m.faces.size() > 100);
    CHECK(m.bounding_radius() == doctest::Approx(1.0).epsilon(1e-9));
    for (const Vec2& uv : m.uvs) {
        CHECK(uv.x >= 0.0);
        CHECK(uv.x <= 1.0);
        CHECK(uv.y >= 0.0);
        CHECK(uv.y <= 1.0);
    }
}
