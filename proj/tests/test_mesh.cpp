#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <vector>

#include "dpgamg/mesh.hpp"

using namespace dpgamg;
using Catch::Matchers::ContainsSubstring;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

// Shoelace area of one element; exact for straight-sided polygons, which
// covers triangles and bilinear quads alike.
double elem_area(const Mesh& m, int e) {
  const int nv = m.verts_per_elem();
  double s = 0.0;
  for (int i = 0; i < nv; ++i) {
    const Vec2 a = m.vertices[m.elements[e][i]];
    const Vec2 b = m.vertices[m.elements[e][(i + 1) % nv]];
    s += cross(a, b);
  }
  return 0.5 * s;
}

double total_area(const Mesh& m) {
  double s = 0.0;
  for (int e = 0; e < m.num_elements(); ++e) s += elem_area(m, e);
  return s;
}

Vec2 elem_centroid(const Mesh& m, int e) {
  const int nv = m.verts_per_elem();
  Vec2 c{0.0, 0.0};
  for (int i = 0; i < nv; ++i) c = c + (1.0 / nv) * m.vertices[m.elements[e][i]];
  return c;
}

std::filesystem::path temp_file(const std::string& name) {
  return std::filesystem::temp_directory_path() / name;
}

}  // namespace

TEST_CASE("cartesian mesh counts and Euler relation") {
  const int nx = 4, ny = 3;
  for (ElemKind kind : {ElemKind::Quad, ElemKind::Triangle}) {
    Mesh m = build_cartesian_mesh(nx, ny, kind);
    const int V = m.num_vertices(), E = m.num_facets(), F = m.num_elements();
    REQUIRE(V == (nx + 1) * (ny + 1));
    if (kind == ElemKind::Quad) {
      REQUIRE(F == nx * ny);
      REQUIRE(E == nx * (ny + 1) + ny * (nx + 1));
    } else {
      REQUIRE(F == 2 * nx * ny);
      REQUIRE(E == nx * (ny + 1) + ny * (nx + 1) + nx * ny);
    }
    REQUIRE(V - E + F == 1);

    int nb = 0;
    for (int f = 0; f < E; ++f) nb += m.facet_on_boundary(f);
    REQUIRE(nb == 2 * (nx + ny));

    REQUIRE_THAT(total_area(m), WithinAbs(1.0, 1e-14));
    for (int e = 0; e < F; ++e) REQUIRE(m.attribute[e] == 1);
  }
}

TEST_CASE("facet conventions") {
  for (ElemKind kind : {ElemKind::Quad, ElemKind::Triangle}) {
    Mesh m = build_cartesian_mesh(3, 2, kind);
    for (int f = 0; f < m.num_facets(); ++f) {
      REQUIRE(m.facets[f][0] < m.facets[f][1]);
      const Vec2 a = m.vertices[m.facets[f][0]];
      const Vec2 b = m.vertices[m.facets[f][1]];
      REQUIRE_THAT(m.facet_length[f], WithinRel(norm(b - a), 1e-14));

      const Vec2 n = m.facet_normal[f];
      REQUIRE_THAT(norm(n), WithinRel(1.0, 1e-14));
      REQUIRE_THAT(dot(n, b - a), WithinAbs(0.0, 1e-14));

      // Normal points out of the first incident element.
      const int e0 = m.facet_elems[f][0].elem;
      REQUIRE(e0 >= 0);
      const Vec2 mid = 0.5 * (a + b);
      REQUIRE(dot(n, mid - elem_centroid(m, e0)) > 0.0);
      if (!m.facet_on_boundary(f)) {
        const int e1 = m.facet_elems[f][1].elem;
        REQUIRE(e0 < e1);
        REQUIRE(dot(n, mid - elem_centroid(m, e1)) < 0.0);
      }

      // elem_facets inverts facet_elems.
      for (const FacetSide& side : m.facet_elems[f]) {
        if (side.elem < 0) continue;
        REQUIRE(m.elem_facets[side.elem][side.local_edge] == f);
      }
    }
  }
}

TEST_CASE("facet_ref_point follows the canonical parametrization") {
  for (ElemKind kind : {ElemKind::Quad, ElemKind::Triangle}) {
    Mesh m = build_cartesian_mesh(2, 2, kind);
    for (int f = 0; f < m.num_facets(); ++f) {
      const Vec2 a = m.vertices[m.facets[f][0]];
      const Vec2 b = m.vertices[m.facets[f][1]];
      for (const FacetSide& side : m.facet_elems[f]) {
        if (side.elem < 0) continue;
        ElemGeom geom(m, side.elem);
        for (double s : {0.0, 0.25, 0.7, 1.0}) {
          const Vec2 x = geom.map(facet_ref_point(m, side.elem, f, s));
          const Vec2 want = a + s * (b - a);
          REQUIRE_THAT(x.x, WithinAbs(want.x, 1e-14));
          REQUIRE_THAT(x.y, WithinAbs(want.y, 1e-14));
        }
      }
    }
  }
}

TEST_CASE("element geometry maps corners to vertices") {
  Mesh m = build_cartesian_mesh(3, 3, ElemKind::Quad);
  ElemGeom geom(m, 4);
  for (int i = 0; i < 4; ++i) {
    const Vec2 x = geom.map(ref_corner(ElemKind::Quad, i));
    const Vec2 v = m.vertices[m.elements[4][i]];
    REQUIRE_THAT(x.x, WithinAbs(v.x, 1e-15));
    REQUIRE_THAT(x.y, WithinAbs(v.y, 1e-15));
  }
  REQUIRE(geom.jacobian({0.3, 0.6}).det() > 0.0);
}

TEST_CASE("uniform refinement") {
  for (ElemKind kind : {ElemKind::Quad, ElemKind::Triangle}) {
    Mesh m = build_cartesian_mesh(3, 2, kind);
    m.attribute[1] = 5;

    RefineTrace tr;
    Mesh r = refine_uniform(m, &tr);
    REQUIRE(r.num_elements() == 4 * m.num_elements());
    const int extra = kind == ElemKind::Quad ? m.num_elements() : 0;
    REQUIRE(r.num_vertices() == m.num_vertices() + m.num_facets() + extra);
    REQUIRE(r.num_vertices() - r.num_facets() + r.num_elements() == 1);
    REQUIRE_THAT(total_area(r), WithinAbs(1.0, 1e-14));

    // Children of element 1 inherit its attribute.
    for (int c = 0; c < 4; ++c) REQUIRE(r.attribute[4 * 1 + c] == 5);

    // Each parent facet owns exactly two children, collinear with it and
    // with matching boundary status; facets interior to a parent map to -1.
    REQUIRE((int)tr.facet_parent.size() == r.num_facets());
    std::vector<int> child_count(m.num_facets(), 0);
    for (int f = 0; f < r.num_facets(); ++f) {
      const int p = tr.facet_parent[f];
      if (p < 0) {
        REQUIRE_FALSE(r.facet_on_boundary(f));
        continue;
      }
      ++child_count[p];
      REQUIRE(r.facet_on_boundary(f) == m.facet_on_boundary(p));
      const Vec2 pa = m.vertices[m.facets[p][0]];
      const Vec2 pb = m.vertices[m.facets[p][1]];
      for (int end : {r.facets[f][0], r.facets[f][1]})
        REQUIRE_THAT(cross(pb - pa, r.vertices[end] - pa), WithinAbs(0.0, 1e-14));
    }
    for (int c : child_count) REQUIRE(c == 2);
  }
}

TEST_CASE("mesh file round trip") {
  Mesh m = build_cartesian_mesh(2, 2, ElemKind::Triangle);
  m.vertices[4] = {0.4871234567890123, 0.5123456789012345};  // center vertex
  m.attribute[3] = 7;

  const auto path = temp_file("dpgamg_roundtrip.mesh");
  save_mesh(m, path.string());
  Mesh back = load_mesh(path.string());

  REQUIRE(back.kind == m.kind);
  REQUIRE(back.num_vertices() == m.num_vertices());
  REQUIRE(back.num_elements() == m.num_elements());
  for (int v = 0; v < m.num_vertices(); ++v) {
    REQUIRE(back.vertices[v].x == m.vertices[v].x);
    REQUIRE(back.vertices[v].y == m.vertices[v].y);
  }
  REQUIRE(back.elements == m.elements);
  REQUIRE(back.attribute == m.attribute);
  std::filesystem::remove(path);
}

TEST_CASE("mesh file error handling") {
  REQUIRE_THROWS_WITH(load_mesh(temp_file("dpgamg_no_such.mesh").string()),
                      ContainsSubstring("cannot open"));

  const auto bad = temp_file("dpgamg_bad_header.mesh");
  {
    std::ofstream out(bad);
    out << "mesh3d tri\n";
  }
  REQUIRE_THROWS_WITH(load_mesh(bad.string()), ContainsSubstring("bad header"));

  const auto trunc = temp_file("dpgamg_truncated.mesh");
  {
    std::ofstream out(trunc);
    out << "# comment\n\nmesh2d quad\nvertices 4\n0 0\n1 0\n";
  }
  REQUIRE_THROWS_WITH(load_mesh(trunc.string()), ContainsSubstring("truncated vertices"));

  const auto badelem = temp_file("dpgamg_bad_elem.mesh");
  {
    std::ofstream out(badelem);
    out << "mesh2d tri\nvertices 3\n0 0\n1 0\n0 1\nelements 1\n0 1 x 1\n";
  }
  REQUIRE_THROWS_WITH(load_mesh(badelem.string()), ContainsSubstring("bad element line"));

  std::filesystem::remove(bad);
  std::filesystem::remove(trunc);
  std::filesystem::remove(badelem);
}

TEST_CASE("finalize validates the mesh") {
  SECTION("inverted element") {
    Mesh m;
    m.kind = ElemKind::Triangle;
    m.vertices = {{0, 0}, {1, 0}, {0, 1}};
    m.elements = {{0, 2, 1, -1}};  // clockwise
    REQUIRE_THROWS_WITH(m.finalize(), ContainsSubstring("inverted element"));
  }
  SECTION("repeated vertex") {
    Mesh m;
    m.kind = ElemKind::Triangle;
    m.vertices = {{0, 0}, {1, 0}, {0, 1}};
    m.elements = {{0, 1, 1, -1}};
    REQUIRE_THROWS_AS(m.finalize(), std::runtime_error);
  }
  SECTION("vertex index out of range") {
    Mesh m;
    m.kind = ElemKind::Triangle;
    m.vertices = {{0, 0}, {1, 0}, {0, 1}};
    m.elements = {{0, 1, 3, -1}};
    REQUIRE_THROWS_WITH(m.finalize(), ContainsSubstring("out of range"));
  }
  SECTION("unreferenced vertex warning") {
    Mesh m;
    m.kind = ElemKind::Triangle;
    m.vertices = {{0, 0}, {1, 0}, {0, 1}, {5, 5}};
    m.elements = {{0, 1, 2, -1}};
    std::vector<std::string> warnings;
    m.finalize(&warnings);
    REQUIRE(warnings.size() == 1);
    REQUIRE_THAT(warnings[0], ContainsSubstring("vertex 3"));
  }
}

TEST_CASE("bundled sample meshes load cleanly") {
  const std::string root = DPGAMG_SOURCE_DIR;
  {
    std::vector<std::string> warnings;
    Mesh m = load_mesh(root + "/data/unstructured_tri.mesh", &warnings);
    REQUIRE(m.kind == ElemKind::Triangle);
    REQUIRE(m.num_elements() == 96);
    REQUIRE(m.num_vertices() == 63);
    REQUIRE(warnings.empty());
    REQUIRE_THAT(total_area(m), WithinAbs(1.0, 1e-12));
  }
  {
    std::vector<std::string> warnings;
    Mesh m = load_mesh(root + "/data/unstructured_quad.mesh", &warnings);
    REQUIRE(m.kind == ElemKind::Quad);
    REQUIRE(m.num_elements() == 48);
    REQUIRE(m.num_vertices() == 63);
    REQUIRE(warnings.empty());
    REQUIRE_THAT(total_area(m), WithinAbs(1.0, 1e-12));
  }
}
