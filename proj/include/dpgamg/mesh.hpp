#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace dpgamg {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

inline Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
inline Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
inline Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Vec2 a) { return std::sqrt(dot(a, a)); }

/// 2x2 matrix, row-major.  Covers the element Jacobians; anything larger
/// goes through Eigen.
struct Mat2 {
  double a = 0, b = 0, c = 0, d = 0;
  double det() const { return a * d - b * c; }
  Vec2 apply(Vec2 v) const { return {a * v.x + b * v.y, c * v.x + d * v.y}; }
  Vec2 solve(Vec2 v) const {
    double j = det();
    return {(d * v.x - b * v.y) / j, (-c * v.x + a * v.y) / j};
  }
  Vec2 solve_t(Vec2 v) const {  // solve with the transpose
    double j = det();
    return {(d * v.x - c * v.y) / j, (-b * v.x + a * v.y) / j};
  }
};

enum class ElemKind { Triangle, Quad };

/// Incidence of one element on a facet: which element, and which of its
/// local edges coincides with the facet.
struct FacetSide {
  int elem = -1;
  int local_edge = -1;
};

/// Conforming 2D mesh of a single element kind.  Facets carry the
/// canonical conventions used throughout: vertex pairs stored ascending,
/// tangential parametrization running from the lower vertex index to the
/// higher, and the normal pointing out of the first (lower-indexed)
/// incident element.
struct Mesh {
  ElemKind kind = ElemKind::Triangle;
  std::vector<Vec2> vertices;
  std::vector<std::array<int, 4>> elements;  // [3] = -1 for triangles
  std::vector<int> attribute;                // one integer per element

  // Derived topology, filled by finalize().
  std::vector<std::array<int, 2>> facets;          // ascending vertex pairs
  std::vector<std::array<FacetSide, 2>> facet_elems;  // [1].elem = -1 on boundary
  std::vector<std::array<int, 4>> elem_facets;     // facet id per local edge
  std::vector<Vec2> facet_normal;                  // canonical unit normal
  std::vector<double> facet_length;

  int verts_per_elem() const { return kind == ElemKind::Triangle ? 3 : 4; }
  int num_vertices() const { return (int)vertices.size(); }
  int num_elements() const { return (int)elements.size(); }
  int num_facets() const { return (int)facets.size(); }
  bool facet_on_boundary(int f) const { return facet_elems[f][1].elem < 0; }

  int find_facet(int a, int b) const {
    if (a > b) std::swap(a, b);
    auto it = facet_lookup_.find((std::int64_t)a * num_vertices() + b);
    return it == facet_lookup_.end() ? -1 : it->second;
  }

  void finalize(std::vector<std::string>* warnings = nullptr);

 private:
  std::unordered_map<std::int64_t, int> facet_lookup_;
};

/// Reference corners: triangle (0,0),(1,0),(0,1); quad [0,1]^2 counter-
/// clockwise from the origin.
inline Vec2 ref_corner(ElemKind kind, int i) {
  if (kind == ElemKind::Triangle) {
    static const Vec2 c[3] = {{0, 0}, {1, 0}, {0, 1}};
    return c[i];
  }
  static const Vec2 c[4] = {{0, 0}, {1, 0}, {1, 1}, {0, 1}};
  return c[i];
}

/// Geometry of one element: reference-to-physical map and its Jacobian.
/// Triangles are affine, quads bilinear.
struct ElemGeom {
  ElemKind kind;
  std::array<Vec2, 4> p;

  ElemGeom(const Mesh& m, int e) : kind(m.kind) {
    for (int i = 0; i < m.verts_per_elem(); ++i) p[i] = m.vertices[m.elements[e][i]];
  }

  Vec2 map(Vec2 r) const {
    if (kind == ElemKind::Triangle)
      return p[0] + r.x * (p[1] - p[0]) + r.y * (p[2] - p[0]);
    return (1 - r.x) * (1 - r.y) * p[0] + r.x * (1 - r.y) * p[1] + r.x * r.y * p[2] +
           (1 - r.x) * r.y * p[3];
  }

  Mat2 jacobian(Vec2 r) const {
    Vec2 dx, dy;
    if (kind == ElemKind::Triangle) {
      dx = p[1] - p[0];
      dy = p[2] - p[0];
    } else {
      dx = (1 - r.y) * (p[1] - p[0]) + r.y * (p[2] - p[3]);
      dy = (1 - r.x) * (p[3] - p[0]) + r.x * (p[2] - p[1]);
    }
    return {dx.x, dy.x, dx.y, dy.y};
  }
};

/// Reference coordinates of the point at canonical parameter s on facet f,
/// seen from element e.  The canonical parametrization runs from the lower
/// to the higher vertex index, independent of how e traverses the edge.
inline Vec2 facet_ref_point(const Mesh& m, int e, int f, double s) {
  int nv = m.verts_per_elem();
  int le = -1;
  for (int k = 0; k < nv; ++k)
    if (m.elem_facets[e][k] == f) le = k;
  if (le < 0) throw std::logic_error("facet_ref_point: facet not on element");
  int a = m.elements[e][le], b = m.elements[e][(le + 1) % nv];
  double t = (a == m.facets[f][0]) ? s : 1.0 - s;
  Vec2 ra = ref_corner(m.kind, le), rb = ref_corner(m.kind, (le + 1) % nv);
  return ra + t * (rb - ra);
}

namespace detail {

inline void check_element_jacobians(const Mesh& m, int e) {
  const auto& el = m.elements[e];
  int nv = m.kind == ElemKind::Triangle ? 3 : 4;
  for (int i = 0; i < nv; ++i)
    for (int j = i + 1; j < nv; ++j)
      if (el[i] == el[j])
        throw std::runtime_error("mesh: inverted element " + std::to_string(e) +
                                 " (repeated vertex)");
  ElemGeom g(m, e);
  if (m.kind == ElemKind::Triangle) {
    if (g.jacobian({0, 0}).det() <= 0.0)
      throw std::runtime_error("mesh: inverted element " + std::to_string(e));
  } else {
    // The bilinear Jacobian determinant is affine in each reference
    // coordinate, so positivity at the four corners is conclusive.
    for (int i = 0; i < 4; ++i)
      if (g.jacobian(ref_corner(ElemKind::Quad, i)).det() <= 0.0)
        throw std::runtime_error("mesh: inverted element " + std::to_string(e));
  }
}

}  // namespace detail

inline void Mesh::finalize(std::vector<std::string>* warnings) {
  int nv = verts_per_elem();
  if (attribute.empty()) attribute.assign(elements.size(), 1);
  if ((int)attribute.size() != num_elements())
    throw std::runtime_error("mesh: attribute count does not match element count");

  std::vector<char> referenced(vertices.size(), 0);
  for (int e = 0; e < num_elements(); ++e) {
    for (int i = 0; i < nv; ++i) {
      int v = elements[e][i];
      if (v < 0 || v >= num_vertices())
        throw std::runtime_error("mesh: vertex index out of range in element " +
                                 std::to_string(e));
      referenced[v] = 1;
    }
    detail::check_element_jacobians(*this, e);
  }

  facets.clear();
  facet_elems.clear();
  facet_lookup_.clear();
  elem_facets.assign(elements.size(), {-1, -1, -1, -1});
  for (int e = 0; e < num_elements(); ++e) {
    for (int le = 0; le < nv; ++le) {
      int a = elements[e][le], b = elements[e][(le + 1) % nv];
      int lo = std::min(a, b), hi = std::max(a, b);
      std::int64_t key = (std::int64_t)lo * num_vertices() + hi;
      auto it = facet_lookup_.find(key);
      int f;
      if (it == facet_lookup_.end()) {
        f = (int)facets.size();
        facet_lookup_.emplace(key, f);
        facets.push_back({lo, hi});
        facet_elems.push_back({FacetSide{e, le}, FacetSide{}});
      } else {
        f = it->second;
        if (facet_elems[f][1].elem >= 0)
          throw std::runtime_error("mesh: facet shared by more than two elements");
        facet_elems[f][1] = {e, le};
      }
      elem_facets[e][le] = f;
    }
  }

  // Canonical normal: outward from the first incident element, which by
  // construction is the lower-indexed one.
  facet_normal.resize(facets.size());
  facet_length.resize(facets.size());
  for (int f = 0; f < num_facets(); ++f) {
    auto [e, le] = facet_elems[f][0];
    Vec2 pa = vertices[elements[e][le]], pb = vertices[elements[e][(le + 1) % nv]];
    Vec2 t = pb - pa;
    double len = norm(t);
    if (len <= 0.0) throw std::runtime_error("mesh: zero-length facet");
    facet_length[f] = len;
    facet_normal[f] = {t.y / len, -t.x / len};
  }

  int nref = 0;
  for (size_t v = 0; v < referenced.size(); ++v) {
    if (referenced[v])
      ++nref;
    else if (warnings)
      warnings->push_back("vertex " + std::to_string(v) + " is not referenced by any element");
  }
  int chi = nref - num_facets() + num_elements();
  if (chi != 1)
    throw std::runtime_error("mesh: Euler relation V - E + F = 1 violated (got " +
                             std::to_string(chi) + ")");
}

/// Uniform nx-by-ny mesh of the unit square.  kind == Triangle splits each
/// cell along the lower-left to upper-right diagonal into two triangles.
inline Mesh build_cartesian_mesh(int nx, int ny, ElemKind kind) {
  if (nx < 1 || ny < 1) throw std::invalid_argument("build_cartesian_mesh: nx, ny must be >= 1");
  Mesh m;
  m.kind = kind;
  m.vertices.reserve((nx + 1) * (ny + 1));
  for (int j = 0; j <= ny; ++j)
    for (int i = 0; i <= nx; ++i)
      m.vertices.push_back({(double)i / nx, (double)j / ny});
  auto vid = [&](int i, int j) { return j * (nx + 1) + i; };
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      int a = vid(i, j), b = vid(i + 1, j), c = vid(i + 1, j + 1), d = vid(i, j + 1);
      if (kind == ElemKind::Quad) {
        m.elements.push_back({a, b, c, d});
      } else {
        m.elements.push_back({a, b, c, -1});
        m.elements.push_back({a, c, d, -1});
      }
    }
  }
  m.finalize();
  return m;
}

/// Lineage of one refinement sweep: for every child facet, the parent
/// facet it lies on, or -1 for facets interior to a parent element.
struct RefineTrace {
  std::vector<int> facet_parent;
};

/// One sweep of uniform refinement (each triangle into four by edge
/// midpoints, each quad into four by midpoints and centroid).  Original
/// vertices keep their ids; midpoints are numbered by parent facet,
/// centroids by parent element.
inline Mesh refine_uniform(const Mesh& m, RefineTrace* trace = nullptr) {
  Mesh r;
  r.kind = m.kind;
  int nv0 = m.num_vertices(), nf0 = m.num_facets();
  r.vertices = m.vertices;
  r.vertices.resize(nv0 + nf0 + (m.kind == ElemKind::Quad ? m.num_elements() : 0));
  for (int f = 0; f < nf0; ++f)
    r.vertices[nv0 + f] = 0.5 * (m.vertices[m.facets[f][0]] + m.vertices[m.facets[f][1]]);

  for (int e = 0; e < m.num_elements(); ++e) {
    const auto& el = m.elements[e];
    if (m.kind == ElemKind::Triangle) {
      int m01 = nv0 + m.elem_facets[e][0];
      int m12 = nv0 + m.elem_facets[e][1];
      int m20 = nv0 + m.elem_facets[e][2];
      r.elements.push_back({el[0], m01, m20, -1});
      r.elements.push_back({m01, el[1], m12, -1});
      r.elements.push_back({m20, m12, el[2], -1});
      r.elements.push_back({m01, m12, m20, -1});
    } else {
      int c = nv0 + nf0 + e;
      Vec2 ctr = {0, 0};
      for (int i = 0; i < 4; ++i) ctr = ctr + 0.25 * m.vertices[el[i]];
      r.vertices[c] = ctr;
      int m01 = nv0 + m.elem_facets[e][0];
      int m12 = nv0 + m.elem_facets[e][1];
      int m23 = nv0 + m.elem_facets[e][2];
      int m30 = nv0 + m.elem_facets[e][3];
      r.elements.push_back({el[0], m01, c, m30});
      r.elements.push_back({m01, el[1], m12, c});
      r.elements.push_back({c, m12, el[2], m23});
      r.elements.push_back({m30, c, m23, el[3]});
    }
    for (int k = 0; k < 4; ++k) r.attribute.push_back(m.attribute[e]);
  }
  r.finalize();

  if (trace) {
    trace->facet_parent.assign(r.num_facets(), -1);
    for (int f = 0; f < nf0; ++f) {
      int mid = nv0 + f;
      for (int end : {m.facets[f][0], m.facets[f][1]}) {
        int cf = r.find_facet(end, mid);
        if (cf < 0) throw std::logic_error("refine_uniform: lost a child facet");
        trace->facet_parent[cf] = f;
      }
    }
  }
  return r;
}

/// Reads the plain-text mesh format:
///   mesh2d tri|quad
///   vertices N     followed by N lines "x y"
///   elements M     followed by M lines of vertex indices and an attribute
/// Blank lines and lines starting with '#' are skipped.
inline Mesh load_mesh(const std::string& path, std::vector<std::string>* warnings = nullptr) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_mesh: cannot open " + path);

  auto next_line = [&](std::string& line) {
    while (std::getline(in, line)) {
      size_t i = line.find_first_not_of(" \t\r");
      if (i == std::string::npos || line[i] == '#') continue;
      return true;
    }
    return false;
  };

  std::string line;
  if (!next_line(line)) throw std::runtime_error("load_mesh: empty file " + path);
  std::istringstream hdr(line);
  std::string magic, kind_str;
  hdr >> magic >> kind_str;
  if (magic != "mesh2d" || (kind_str != "tri" && kind_str != "quad"))
    throw std::runtime_error("load_mesh: bad header '" + line + "'");

  Mesh m;
  m.kind = kind_str == "tri" ? ElemKind::Triangle : ElemKind::Quad;
  int nv = m.verts_per_elem();

  if (!next_line(line)) throw std::runtime_error("load_mesh: missing vertices section");
  std::istringstream vh(line);
  std::string kw;
  long nverts = -1;
  vh >> kw >> nverts;
  if (kw != "vertices" || nverts < 0 || vh.fail())
    throw std::runtime_error("load_mesh: bad vertices header '" + line + "'");
  m.vertices.resize(nverts);
  for (long i = 0; i < nverts; ++i) {
    if (!next_line(line)) throw std::runtime_error("load_mesh: truncated vertices section");
    std::istringstream ls(line);
    ls >> m.vertices[i].x >> m.vertices[i].y;
    if (ls.fail())
      throw std::runtime_error("load_mesh: bad vertex line '" + line + "'");
  }

  if (!next_line(line)) throw std::runtime_error("load_mesh: missing elements section");
  std::istringstream eh(line);
  long nelems = -1;
  eh >> kw >> nelems;
  if (kw != "elements" || nelems < 0 || eh.fail())
    throw std::runtime_error("load_mesh: bad elements header '" + line + "'");
  m.elements.resize(nelems, {-1, -1, -1, -1});
  m.attribute.resize(nelems);
  for (long e = 0; e < nelems; ++e) {
    if (!next_line(line)) throw std::runtime_error("load_mesh: truncated elements section");
    std::istringstream ls(line);
    for (int i = 0; i < nv; ++i) ls >> m.elements[e][i];
    ls >> m.attribute[e];
    if (ls.fail())
      throw std::runtime_error("load_mesh: bad element line '" + line + "'");
  }

  m.finalize(warnings);
  return m;
}

inline void save_mesh(const Mesh& m, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_mesh: cannot open " + path);
  out.precision(17);
  out << "mesh2d " << (m.kind == ElemKind::Triangle ? "tri" : "quad") << "\n";
  out << "vertices " << m.num_vertices() << "\n";
  for (const auto& v : m.vertices) out << v.x << " " << v.y << "\n";
  out << "elements " << m.num_elements() << "\n";
  int nv = m.verts_per_elem();
  for (int e = 0; e < m.num_elements(); ++e) {
    for (int i = 0; i < nv; ++i) out << m.elements[e][i] << " ";
    out << m.attribute[e] << "\n";
  }
}

}  // namespace dpgamg
