#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <map>
#include <stdexcept>
#include <vector>

#include "dpgamg/mesh.hpp"
#include "dpgamg/quadrature.hpp"

namespace dpgamg {

/// Legendre polynomial P_j mapped to [0,1].
inline double legendre01(int j, double s) {
  double t = 2.0 * s - 1.0;
  double p0 = 1.0, p1 = t;
  if (j == 0) return p0;
  for (int k = 2; k <= j; ++k) {
    double p2 = ((2 * k - 1) * t * p1 - (k - 1) * p0) / k;
    p0 = p1;
    p1 = p2;
  }
  return p1;
}

/// Facet trace basis: Legendre in the canonical facet parameter, scaled to
/// be L2-orthonormal on a facet of the given length.
inline double facet_basis(int j, double s, double len) {
  return std::sqrt((2 * j + 1) / len) * legendre01(j, s);
}

// ---------------------------------------------------------------------------
// Scalar nodal (Lagrange) reference elements
// ---------------------------------------------------------------------------

struct NodeInfo {
  enum class Kind { Vertex, Edge, Cell };
  Kind kind;
  int sub;    // local vertex or local edge index
  int order;  // 1..p-1 position along the edge, or running cell counter
};

/// Equispaced nodal element on the reference triangle or square, with
/// shape functions expressed in a monomial basis via a Vandermonde solve.
class NodalRefElement {
 public:
  NodalRefElement(ElemKind kind, int degree) : kind_(kind), degree_(degree) {
    if (degree < 1 || degree > 6)
      throw std::invalid_argument("NodalRefElement: degree out of range [1,6]");
    int p = degree;
    if (kind == ElemKind::Triangle) {
      for (int b = 0; b <= p; ++b)
        for (int a = 0; a + b <= p; ++a) mono_.push_back({a, b});
    } else {
      for (int b = 0; b <= p; ++b)
        for (int a = 0; a <= p; ++a) mono_.push_back({a, b});
    }

    int nv = kind == ElemKind::Triangle ? 3 : 4;
    for (int i = 0; i < nv; ++i) {
      nodes_.push_back(ref_corner(kind, i));
      info_.push_back({NodeInfo::Kind::Vertex, i, 0});
    }
    for (int le = 0; le < nv; ++le) {
      Vec2 a = ref_corner(kind, le), b = ref_corner(kind, (le + 1) % nv);
      for (int t = 1; t < p; ++t) {
        nodes_.push_back(a + ((double)t / p) * (b - a));
        info_.push_back({NodeInfo::Kind::Edge, le, t});
      }
    }
    int cell = 0;
    if (kind == ElemKind::Triangle) {
      for (int j = 1; j < p; ++j)
        for (int i = 1; i + j <= p - 1; ++i) {
          nodes_.push_back({(double)i / p, (double)j / p});
          info_.push_back({NodeInfo::Kind::Cell, 0, cell++});
        }
    } else {
      for (int j = 1; j < p; ++j)
        for (int i = 1; i < p; ++i) {
          nodes_.push_back({(double)i / p, (double)j / p});
          info_.push_back({NodeInfo::Kind::Cell, 0, cell++});
        }
    }
    if (nodes_.size() != mono_.size())
      throw std::logic_error("NodalRefElement: node/monomial count mismatch");

    int n = (int)nodes_.size();
    Eigen::MatrixXd V(n, n);
    for (int q = 0; q < n; ++q)
      for (int m = 0; m < n; ++m)
        V(q, m) = std::pow(nodes_[q].x, mono_[m].first) * std::pow(nodes_[q].y, mono_[m].second);
    coef_ = V.fullPivLu().solve(Eigen::MatrixXd::Identity(n, n));
  }

  int nnodes() const { return (int)nodes_.size(); }
  const std::vector<Vec2>& nodes() const { return nodes_; }
  const std::vector<NodeInfo>& node_info() const { return info_; }
  ElemKind kind() const { return kind_; }
  int degree() const { return degree_; }

  /// Values of all shape functions at reference point r.
  void eval(Vec2 r, double* vals) const {
    int n = nnodes();
    Eigen::VectorXd m(n);
    for (int k = 0; k < n; ++k)
      m(k) = std::pow(r.x, mono_[k].first) * std::pow(r.y, mono_[k].second);
    Eigen::Map<Eigen::VectorXd>(vals, n) = coef_.transpose() * m;
  }

  /// Reference gradients of all shape functions at r.
  void eval_grad(Vec2 r, Vec2* grads) const {
    int n = nnodes();
    Eigen::VectorXd mx(n), my(n);
    for (int k = 0; k < n; ++k) {
      auto [a, b] = mono_[k];
      mx(k) = a == 0 ? 0.0 : a * std::pow(r.x, a - 1) * std::pow(r.y, b);
      my(k) = b == 0 ? 0.0 : b * std::pow(r.x, a) * std::pow(r.y, b - 1);
    }
    Eigen::VectorXd gx = coef_.transpose() * mx, gy = coef_.transpose() * my;
    for (int k = 0; k < n; ++k) grads[k] = {gx(k), gy(k)};
  }

  static const NodalRefElement& get(ElemKind kind, int degree) {
    static std::map<std::pair<int, int>, NodalRefElement> cache;
    auto key = std::make_pair((int)kind, degree);
    auto it = cache.find(key);
    if (it == cache.end()) it = cache.emplace(key, NodalRefElement(kind, degree)).first;
    return it->second;
  }

 private:
  ElemKind kind_;
  int degree_;
  std::vector<std::pair<int, int>> mono_;
  std::vector<Vec2> nodes_;
  std::vector<NodeInfo> info_;
  Eigen::MatrixXd coef_;  // column i = monomial coefficients of shape i
};

// ---------------------------------------------------------------------------
// Finite element spaces
// ---------------------------------------------------------------------------

enum class Family { Lagrange, BrokenLagrange, RaviartThomas, FacetTrace };

enum class DofClass : std::uint8_t { Interface, Interior };

struct ElemDof {
  int index;
  double sign;  // +1/-1; carries the n_gamma orientation for facet traces
};

struct FeSpace {
  const Mesh* mesh = nullptr;
  Family family = Family::Lagrange;
  int degree = 1;
  int ndofs = 0;
  std::vector<std::vector<ElemDof>> elem_dofs;
  std::vector<DofClass> dof_class;

  std::vector<int> dofs_of(DofClass c) const {
    std::vector<int> out;
    for (int i = 0; i < ndofs; ++i)
      if (dof_class[i] == c) out.push_back(i);
    return out;
  }
  int count_of(DofClass c) const {
    int n = 0;
    for (auto d : dof_class) n += d == c;
    return n;
  }
};

/// Interior RT DOFs per element.
inline int rt_interior_count(ElemKind kind, int k) {
  return kind == ElemKind::Triangle ? k * (k + 1) : 2 * k * (k + 1);
}

inline FeSpace build_space(const Mesh& mesh, Family family, int degree) {
  FeSpace sp;
  sp.mesh = &mesh;
  sp.family = family;
  sp.degree = degree;
  int nv = mesh.verts_per_elem();
  int F = mesh.num_elements(), E = mesh.num_facets(), V = mesh.num_vertices();

  switch (family) {
    case Family::Lagrange: {
      if (degree < 1 || degree > 4)
        throw std::invalid_argument("build_space: lagrange degree must be in [1,4]");
      const auto& ref = NodalRefElement::get(mesh.kind, degree);
      int p = degree;
      int ncell = 0;
      for (const auto& ni : ref.node_info()) ncell += ni.kind == NodeInfo::Kind::Cell;
      sp.ndofs = V + E * (p - 1) + F * ncell;
      sp.dof_class.assign(sp.ndofs, DofClass::Interface);
      for (int d = V + E * (p - 1); d < sp.ndofs; ++d) sp.dof_class[d] = DofClass::Interior;
      sp.elem_dofs.resize(F);
      for (int e = 0; e < F; ++e) {
        sp.elem_dofs[e].reserve(ref.nnodes());
        for (const auto& ni : ref.node_info()) {
          int g;
          if (ni.kind == NodeInfo::Kind::Vertex) {
            g = mesh.elements[e][ni.sub];
          } else if (ni.kind == NodeInfo::Kind::Edge) {
            int f = mesh.elem_facets[e][ni.sub];
            int a = mesh.elements[e][ni.sub];
            // node position measured along the canonical (ascending-index)
            // direction of the facet
            int pos = (a == mesh.facets[f][0]) ? ni.order : p - ni.order;
            g = V + f * (p - 1) + (pos - 1);
          } else {
            g = V + E * (p - 1) + e * ncell + ni.order;
          }
          sp.elem_dofs[e].push_back({g, 1.0});
        }
      }
      break;
    }
    case Family::BrokenLagrange: {
      if (degree < 1 || degree > 6)
        throw std::invalid_argument("build_space: broken_lagrange degree must be in [1,6]");
      const auto& ref = NodalRefElement::get(mesh.kind, degree);
      int nloc = ref.nnodes();
      sp.ndofs = F * nloc;
      sp.dof_class.assign(sp.ndofs, DofClass::Interface);
      sp.elem_dofs.resize(F);
      for (int e = 0; e < F; ++e) {
        for (int l = 0; l < nloc; ++l) {
          sp.elem_dofs[e].push_back({e * nloc + l, 1.0});
          if (ref.node_info()[l].kind == NodeInfo::Kind::Cell)
            sp.dof_class[e * nloc + l] = DofClass::Interior;
        }
      }
      break;
    }
    case Family::RaviartThomas:
    case Family::FacetTrace: {
      int k = degree;
      if (k < 0 || k > 3)
        throw std::invalid_argument("build_space: RT/facet-trace index must be in [0,3]");
      int nint = family == Family::RaviartThomas ? rt_interior_count(mesh.kind, k) : 0;
      sp.ndofs = E * (k + 1) + F * nint;
      sp.dof_class.assign(sp.ndofs, DofClass::Interface);
      for (int d = E * (k + 1); d < sp.ndofs; ++d) sp.dof_class[d] = DofClass::Interior;
      sp.elem_dofs.resize(F);
      for (int e = 0; e < F; ++e) {
        for (int le = 0; le < nv; ++le) {
          int f = mesh.elem_facets[e][le];
          // Orientation of the canonical facet normal relative to this
          // element's outward normal.  RT facet functionals are defined
          // against the canonical normal, so the RT basis needs no flip;
          // the facet-trace pairing <q, v> does.
          double sign = mesh.facet_elems[f][0].elem == e ? 1.0 : -1.0;
          for (int j = 0; j <= k; ++j)
            sp.elem_dofs[e].push_back(
                {f * (k + 1) + j, family == Family::RaviartThomas ? 1.0 : sign});
        }
        for (int m = 0; m < nint; ++m)
          sp.elem_dofs[e].push_back({E * (k + 1) + e * nint + m, 1.0});
      }
      break;
    }
  }
  return sp;
}

/// Dirichlet boundary DOFs of a continuous Lagrange space (sorted).
inline std::vector<int> boundary_dofs(const FeSpace& sp) {
  if (sp.family != Family::Lagrange)
    throw std::invalid_argument("boundary_dofs: requires a continuous lagrange space");
  const Mesh& m = *sp.mesh;
  int p = sp.degree, V = m.num_vertices();
  std::vector<char> mark(sp.ndofs, 0);
  for (int f = 0; f < m.num_facets(); ++f) {
    if (!m.facet_on_boundary(f)) continue;
    mark[m.facets[f][0]] = mark[m.facets[f][1]] = 1;
    for (int t = 0; t < p - 1; ++t) mark[V + f * (p - 1) + t] = 1;
  }
  std::vector<int> out;
  for (int d = 0; d < sp.ndofs; ++d)
    if (mark[d]) out.push_back(d);
  return out;
}

/// Index maps between a full DOF set and the complement of an excluded
/// (sorted) list.
struct DofSubset {
  std::vector<int> sub_to_full;
  std::vector<int> full_to_sub;  // -1 for excluded indices
  int size() const { return (int)sub_to_full.size(); }
};

inline DofSubset complement_subset(int n, const std::vector<int>& excluded) {
  DofSubset s;
  s.full_to_sub.assign(n, -1);
  std::vector<char> ex(n, 0);
  for (int d : excluded) ex[d] = 1;
  for (int d = 0; d < n; ++d)
    if (!ex[d]) {
      s.full_to_sub[d] = (int)s.sub_to_full.size();
      s.sub_to_full.push_back(d);
    }
  return s;
}

// ---------------------------------------------------------------------------
// Raviart-Thomas element machinery
// ---------------------------------------------------------------------------

/// The RT DOF functionals of one element, discretized at quadrature
/// points.  Every functional is written as sum_q sigma(ref_q) . w(row,q)
/// for physical field values sigma; this is exact whenever the normal
/// trace (edge rows) resp. the Piola pullback (interior rows) of the field
/// is polynomial at the stated degree, which covers Lagrange fields and
/// curls but not mapped RT shapes on distorted quads (those go through the
/// reference-side path in RtElementBasis).
///
/// Local row order: per local edge, moments against the orthonormal facet
/// Legendre basis in the canonical facet parameter and against the
/// canonical normal; then interior moments.  Triangle interior moments are
/// taken against scaled physical monomials, quad interior moments against
/// reference monomials of the pullback.
class RtDofSet {
 public:
  RtDofSet(const Mesh& mesh, int k, int e, int exact_degree) : k_(k) {
    int nv = mesh.verts_per_elem();
    int nint = rt_interior_count(mesh.kind, k);
    nloc_ = nv * (k + 1) + nint;
    ElemGeom geom(mesh, e);

    auto erule = edge_rule(exact_degree);
    auto vrule = mesh.kind == ElemKind::Triangle ? triangle_rule(exact_degree)
                                                 : quad_rule(exact_degree);
    int nq = nv * (int)erule.size() + (int)vrule.size();
    ref_.reserve(nq);
    phys_.reserve(nq);
    wx_ = Eigen::MatrixXd::Zero(nloc_, nq);
    wy_ = Eigen::MatrixXd::Zero(nloc_, nq);

    int q = 0;
    for (int le = 0; le < nv; ++le) {
      int f = mesh.elem_facets[e][le];
      Vec2 n = mesh.facet_normal[f];
      double len = mesh.facet_length[f];
      for (const auto& qp : erule) {
        Vec2 r = facet_ref_point(mesh, e, f, qp.s);
        ref_.push_back(r);
        phys_.push_back(geom.map(r));
        for (int j = 0; j <= k; ++j) {
          double c = qp.w * len * facet_basis(j, qp.s, len);
          wx_(le * (k + 1) + j, q) += c * n.x;
          wy_(le * (k + 1) + j, q) += c * n.y;
        }
        ++q;
      }
    }

    if (nint > 0) {
      int row0 = nv * (k + 1);
      if (mesh.kind == ElemKind::Triangle) {
        // Scale and center so the Vandermonde stays well conditioned.
        Vec2 c = (1.0 / 3.0) * (geom.p[0] + geom.p[1] + geom.p[2]);
        double area = 0.5 * cross(geom.p[1] - geom.p[0], geom.p[2] - geom.p[0]);
        double h = std::sqrt(area);
        double J = 2.0 * area;
        for (const auto& qp : vrule) {
          Vec2 r = {qp.x, qp.y};
          Vec2 x = geom.map(r);
          Vec2 u = (1.0 / h) * (x - c);
          ref_.push_back(r);
          phys_.push_back(x);
          int m = 0;
          for (int comp = 0; comp < 2; ++comp)
            for (int b = 0; b + 1 <= k; ++b)
              for (int a = 0; a + b + 1 <= k; ++a) {
                double v = qp.w * J * std::pow(u.x, a) * std::pow(u.y, b);
                (comp == 0 ? wx_ : wy_)(row0 + m, q) += v;
                ++m;
              }
          ++q;
        }
      } else {
        // Interior moments of the Piola pullback: adj(F) sigma against
        // reference monomials, integrated on the reference square.
        for (const auto& qp : vrule) {
          Vec2 r = {qp.x, qp.y};
          Mat2 F = geom.jacobian(r);
          ref_.push_back(r);
          phys_.push_back(geom.map(r));
          // adj(F)^T rows turn physical components into pullback ones.
          double ax = F.d, bx = -F.b;   // (adjF sigma)_x = d*sx - b*sy
          double ay = -F.c, by = F.a;   // (adjF sigma)_y = -c*sx + a*sy
          int m = 0;
          for (int b = 0; b <= k; ++b)
            for (int a = 0; a + 1 <= k; ++a) {
              double v = qp.w * std::pow(r.x, a) * std::pow(r.y, b);
              wx_(row0 + m, q) += v * ax;
              wy_(row0 + m, q) += v * bx;
              ++m;
            }
          for (int b = 0; b + 1 <= k; ++b)
            for (int a = 0; a <= k; ++a) {
              double v = qp.w * std::pow(r.x, a) * std::pow(r.y, b);
              wx_(row0 + m, q) += v * ay;
              wy_(row0 + m, q) += v * by;
              ++m;
            }
          ++q;
        }
      }
    } else {
      for (const auto& qp : vrule) {
        ref_.push_back({qp.x, qp.y});
        phys_.push_back(geom.map({qp.x, qp.y}));
        ++q;
      }
    }
  }

  int nloc() const { return nloc_; }
  int num_points() const { return (int)ref_.size(); }
  const std::vector<Vec2>& points_ref() const { return ref_; }
  const std::vector<Vec2>& points_phys() const { return phys_; }

  /// Apply all functionals to one field given at reference points.
  std::vector<double> apply(const std::function<Vec2(Vec2 ref, Vec2 phys)>& field) const {
    Eigen::VectorXd fx(num_points()), fy(num_points());
    for (int q = 0; q < num_points(); ++q) {
      Vec2 v = field(ref_[q], phys_[q]);
      fx(q) = v.x;
      fy(q) = v.y;
    }
    Eigen::VectorXd out = wx_ * fx + wy_ * fy;
    return {out.data(), out.data() + nloc_};
  }

  /// Apply all functionals to many fields at once: columns of (sx, sy)
  /// hold physical x/y values at the quadrature points.
  Eigen::MatrixXd apply_many(const Eigen::MatrixXd& sx, const Eigen::MatrixXd& sy) const {
    return wx_ * sx + wy_ * sy;
  }

 private:
  int k_, nloc_;
  std::vector<Vec2> ref_, phys_;
  Eigen::MatrixXd wx_, wy_;  // nloc x nq functional weights
};

/// Local RT_k basis on one element, dual to the RtDofSet functionals.
/// Built from a spanning set (physical monomial fields on triangles,
/// Piola-mapped reference monomials on quads) through a Vandermonde solve.
class RtElementBasis {
 public:
  RtElementBasis(const Mesh& mesh, int k, int e)
      : kind_(mesh.kind), k_(k), geom_(mesh, e) {
    if (kind_ == ElemKind::Triangle) {
      Vec2 c = (1.0 / 3.0) * (geom_.p[0] + geom_.p[1] + geom_.p[2]);
      double area = 0.5 * cross(geom_.p[1] - geom_.p[0], geom_.p[2] - geom_.p[0]);
      ctr_ = c;
      h_ = std::sqrt(area);
    }
    nloc_ = (mesh.verts_per_elem()) * (k + 1) + rt_interior_count(kind_, k);

    Eigen::MatrixXd V(nloc_, nloc_);
    if (kind_ == ElemKind::Triangle) {
      // Physical-path functionals are exact on the physical-polynomial
      // spanning fields.
      RtDofSet dofs(mesh, k, e, 2 * k + 4);
      int nq = dofs.num_points();
      Eigen::MatrixXd sx(nq, nloc_), sy(nq, nloc_);
      std::vector<double> vx(nloc_), vy(nloc_), vd(nloc_);
      for (int q = 0; q < nq; ++q) {
        span_at(dofs.points_ref()[q], vx.data(), vy.data(), vd.data());
        for (int i = 0; i < nloc_; ++i) {
          sx(q, i) = vx[i];
          sy(q, i) = vy[i];
        }
      }
      V = dofs.apply_many(sx, sy);
    } else {
      V = quad_vandermonde(mesh, e);
    }
    coef_ = V.fullPivLu().solve(Eigen::MatrixXd::Identity(nloc_, nloc_));
  }

  int nloc() const { return nloc_; }

  /// Physical values and divergences of all shape functions at reference
  /// point r.
  void eval(Vec2 r, Vec2* vals, double* divs) const {
    Eigen::VectorXd sx(nloc_), sy(nloc_), sd(nloc_);
    span_at(r, sx.data(), sy.data(), sd.data());
    Eigen::VectorXd vx = coef_.transpose() * sx;
    Eigen::VectorXd vy = coef_.transpose() * sy;
    Eigen::VectorXd vd = coef_.transpose() * sd;
    for (int i = 0; i < nloc_; ++i) {
      vals[i] = {vx(i), vy(i)};
      divs[i] = vd(i);
    }
  }

 private:
  // Spanning fields evaluated at one reference point (physical values and
  // physical divergence).
  void span_at(Vec2 r, double* sx, double* sy, double* sd) const {
    int k = k_;
    if (kind_ == ElemKind::Triangle) {
      Vec2 x = geom_.map(r);
      Vec2 u = (1.0 / h_) * (x - ctr_);
      int m = 0;
      for (int comp = 0; comp < 2; ++comp)
        for (int b = 0; b <= k; ++b)
          for (int a = 0; a + b <= k; ++a) {
            double v = std::pow(u.x, a) * std::pow(u.y, b);
            sx[m] = comp == 0 ? v : 0.0;
            sy[m] = comp == 0 ? 0.0 : v;
            sd[m] = comp == 0 ? (a == 0 ? 0.0 : a * std::pow(u.x, a - 1) * std::pow(u.y, b) / h_)
                              : (b == 0 ? 0.0 : b * std::pow(u.x, a) * std::pow(u.y, b - 1) / h_);
            ++m;
          }
      for (int a = k; a >= 0; --a) {
        int b = k - a;
        double v = std::pow(u.x, a) * std::pow(u.y, b);
        sx[m] = u.x * v;
        sy[m] = u.y * v;
        sd[m] = (k + 2) * v / h_;
        ++m;
      }
    } else {
      Mat2 F = geom_.jacobian(r);
      double J = F.det();
      int m = 0;
      for (int b = 0; b <= k; ++b)
        for (int a = 0; a <= k + 1; ++a) {
          Vec2 shat = {std::pow(r.x, a) * std::pow(r.y, b), 0.0};
          Vec2 v = (1.0 / J) * F.apply(shat);
          sx[m] = v.x;
          sy[m] = v.y;
          sd[m] = (a == 0 ? 0.0 : a * std::pow(r.x, a - 1) * std::pow(r.y, b)) / J;
          ++m;
        }
      for (int b = 0; b <= k + 1; ++b)
        for (int a = 0; a <= k; ++a) {
          Vec2 shat = {0.0, std::pow(r.x, a) * std::pow(r.y, b)};
          Vec2 v = (1.0 / J) * F.apply(shat);
          sx[m] = v.x;
          sy[m] = v.y;
          sd[m] = (b == 0 ? 0.0 : b * std::pow(r.x, a) * std::pow(r.y, b - 1)) / J;
          ++m;
        }
    }
  }

  /// Quad Vandermonde: edge moments via the Piola edge identity
  /// (integration on the reference edge, no Jacobian factors), interior
  /// moments via the pullback (which is the reference monomial itself).
  Eigen::MatrixXd quad_vandermonde(const Mesh& mesh, int e) const {
    int k = k_;
    int nspan = nloc_;
    Eigen::MatrixXd V = Eigen::MatrixXd::Zero(nloc_, nspan);

    auto span_ref = [&](Vec2 r, int j) -> Vec2 {
      // Reference monomial fields, same order as span_at.
      int nx = (k + 2) * (k + 1);
      if (j < nx) {
        int a = j % (k + 2), b = j / (k + 2);
        return {std::pow(r.x, a) * std::pow(r.y, b), 0.0};
      }
      j -= nx;
      int a = j % (k + 1), b = j / (k + 1);
      return {0.0, std::pow(r.x, a) * std::pow(r.y, b)};
    };

    auto erule = edge_rule(2 * k + 2);
    static const Vec2 nhat[4] = {{0, -1}, {1, 0}, {0, 1}, {-1, 0}};
    for (int le = 0; le < 4; ++le) {
      int f = mesh.elem_facets[e][le];
      double len = mesh.facet_length[f];
      double sign = mesh.facet_elems[f][0].elem == e ? 1.0 : -1.0;
      int a = mesh.elements[e][le];
      Vec2 ra = ref_corner(ElemKind::Quad, le), rb = ref_corner(ElemKind::Quad, (le + 1) % 4);
      for (const auto& qp : erule) {
        Vec2 r = ra + qp.s * (rb - ra);
        double s = (a == mesh.facets[f][0]) ? qp.s : 1.0 - qp.s;
        for (int j = 0; j <= k; ++j) {
          double c = sign * qp.w * facet_basis(j, s, len);
          for (int sp = 0; sp < nspan; ++sp)
            V(le * (k + 1) + j, sp) += c * dot(span_ref(r, sp), nhat[le]);
        }
      }
    }

    if (k > 0) {
      int row0 = 4 * (k + 1);
      auto vrule = quad_rule(2 * k + 2);
      for (const auto& qp : vrule) {
        Vec2 r = {qp.x, qp.y};
        int m = 0;
        for (int b = 0; b <= k; ++b)
          for (int a = 0; a + 1 <= k; ++a) {
            double v = qp.w * std::pow(r.x, a) * std::pow(r.y, b);
            for (int sp = 0; sp < nspan; ++sp) V(row0 + m, sp) += v * span_ref(r, sp).x;
            ++m;
          }
        for (int b = 0; b + 1 <= k; ++b)
          for (int a = 0; a <= k; ++a) {
            double v = qp.w * std::pow(r.x, a) * std::pow(r.y, b);
            for (int sp = 0; sp < nspan; ++sp) V(row0 + m, sp) += v * span_ref(r, sp).y;
            ++m;
          }
      }
    }
    return V;
  }

  ElemKind kind_;
  int k_, nloc_ = 0;
  ElemGeom geom_;
  Vec2 ctr_;
  double h_ = 1.0;
  Eigen::MatrixXd coef_;  // column i = span coefficients of shape i
};

}  // namespace dpgamg
