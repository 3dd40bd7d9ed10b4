#pragma once

// Experiment driver behind the command line tool.  A RunConfig selects a
// mesh family, a study, and solver settings; run() executes the study over
// the requested refinement levels and returns a report that can be printed
// as a table or serialized to JSON.  Reports are deterministic for a fixed
// config and seed, wall times excepted.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "dpgamg/amg.hpp"
#include "dpgamg/assemble.hpp"
#include "dpgamg/io.hpp"
#include "dpgamg/mesh.hpp"
#include "dpgamg/precond.hpp"
#include "dpgamg/rng.hpp"
#include "dpgamg/schur.hpp"
#include "dpgamg/solver.hpp"
#include "dpgamg/verify.hpp"

namespace dpgamg {

struct RunConfig {
  std::string mesh = "cartesian:4,4,quad";  // cartesian:NX,NY,tri|quad or file:PATH
  int refine = 0;
  int p = 1;
  int r = 0;  // 0 means p + 1
  bool contrast = false;
  double kappa0 = 1.0;
  bool seed_set = false;
  std::uint64_t seed = 0;
  double rtol = 1e-6;
  int maxit = 500;
  std::string precond = "practical";  // ideal | practical | none
  std::string study = "solve";  // solve | h_p_table | reduced_order | contrast | verify_suite
  std::string out_json;
  std::string export_dir;
  bool zero_rhs = false;
};

struct RunEntry {
  std::string label;
  int p = 0;
  int r = 0;
  double kappa0 = 1.0;
  long dofs = 0;
  int iterations = 0;
  double avg_reduction = 0.0;
  bool converged = false;
  double setup_seconds = 0.0;
  double solve_seconds = 0.0;
};

struct RunRow {
  int level = 0;
  long elements = 0;
  std::vector<RunEntry> entries;
};

struct VerifyRow {
  std::string study;
  int level = 0;
  int p = 0;
  double constant = 0.0;
};

struct RunReport {
  RunConfig config;
  std::vector<RunRow> rows;
  std::vector<VerifyRow> verify_rows;

  bool all_converged() const {
    for (const RunRow& row : rows)
      for (const RunEntry& e : row.entries)
        if (!e.converged) return false;
    return true;
  }
};

namespace detail {

struct MeshSpec {
  bool from_file = false;
  std::string path;
  int nx = 0, ny = 0;
  ElemKind kind = ElemKind::Quad;
};

inline MeshSpec parse_mesh_spec(const std::string& s) {
  MeshSpec out;
  if (s.rfind("file:", 0) == 0) {
    out.from_file = true;
    out.path = s.substr(5);
    if (out.path.empty()) throw std::invalid_argument("mesh spec: empty file path");
    return out;
  }
  if (s.rfind("cartesian:", 0) != 0)
    throw std::invalid_argument("mesh spec must be cartesian:NX,NY,tri|quad or file:PATH");
  std::string rest = s.substr(10);
  for (char& c : rest)
    if (c == ',') c = ' ';
  std::istringstream in(rest);
  std::string kind;
  if (!(in >> out.nx >> out.ny >> kind))
    throw std::invalid_argument("mesh spec: expected cartesian:NX,NY,tri|quad");
  if (out.nx < 1 || out.ny < 1)
    throw std::invalid_argument("mesh spec: grid dimensions must be positive");
  if (kind == "tri")
    out.kind = ElemKind::Triangle;
  else if (kind == "quad")
    out.kind = ElemKind::Quad;
  else
    throw std::invalid_argument("mesh spec: kind must be tri or quad");
  return out;
}

inline Mesh build_base_mesh(const MeshSpec& spec) {
  if (spec.from_file) return load_mesh(spec.path);
  return build_cartesian_mesh(spec.nx, spec.ny, spec.kind);
}

inline bool all_triangles(const Mesh& m) { return m.kind == ElemKind::Triangle; }

// Per-element contrast draw keyed by (seed, element index): 1 with
// probability 1/2, kappa0 otherwise.
inline std::vector<double> contrast_kappa(const Mesh& m, double kappa0,
                                          std::uint64_t seed) {
  std::vector<double> kappa(m.num_elements());
  const std::uint64_t base = splitmix64(seed);
  for (int e = 0; e < m.num_elements(); ++e) {
    const std::uint64_t h = splitmix64(base ^ (0xD1B54A32D192ED03ULL * (e + 1)));
    kappa[e] = (h >> 63) ? 1.0 : kappa0;
  }
  return kappa;
}

inline double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

inline RunEntry solve_one(const Mesh& mesh, int p, int r, std::vector<double> kappa,
                          const std::string& precond, double rtol, int maxit,
                          bool zero_rhs, const std::string& label, double kappa0) {
  RunEntry entry;
  entry.label = label;
  entry.p = p;
  entry.r = r;
  entry.kappa0 = kappa0;

  const auto t0 = std::chrono::steady_clock::now();
  ScalarField f = zero_rhs ? ScalarField{} : ScalarField{[](Vec2) { return 1.0; }};
  DpgSystem sys = assemble_dpg(mesh, p, r, std::move(kappa), f);
  entry.dofs = sys.ndofs();

  DpgPrecond prec;
  LinearOperator bop;
  const LinearOperator* bp = nullptr;
  if (precond == "ideal" || precond == "practical") {
    prec = build_dpg_precond(sys, precond == "ideal" ? PrecondVariant::Ideal
                                                     : PrecondVariant::Practical);
    bop = prec.op();
    bp = &bop;
  } else if (precond != "none") {
    throw std::invalid_argument("precond must be ideal, practical, or none");
  }
  entry.setup_seconds = seconds_since(t0);

  const auto t1 = std::chrono::steady_clock::now();
  PcgResult res = pcg(sys.op_A(), bp, sys.g, rtol, maxit);
  entry.solve_seconds = seconds_since(t1);
  entry.iterations = res.report.iterations;
  entry.avg_reduction = res.report.avg_reduction;
  entry.converged = res.report.converged;
  return entry;
}

inline void export_level(const RunConfig& cfg, const Mesh& mesh, int level,
                         const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  const std::string pre = dir + "/lvl" + std::to_string(level) + "_";

  const int p = cfg.p;
  std::vector<double> kappa;
  if (cfg.contrast) kappa = contrast_kappa(mesh, cfg.kappa0, cfg.seed);
  DpgSystem sys = assemble_dpg(mesh, p, cfg.r > 0 ? cfg.r : p + 1, kappa);

  write_matrix_market(pre + "B0.mtx", sys.B0);
  write_matrix_market(pre + "B1.mtx", sys.B1);
  write_matrix_market(pre + "A0.mtx", assemble_explicit(sys, DpgBlock::A0));
  write_matrix_market(pre + "A1.mtx", assemble_explicit(sys, DpgBlock::A1));

  CsrMatrix G = kappa.empty() ? assemble_h1_gram(sys.U) : assemble_h1_gram(sys.U, &kappa);
  write_matrix_market(pre + "G.mtx", G);

  FeSpace rt = build_space(mesh, Family::RaviartThomas, p - 1);
  CsrMatrix D = assemble_hdiv_gram(rt);
  SchurSystem sch = schur_complement(D, rt.dof_class);
  write_matrix_market(pre + "D.mtx", D);
  write_matrix_market(pre + "S.mtx", sch.S);
  std::vector<char> labels(rt.ndofs);
  for (int i = 0; i < rt.ndofs; ++i)
    labels[i] = rt.dof_class[i] == DofClass::Interface ? 'f' : 'i';
  write_partition(pre + "partition.txt", labels);

  FeSpace aux = build_space(mesh, Family::Lagrange, p);
  write_matrix_market(pre + "Pi.mtx", assemble_pi(aux, rt));
  write_matrix_market(pre + "C.mtx", assemble_curl(aux, rt));
}

inline void verify_suite_level(const RunConfig& cfg, const Mesh& mesh, int level,
                               RunReport& report) {
  const int p = cfg.p;
  const int k = p - 1;
  const long nq = static_cast<long>(mesh.facets.size()) * (k + 1);

  if (nq <= 400) {
    const double c3 = c3_surrogate(mesh, k, 1, 1);
    report.verify_rows.push_back({"c3_surrogate", level, p, c3});
  }

  DpgSystem sys = assemble_dpg(mesh, p, cfg.r > 0 ? cfg.r : p + 1);
  if (sys.ndofs() <= 2000) {
    CsrMatrix G = assemble_h1_gram(sys.U);
    FeSpace rt = build_space(mesh, Family::RaviartThomas, k);
    SchurSystem sch = schur_complement(assemble_hdiv_gram(rt), rt.dof_class);
    auto [c1, c2] = estimate_infsup(sys, G, sch);
    report.verify_rows.push_back({"infsup_c1", level, p, c1});
    report.verify_rows.push_back({"infsup_c2", level, p, c2});
  }
}

// Sample-max estimate of the reference extension constant: the largest
// ratio ||G sigma_bar||_Hdiv / ||div sigma|| over random RT_1 fields on the
// reference element, realized as a one-element mesh.
inline double sample_g_constant(RefShape shape, int nsamples, std::uint64_t seed) {
  Mesh m;
  if (shape == RefShape::Triangle) {
    m.kind = ElemKind::Triangle;
    m.vertices = {{0.0, 0.0}, {1.0, 0.0}, {0.0, 1.0}};
    m.elements = {{0, 1, 2, -1}};
    m.finalize();
  } else {
    m = build_cartesian_mesh(1, 1, ElemKind::Quad);
  }

  RtElementBasis basis(m, 1, 0);
  ElemGeom geom(m, 0);
  const int nloc = basis.nloc();
  const std::vector<QuadPoint2d> rule =
      shape == RefShape::Triangle ? triangle_rule(6) : quad_rule(6);

  Rng rng(seed);
  double best = 0.0;
  std::vector<Vec2> vals(nloc);
  std::vector<double> divs(nloc);
  for (int s = 0; s < nsamples; ++s) {
    std::vector<double> coef(nloc);
    for (double& c : coef) c = rng.sym();

    double div_int = 0.0, div_norm2 = 0.0;
    for (const QuadPoint2d& qp : rule) {
      basis.eval({qp.x, qp.y}, vals.data(), divs.data());
      double dv = 0.0;
      for (int i = 0; i < nloc; ++i) dv += coef[i] * divs[i];
      const double w = qp.w * std::abs(geom.jacobian({qp.x, qp.y}).det());
      div_int += w * dv;
      div_norm2 += w * dv * dv;
    }
    if (div_norm2 <= 0.0) continue;

    const double sigma_bar = div_int / ref_perimeter(shape);
    RefExtension ext = reference_extension_G(sigma_bar, shape);
    const double ratio = std::sqrt(ref_extension_hdiv_norm2(ext, shape) / div_norm2);
    best = std::max(best, ratio);
  }
  return best;
}

} // namespace detail

inline void validate_config(const RunConfig& cfg) {
  detail::parse_mesh_spec(cfg.mesh);
  if (cfg.refine < 0) throw std::invalid_argument("refine must be nonnegative");
  if (cfg.p < 1 || cfg.p > 3) throw std::invalid_argument("order must be 1, 2, or 3");
  if (cfg.r != 0 && cfg.r < cfg.p)
    throw std::invalid_argument("test order must be at least the trial order");
  if (cfg.r > 6) throw std::invalid_argument("test order above 6 is not supported");
  if (cfg.rtol <= 0.0 || cfg.rtol >= 1.0) throw std::invalid_argument("rtol must be in (0,1)");
  if (cfg.maxit < 1) throw std::invalid_argument("maxit must be positive");
  if (cfg.precond != "ideal" && cfg.precond != "practical" && cfg.precond != "none")
    throw std::invalid_argument("precond must be ideal, practical, or none");
  const std::string& st = cfg.study;
  if (st != "solve" && st != "h_p_table" && st != "reduced_order" && st != "contrast" &&
      st != "verify_suite")
    throw std::invalid_argument("unknown study: " + st);
  if ((cfg.contrast || st == "contrast") && !cfg.seed_set)
    throw std::invalid_argument("contrast coefficients require an explicit seed");
  if (cfg.contrast && cfg.kappa0 <= 0.0)
    throw std::invalid_argument("contrast kappa0 must be positive");
}

inline RunReport run(const RunConfig& cfg) {
  validate_config(cfg);
  RunReport report;
  report.config = cfg;

  Mesh mesh = detail::build_base_mesh(detail::parse_mesh_spec(cfg.mesh));
  if (cfg.study == "reduced_order" && !detail::all_triangles(mesh))
    throw std::invalid_argument("reduced_order study requires a triangle mesh");

  for (int level = 0; level <= cfg.refine; ++level) {
    if (level > 0) mesh = refine_uniform(mesh);

    RunRow row;
    row.level = level;
    row.elements = mesh.num_elements();

    const int p = cfg.p;
    const int r = cfg.r > 0 ? cfg.r : p + 1;
    auto kappa_for = [&](double k0) {
      return cfg.contrast || cfg.study == "contrast"
                 ? detail::contrast_kappa(mesh, k0, cfg.seed)
                 : std::vector<double>{};
    };

    if (cfg.study == "solve") {
      row.entries.push_back(detail::solve_one(mesh, p, r, kappa_for(cfg.kappa0),
                                              cfg.precond, cfg.rtol, cfg.maxit,
                                              cfg.zero_rhs, "p=" + std::to_string(p),
                                              cfg.contrast ? cfg.kappa0 : 1.0));
    } else if (cfg.study == "h_p_table") {
      for (int pp = 1; pp <= 3; ++pp)
        row.entries.push_back(detail::solve_one(mesh, pp, pp + 1, kappa_for(cfg.kappa0),
                                                cfg.precond, cfg.rtol, cfg.maxit,
                                                cfg.zero_rhs, "p=" + std::to_string(pp),
                                                cfg.contrast ? cfg.kappa0 : 1.0));
    } else if (cfg.study == "reduced_order") {
      for (int rr : {p, p + 1})
        row.entries.push_back(detail::solve_one(
            mesh, p, rr, kappa_for(cfg.kappa0), cfg.precond, cfg.rtol, cfg.maxit,
            cfg.zero_rhs, rr == p ? "r=p" : "r=p+1", cfg.contrast ? cfg.kappa0 : 1.0));
    } else if (cfg.study == "contrast") {
      for (double k0 : {1e-6, 1e-4, 1e-2, 1.0, 1e2, 1e4}) {
        std::ostringstream label;
        label << "kappa0=" << k0;
        row.entries.push_back(detail::solve_one(mesh, p, r, kappa_for(k0), cfg.precond,
                                                cfg.rtol, cfg.maxit, cfg.zero_rhs,
                                                label.str(), k0));
      }
    } else {  // verify_suite
      detail::verify_suite_level(cfg, mesh, level, report);
      if (level == 0) {
        report.verify_rows.push_back(
            {"g_constant_tri", 0, cfg.p,
             detail::sample_g_constant(RefShape::Triangle, 200, cfg.seed)});
        report.verify_rows.push_back(
            {"g_constant_quad", 0, cfg.p,
             detail::sample_g_constant(RefShape::Square, 200, cfg.seed)});
      }
    }

    if (!cfg.export_dir.empty()) detail::export_level(cfg, mesh, level, cfg.export_dir);
    report.rows.push_back(std::move(row));
  }
  return report;
}

// --------------------------------------------------------------------------
// Report rendering.  The table and the JSON expose the same fields.

inline std::string report_table(const RunReport& rep) {
  std::ostringstream out;
  const RunConfig& c = rep.config;
  out << "study " << c.study << "  mesh " << c.mesh << "  refine " << c.refine
      << "  precond " << c.precond << "  rtol " << c.rtol << "\n";

  if (!rep.verify_rows.empty()) {
    out << "study,level,p,constant\n";
    for (const VerifyRow& v : rep.verify_rows)
      out << v.study << "," << v.level << "," << v.p << "," << v.constant << "\n";
  }
  if (rep.rows.empty()) return out.str();

  out << "level  elements      dofs  entry           iters  avg_red  converged  "
         "setup_s  solve_s\n";
  for (const RunRow& row : rep.rows) {
    for (const RunEntry& e : row.entries) {
      char line[256];
      std::snprintf(line, sizeof line,
                    "%5d  %8ld  %8ld  %-14s  %5d  %7.3f  %9s  %7.3f  %7.3f\n",
                    row.level, row.elements, e.dofs, e.label.c_str(), e.iterations,
                    e.avg_reduction, e.converged ? "yes" : "no", e.setup_seconds,
                    e.solve_seconds);
      out << line;
    }
    if (row.entries.empty()) {
      char line[128];
      std::snprintf(line, sizeof line, "%5d  %8ld\n", row.level, row.elements);
      out << line;
    }
  }
  return out.str();
}

inline nlohmann::json report_json(const RunReport& rep) {
  const RunConfig& c = rep.config;
  nlohmann::json j;
  j["config"] = {{"mesh", c.mesh},
                 {"refine", c.refine},
                 {"order", c.p},
                 {"test_order", c.r > 0 ? c.r : c.p + 1},
                 {"contrast", c.contrast},
                 {"kappa0", c.kappa0},
                 {"seed", c.seed},
                 {"rtol", c.rtol},
                 {"maxit", c.maxit},
                 {"precond", c.precond},
                 {"study", c.study},
                 {"zero_rhs", c.zero_rhs}};
  j["rows"] = nlohmann::json::array();
  for (const RunRow& row : rep.rows) {
    nlohmann::json jr;
    jr["level"] = row.level;
    jr["elements"] = row.elements;
    jr["entries"] = nlohmann::json::array();
    for (const RunEntry& e : row.entries) {
      jr["entries"].push_back({{"label", e.label},
                               {"p", e.p},
                               {"r", e.r},
                               {"kappa0", e.kappa0},
                               {"dofs", e.dofs},
                               {"iters", e.iterations},
                               {"avg_red", e.avg_reduction},
                               {"converged", e.converged},
                               {"setup_s", e.setup_seconds},
                               {"solve_s", e.solve_seconds}});
    }
    j["rows"].push_back(std::move(jr));
  }
  if (!rep.verify_rows.empty()) {
    j["verify"] = nlohmann::json::array();
    for (const VerifyRow& v : rep.verify_rows)
      j["verify"].push_back(
          {{"study", v.study}, {"level", v.level}, {"p", v.p}, {"constant", v.constant}});
  }
  return j;
}

} // namespace dpgamg
