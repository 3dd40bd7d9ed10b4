#pragma once

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "dpgamg/csr.hpp"

namespace dpgamg {

/// MatrixMarket coordinate format, general symmetry (full pattern written
/// even for symmetric matrices; simpler and unambiguous for consumers).
inline void write_matrix_market(const std::string& path, const CsrMatrix& A) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_matrix_market: cannot open " + path);
  out.precision(17);
  out << "%%MatrixMarket matrix coordinate real general\n";
  out << A.nrows << " " << A.ncols << " " << A.nnz() << "\n";
  for (int i = 0; i < A.nrows; ++i)
    for (int k = A.row_ptr[i]; k < A.row_ptr[i + 1]; ++k)
      out << i + 1 << " " << A.col_idx[k] + 1 << " " << A.vals[k] << "\n";
}

inline CsrMatrix read_matrix_market(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("read_matrix_market: cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("read_matrix_market: empty file");
  std::istringstream hdr(line);
  std::string banner, object, format, field, symmetry;
  hdr >> banner >> object >> format >> field >> symmetry;
  if (banner != "%%MatrixMarket" || object != "matrix" || format != "coordinate" ||
      field != "real")
    throw std::runtime_error("read_matrix_market: unsupported header '" + line + "'");
  bool symmetric = symmetry == "symmetric";
  if (!symmetric && symmetry != "general")
    throw std::runtime_error("read_matrix_market: unsupported symmetry '" + symmetry + "'");

  while (std::getline(in, line))
    if (!line.empty() && line[0] != '%') break;
  std::istringstream sz(line);
  int nrows, ncols;
  long nnz;
  sz >> nrows >> ncols >> nnz;
  if (sz.fail()) throw std::runtime_error("read_matrix_market: bad size line");

  CooBuilder b(nrows, ncols);
  for (long k = 0; k < nnz; ++k) {
    int i, j;
    double v;
    if (!(in >> i >> j >> v)) throw std::runtime_error("read_matrix_market: truncated entries");
    b.add(i - 1, j - 1, v);
    if (symmetric && i != j) b.add(j - 1, i - 1, v);
  }
  return b.assemble();
}

/// Vectors as plain text, one entry per line.
inline void write_vector(const std::string& path, const std::vector<double>& v) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_vector: cannot open " + path);
  out.precision(17);
  for (double x : v) out << x << "\n";
}

inline std::vector<double> read_vector(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("read_vector: cannot open " + path);
  std::vector<double> v;
  double x;
  while (in >> x) v.push_back(x);
  return v;
}

/// DOF-partition sidecar: one 'i' or 'f' label per line.
inline void write_partition(const std::string& path, const std::vector<char>& labels) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_partition: cannot open " + path);
  for (char c : labels) out << c << "\n";
}

}  // namespace dpgamg
