// Matrix Market coordinate-format I/O and a CSR operator backed by it.
//
// The reader accepts "matrix coordinate real {general|symmetric}" banners,
// 1-based indices, and '%' comment lines; symmetric files are reflected to
// full storage on load. The writer emits general coordinate format with
// %.17g entries so that read(write(A)) round-trips bitwise.
#pragma once

#include <memory>
#include <string>
#include <vector>

#include "kadj/operator.hpp"

namespace kadj {

// Compressed-sparse-row square matrix. Entries within a row are stored in
// ascending column order with duplicates summed.
struct CsrMatrix {
  Index dim = 0;
  std::vector<Index> row_ptr;   // length dim+1
  std::vector<Index> col;       // length nnz
  std::vector<double> val;      // length nnz
  bool symmetric = false;       // declared via the file banner

  Index nnz() const { return static_cast<Index>(col.size()); }
};

// Parses a Matrix Market file. Throws ParseError (with the 1-based line
// number) on malformed input, IoError when the file cannot be opened, and
// DimensionError when rows != cols.
CsrMatrix read_matrix_market(const std::string& path);

// Writes general coordinate format with full double precision.
void write_matrix_market(const std::string& path, const CsrMatrix& m);

// Sparse operator over a CSR matrix. No free parameters; the transpose is
// precomputed at construction so apply_transpose costs one CSR product.
// has_diag() is true (structural zeros on the diagonal read as 0).
std::unique_ptr<MatVecOperator> make_csr_operator(CsrMatrix m);

}  // namespace kadj
