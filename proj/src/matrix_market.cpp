#include "kadj/matrix_market.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

namespace kadj {

namespace {

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return s;
}

[[noreturn]] void fail(Index line, const std::string& what) {
  throw ParseError(what, line);
}

struct Triplet {
  Index r, c;
  double v;
};

CsrMatrix from_triplets(Index dim, std::vector<Triplet> trips,
                        bool symmetric) {
  std::sort(trips.begin(), trips.end(), [](const Triplet& a, const Triplet& b) {
    return a.r != b.r ? a.r < b.r : a.c < b.c;
  });
  CsrMatrix m;
  m.dim = dim;
  m.symmetric = symmetric;
  m.row_ptr.assign(dim + 1, 0);
  for (std::size_t i = 0; i < trips.size(); ++i) {
    if (i > 0 && trips[i].r == trips[i - 1].r && trips[i].c == trips[i - 1].c) {
      m.val.back() += trips[i].v;  // duplicates accumulate
      continue;
    }
    m.col.push_back(trips[i].c);
    m.val.push_back(trips[i].v);
    ++m.row_ptr[trips[i].r + 1];
  }
  std::partial_sum(m.row_ptr.begin(), m.row_ptr.end(), m.row_ptr.begin());
  return m;
}

}  // namespace

CsrMatrix read_matrix_market(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "' for reading");

  std::string line;
  Index lineno = 0;

  if (!std::getline(in, line)) fail(1, "empty file");
  ++lineno;
  bool symmetric = false;
  {
    std::istringstream banner(line);
    std::string tag, object, format, field, sym;
    banner >> tag >> object >> format >> field >> sym;
    if (tag != "%%MatrixMarket") fail(lineno, "missing %%MatrixMarket banner");
    if (lower(object) != "matrix") fail(lineno, "unsupported object '" + object + "'");
    if (lower(format) != "coordinate")
      fail(lineno, "unsupported format '" + format + "' (coordinate only)");
    if (lower(field) != "real")
      fail(lineno, "unsupported field '" + field + "' (real only)");
    sym = lower(sym);
    if (sym != "general" && sym != "symmetric")
      fail(lineno, "unsupported symmetry '" + sym + "'");
    symmetric = (sym == "symmetric");
  }

  Index rows = -1, cols = -1, nnz = -1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '%') continue;
    std::istringstream sz(line);
    if (!(sz >> rows >> cols >> nnz)) fail(lineno, "malformed size line");
    std::string extra;
    if (sz >> extra) fail(lineno, "trailing tokens on size line");
    break;
  }
  if (rows < 0) fail(lineno, "missing size line");
  if (rows != cols)
    throw DimensionError("matrix is " + std::to_string(rows) + "x" +
                         std::to_string(cols) + "; square required");
  if (nnz < 0) fail(lineno, "negative entry count");

  std::vector<Triplet> trips;
  trips.reserve(static_cast<std::size_t>(symmetric ? 2 * nnz : nnz));
  Index seen = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '%') continue;
    if (seen == nnz) fail(lineno, "more entries than declared");
    std::istringstream es(line);
    Index i, j;
    double v;
    if (!(es >> i >> j >> v)) fail(lineno, "malformed entry");
    std::string extra;
    if (es >> extra) fail(lineno, "trailing tokens on entry");
    if (i < 1 || i > rows || j < 1 || j > cols)
      fail(lineno, "index (" + std::to_string(i) + ", " + std::to_string(j) +
                       ") outside 1.." + std::to_string(rows));
    if (symmetric && j > i)
      fail(lineno, "entry above the diagonal in a symmetric file");
    trips.push_back({i - 1, j - 1, v});
    if (symmetric && i != j) trips.push_back({j - 1, i - 1, v});
    ++seen;
  }
  if (seen != nnz)
    fail(lineno, "declared " + std::to_string(nnz) + " entries, found " +
                     std::to_string(seen));

  return from_triplets(rows, std::move(trips), symmetric);
}

void write_matrix_market(const std::string& path, const CsrMatrix& m) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << "%%MatrixMarket matrix coordinate real general\n";
  out << m.dim << " " << m.dim << " " << m.nnz() << "\n";
  char buf[64];
  for (Index r = 0; r < m.dim; ++r) {
    for (Index k = m.row_ptr[r]; k < m.row_ptr[r + 1]; ++k) {
      std::snprintf(buf, sizeof buf, "%.17g", m.val[k]);
      out << (r + 1) << " " << (m.col[k] + 1) << " " << buf << "\n";
    }
  }
  if (!out) throw IoError("write to '" + path + "' failed");
}

namespace {

class CsrOperator final : public MatVecOperator {
public:
  explicit CsrOperator(CsrMatrix m)
      : MatVecOperator(m.dim, Vector(0), m.symmetric, /*has_diag=*/true),
        a_(std::move(m)),
        at_(transpose(a_)) {}

private:
  CsrMatrix a_;
  CsrMatrix at_;

  static CsrMatrix transpose(const CsrMatrix& m) {
    CsrMatrix t;
    t.dim = m.dim;
    t.symmetric = m.symmetric;
    t.row_ptr.assign(m.dim + 1, 0);
    t.col.resize(m.col.size());
    t.val.resize(m.val.size());
    for (Index k = 0; k < m.nnz(); ++k) ++t.row_ptr[m.col[k] + 1];
    std::partial_sum(t.row_ptr.begin(), t.row_ptr.end(), t.row_ptr.begin());
    std::vector<Index> next(t.row_ptr.begin(), t.row_ptr.end() - 1);
    for (Index r = 0; r < m.dim; ++r) {
      for (Index k = m.row_ptr[r]; k < m.row_ptr[r + 1]; ++k) {
        const Index pos = next[m.col[k]]++;
        t.col[pos] = r;
        t.val[pos] = m.val[k];
      }
    }
    return t;
  }

  static void product(const CsrMatrix& m, const Vector& v, Vector& out) {
    for (Index r = 0; r < m.dim; ++r) {
      double s = 0.0;
      for (Index k = m.row_ptr[r]; k < m.row_ptr[r + 1]; ++k)
        s += m.val[k] * v[m.col[k]];
      out[r] = s;
    }
  }

  void apply_impl(const Vector&, const Vector& v, Vector& out) const override {
    product(a_, v, out);
  }

  void apply_transpose_impl(const Vector&, const Vector& v,
                            Vector& out) const override {
    product(at_, v, out);
  }

  void vjp_params_impl(const Vector&, const Vector&, const Vector&,
                       Vector&) const override {}

  void diag_impl(const Vector&, Vector& out) const override {
    out.setZero();
    for (Index r = 0; r < a_.dim; ++r)
      for (Index k = a_.row_ptr[r]; k < a_.row_ptr[r + 1]; ++k)
        if (a_.col[k] == r) out[r] += a_.val[k];
  }
};

}  // namespace

std::unique_ptr<MatVecOperator> make_csr_operator(CsrMatrix m) {
  if (m.dim < 1 || m.row_ptr.size() != static_cast<std::size_t>(m.dim) + 1 ||
      m.col.size() != m.val.size())
    throw DimensionError("inconsistent CSR matrix");
  return std::make_unique<CsrOperator>(std::move(m));
}

}  // namespace kadj
