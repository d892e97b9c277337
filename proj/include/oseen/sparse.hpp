#pragma once

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

namespace oseen {

class SolverError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

struct Triplet {
  int row;
  int col;
  double value;
};

/// Coordinate-format accumulator; duplicates are summed on conversion.
class TripletBuffer {
public:
  explicit TripletBuffer(int dim) : dim_(dim) {}

  void add(int row, int col, double value) {
    if (row < 0 || row >= dim_ || col < 0 || col >= dim_)
      throw std::out_of_range("triplet index outside matrix dimension");
    entries_.push_back({row, col, value});
  }

  void reserve(std::size_t n) { entries_.reserve(n); }
  int dim() const { return dim_; }
  const std::vector<Triplet> &entries() const { return entries_; }

private:
  int dim_;
  std::vector<Triplet> entries_;
};

/// Square compressed-row matrix with sorted, unique column indices per row.
struct CsrMatrix {
  int dim = 0;
  std::vector<int> row_ptr{0};
  std::vector<int> col;
  std::vector<double> val;

  int nnz() const { return static_cast<int>(val.size()); }

  std::vector<double> multiply(const std::vector<double> &x) const {
    std::vector<double> y(dim, 0.0);
    for (int i = 0; i < dim; ++i) {
      double s = 0.0;
      for (int k = row_ptr[i]; k < row_ptr[i + 1]; ++k)
        s += val[k] * x[col[k]];
      y[i] = s;
    }
    return y;
  }

  double at(int i, int j) const {
    const auto first = col.begin() + row_ptr[i];
    const auto last = col.begin() + row_ptr[i + 1];
    const auto it = std::lower_bound(first, last, j);
    return (it != last && *it == j) ? val[it - col.begin()] : 0.0;
  }

  /// Row-major dense copy.
  std::vector<double> to_dense() const {
    std::vector<double> d(static_cast<std::size_t>(dim) * dim, 0.0);
    for (int i = 0; i < dim; ++i)
      for (int k = row_ptr[i]; k < row_ptr[i + 1]; ++k)
        d[static_cast<std::size_t>(i) * dim + col[k]] = val[k];
    return d;
  }

  /// Keeps the nonzero entries of a row-major dense matrix.
  static CsrMatrix from_dense(int n, const std::vector<double> &d) {
    CsrMatrix m;
    m.dim = n;
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j)
        if (const double v = d[static_cast<std::size_t>(i) * n + j]; v != 0.0) {
          m.col.push_back(j);
          m.val.push_back(v);
        }
      m.row_ptr.push_back(static_cast<int>(m.val.size()));
    }
    return m;
  }
};

inline CsrMatrix to_csr(const TripletBuffer &buf) {
  std::vector<Triplet> e = buf.entries();
  std::sort(e.begin(), e.end(), [](const Triplet &a, const Triplet &b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });
  CsrMatrix m;
  m.dim = buf.dim();
  m.row_ptr.assign(m.dim + 1, 0);
  m.col.reserve(e.size());
  m.val.reserve(e.size());
  for (std::size_t k = 0; k < e.size(); ++k) {
    if (k > 0 && e[k].row == e[k - 1].row && e[k].col == e[k - 1].col) {
      m.val.back() += e[k].value;
      continue;
    }
    m.col.push_back(e[k].col);
    m.val.push_back(e[k].value);
    ++m.row_ptr[e[k].row + 1];
  }
  for (int i = 0; i < m.dim; ++i)
    m.row_ptr[i + 1] += m.row_ptr[i];
  return m;
}

inline double norm2(const std::vector<double> &v) {
  double s = 0.0;
  for (double x : v)
    s += x * x;
  return std::sqrt(s);
}

/// ||a x - b|| / ||b|| (or ||a x|| when b = 0).
inline double relative_residual(const CsrMatrix &a, const std::vector<double> &x, const std::vector<double> &b) {
  std::vector<double> r = a.multiply(x);
  for (std::size_t i = 0; i < r.size(); ++i)
    r[i] -= b[i];
  const double nb = norm2(b);
  return nb > 0.0 ? norm2(r) / nb : norm2(r);
}

struct LuResult {
  std::vector<double> x;
  double relative_residual = 0.0;
};

/// Sparse LU with partial pivoting and a fill-reducing column ordering.
/// Throws SolverError when a pivot vanishes or the final relative residual
/// exceeds `tolerance` after one step of iterative refinement.
inline LuResult lu_solve(const CsrMatrix &a, const std::vector<double> &rhs, double tolerance = 1e-9) {
  if (static_cast<int>(rhs.size()) != a.dim)
    throw std::invalid_argument("right-hand side length does not match matrix dimension");
  LuResult out;
  if (norm2(rhs) == 0.0) {
    out.x.assign(a.dim, 0.0);
    return out;
  }

  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(a.nnz());
  for (int i = 0; i < a.dim; ++i)
    for (int k = a.row_ptr[i]; k < a.row_ptr[i + 1]; ++k)
      trip.emplace_back(i, a.col[k], a.val[k]);
  Eigen::SparseMatrix<double> m(a.dim, a.dim);
  m.setFromTriplets(trip.begin(), trip.end());
  m.makeCompressed();

  Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu;
  lu.analyzePattern(m);
  lu.factorize(m);
  if (lu.info() != Eigen::Success)
    throw SolverError("sparse LU factorization failed: " + lu.lastErrorMessage());

  const Eigen::Map<const Eigen::VectorXd> b(rhs.data(), a.dim);
  Eigen::VectorXd x = lu.solve(b);
  if (lu.info() != Eigen::Success || !x.allFinite())
    throw SolverError("sparse LU solve failed (numerically singular matrix)");
  out.x.assign(x.data(), x.data() + a.dim);
  out.relative_residual = relative_residual(a, out.x, rhs);
  if (out.relative_residual > tolerance) {
    Eigen::VectorXd r = b - m * x;
    x += lu.solve(r);
    out.x.assign(x.data(), x.data() + a.dim);
    out.relative_residual = relative_residual(a, out.x, rhs);
  }
  if (!(out.relative_residual <= tolerance)) {
    std::ostringstream msg;
    msg << "linear residual " << out.relative_residual << " above tolerance " << tolerance;
    throw SolverError(msg.str());
  }
  return out;
}

inline void write_matrix_market(std::ostream &out, const CsrMatrix &a) {
  out << "%%MatrixMarket matrix coordinate real general\n";
  out << a.dim << ' ' << a.dim << ' ' << a.nnz() << '\n';
  out.precision(17);
  for (int i = 0; i < a.dim; ++i)
    for (int k = a.row_ptr[i]; k < a.row_ptr[i + 1]; ++k)
      out << i + 1 << ' ' << a.col[k] + 1 << ' ' << a.val[k] << '\n';
}

inline CsrMatrix read_matrix_market(std::istream &in) {
  std::string line;
  if (!std::getline(in, line) || line.rfind("%%MatrixMarket matrix coordinate real general", 0) != 0)
    throw std::runtime_error("unsupported Matrix Market header");
  while (std::getline(in, line) && !line.empty() && line[0] == '%') {
  }
  std::istringstream size(line);
  int rows = 0, cols = 0, nnz = 0;
  if (!(size >> rows >> cols >> nnz) || rows != cols)
    throw std::runtime_error("Matrix Market size line must describe a square matrix");
  TripletBuffer buf(rows);
  for (int k = 0; k < nnz; ++k) {
    int i = 0, j = 0;
    double v = 0.0;
    if (!(in >> i >> j >> v))
      throw std::runtime_error("truncated Matrix Market entries");
    buf.add(i - 1, j - 1, v);
  }
  return to_csr(buf);
}

} // namespace oseen
