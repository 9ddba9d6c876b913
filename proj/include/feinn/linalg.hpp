#pragma once

/// \file linalg.hpp
/// Compressed sparse row matrices and an envelope Cholesky factorization
/// under reverse Cuthill-McKee ordering. Everything is double precision.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <queue>
#include <span>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

namespace feinn {

using Vector = std::vector<double>;

struct Triplet {
  int row;
  int col;
  double value;
};

/// CSR matrix with sorted, duplicate-free column indices per row.
class SparseMatrix {
 public:
  SparseMatrix() = default;
  SparseMatrix(int rows, int cols) : rows_(rows), cols_(cols), row_ptr_(static_cast<std::size_t>(rows) + 1, 0) {}

  /// Assembles from triplets; duplicates are summed in the order given.
  static SparseMatrix from_triplets(int rows, int cols, std::vector<Triplet> t) {
    std::stable_sort(t.begin(), t.end(), [](const Triplet& a, const Triplet& b) {
      return std::tie(a.row, a.col) < std::tie(b.row, b.col);
    });
    SparseMatrix m(rows, cols);
    for (std::size_t k = 0; k < t.size();) {
      const Triplet& first = t[k];
      if (first.row < 0 || first.row >= rows || first.col < 0 || first.col >= cols) {
        throw std::out_of_range("SparseMatrix::from_triplets: index out of range");
      }
      double s = 0.0;
      std::size_t e = k;
      while (e < t.size() && t[e].row == first.row && t[e].col == first.col) s += t[e++].value;
      m.col_idx_.push_back(first.col);
      m.values_.push_back(s);
      ++m.row_ptr_[static_cast<std::size_t>(first.row) + 1];
      k = e;
    }
    std::partial_sum(m.row_ptr_.begin(), m.row_ptr_.end(), m.row_ptr_.begin());
    return m;
  }

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  std::size_t nnz() const { return values_.size(); }
  const std::vector<int>& row_ptr() const { return row_ptr_; }
  const std::vector<int>& col_idx() const { return col_idx_; }
  const std::vector<double>& values() const { return values_; }
  std::vector<double>& values() { return values_; }

  /// Position of (r, c) in the value array, or -1 when structurally zero.
  int find(int r, int c) const {
    auto b = col_idx_.begin() + row_ptr_[static_cast<std::size_t>(r)];
    auto e = col_idx_.begin() + row_ptr_[static_cast<std::size_t>(r) + 1];
    auto it = std::lower_bound(b, e, c);
    return (it != e && *it == c) ? static_cast<int>(it - col_idx_.begin()) : -1;
  }

  double coeff(int r, int c) const {
    int k = find(r, c);
    return k < 0 ? 0.0 : values_[static_cast<std::size_t>(k)];
  }

  void set_zero() { std::fill(values_.begin(), values_.end(), 0.0); }

  SparseMatrix transpose() const {
    std::vector<Triplet> t;
    t.reserve(nnz());
    for (int r = 0; r < rows_; ++r)
      for (int k = row_ptr_[static_cast<std::size_t>(r)]; k < row_ptr_[static_cast<std::size_t>(r) + 1]; ++k)
        t.push_back({col_idx_[static_cast<std::size_t>(k)], r, values_[static_cast<std::size_t>(k)]});
    return from_triplets(cols_, rows_, std::move(t));
  }

  std::vector<Triplet> triplets() const {
    std::vector<Triplet> t;
    t.reserve(nnz());
    for (int r = 0; r < rows_; ++r)
      for (int k = row_ptr_[static_cast<std::size_t>(r)]; k < row_ptr_[static_cast<std::size_t>(r) + 1]; ++k)
        t.push_back({r, col_idx_[static_cast<std::size_t>(k)], values_[static_cast<std::size_t>(k)]});
    return t;
  }

  /// Row-major dense copy (tests and small problems only).
  std::vector<double> to_dense() const {
    std::vector<double> d(static_cast<std::size_t>(rows_) * static_cast<std::size_t>(cols_), 0.0);
    for (const auto& t : triplets()) d[static_cast<std::size_t>(t.row) * static_cast<std::size_t>(cols_) + static_cast<std::size_t>(t.col)] = t.value;
    return d;
  }

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<int> row_ptr_;
  std::vector<int> col_idx_;
  std::vector<double> values_;
};

inline Vector spmv(const SparseMatrix& a, std::span<const double> x) {
  if (static_cast<int>(x.size()) != a.cols()) {
    throw std::invalid_argument("spmv: dimension mismatch (" + std::to_string(x.size()) + " vs " + std::to_string(a.cols()) + ")");
  }
  Vector y(static_cast<std::size_t>(a.rows()), 0.0);
  const auto& rp = a.row_ptr();
  const auto& ci = a.col_idx();
  const auto& v = a.values();
  for (int r = 0; r < a.rows(); ++r) {
    double s = 0.0;
    for (int k = rp[static_cast<std::size_t>(r)]; k < rp[static_cast<std::size_t>(r) + 1]; ++k)
      s += v[static_cast<std::size_t>(k)] * x[static_cast<std::size_t>(ci[static_cast<std::size_t>(k)])];
    y[static_cast<std::size_t>(r)] = s;
  }
  return y;
}

/// y = A^T x without forming the transpose.
inline Vector spmv_transpose(const SparseMatrix& a, std::span<const double> x) {
  if (static_cast<int>(x.size()) != a.rows()) {
    throw std::invalid_argument("spmv_transpose: dimension mismatch (" + std::to_string(x.size()) + " vs " + std::to_string(a.rows()) + ")");
  }
  Vector y(static_cast<std::size_t>(a.cols()), 0.0);
  const auto& rp = a.row_ptr();
  const auto& ci = a.col_idx();
  const auto& v = a.values();
  for (int r = 0; r < a.rows(); ++r) {
    double xr = x[static_cast<std::size_t>(r)];
    if (xr == 0.0) continue;
    for (int k = rp[static_cast<std::size_t>(r)]; k < rp[static_cast<std::size_t>(r) + 1]; ++k)
      y[static_cast<std::size_t>(ci[static_cast<std::size_t>(k)])] += v[static_cast<std::size_t>(k)] * xr;
  }
  return y;
}

/// C^T M C for a square M (rows of C index M).
inline SparseMatrix congruence(const SparseMatrix& c, const SparseMatrix& m) {
  if (c.rows() != m.rows() || m.rows() != m.cols()) throw std::invalid_argument("congruence: dimension mismatch");
  const auto& crp = c.row_ptr();
  const auto& cci = c.col_idx();
  const auto& cv = c.values();
  std::vector<Triplet> t;
  for (const auto& e : m.triplets()) {
    for (int a = crp[static_cast<std::size_t>(e.row)]; a < crp[static_cast<std::size_t>(e.row) + 1]; ++a)
      for (int b = crp[static_cast<std::size_t>(e.col)]; b < crp[static_cast<std::size_t>(e.col) + 1]; ++b)
        t.push_back({cci[static_cast<std::size_t>(a)], cci[static_cast<std::size_t>(b)],
                     cv[static_cast<std::size_t>(a)] * e.value * cv[static_cast<std::size_t>(b)]});
  }
  return SparseMatrix::from_triplets(c.cols(), c.cols(), std::move(t));
}

/// A + s B, with the union sparsity pattern.
inline SparseMatrix add(const SparseMatrix& a, const SparseMatrix& b, double s = 1.0) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw std::invalid_argument("add: dimension mismatch");
  auto t = a.triplets();
  for (auto e : b.triplets()) t.push_back({e.row, e.col, s * e.value});
  return SparseMatrix::from_triplets(a.rows(), a.cols(), std::move(t));
}

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm_inf(std::span<const double> a) {
  double m = 0.0;
  for (double v : a) m = std::max(m, std::abs(v));
  return m;
}

/// Reverse Cuthill-McKee permutation of a structurally symmetric matrix:
/// `perm[new] = old`.
inline std::vector<int> reverse_cuthill_mckee(const SparseMatrix& a) {
  const int n = a.rows();
  std::vector<int> degree(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) degree[static_cast<std::size_t>(i)] = a.row_ptr()[static_cast<std::size_t>(i) + 1] - a.row_ptr()[static_cast<std::size_t>(i)];
  std::vector<int> order;
  order.reserve(static_cast<std::size_t>(n));
  std::vector<char> seen(static_cast<std::size_t>(n), 0);
  std::vector<int> by_degree(static_cast<std::size_t>(n));
  std::iota(by_degree.begin(), by_degree.end(), 0);
  std::stable_sort(by_degree.begin(), by_degree.end(), [&](int x, int y) { return degree[static_cast<std::size_t>(x)] < degree[static_cast<std::size_t>(y)]; });
  std::vector<int> nbrs;
  for (int start : by_degree) {
    if (seen[static_cast<std::size_t>(start)]) continue;
    std::queue<int> q;
    q.push(start);
    seen[static_cast<std::size_t>(start)] = 1;
    while (!q.empty()) {
      int v = q.front();
      q.pop();
      order.push_back(v);
      nbrs.clear();
      for (int k = a.row_ptr()[static_cast<std::size_t>(v)]; k < a.row_ptr()[static_cast<std::size_t>(v) + 1]; ++k) {
        int w = a.col_idx()[static_cast<std::size_t>(k)];
        if (!seen[static_cast<std::size_t>(w)]) {
          seen[static_cast<std::size_t>(w)] = 1;
          nbrs.push_back(w);
        }
      }
      std::stable_sort(nbrs.begin(), nbrs.end(), [&](int x, int y) { return degree[static_cast<std::size_t>(x)] < degree[static_cast<std::size_t>(y)]; });
      for (int w : nbrs) q.push(w);
    }
  }
  std::reverse(order.begin(), order.end());
  return order;
}

/// Process-wide count of Cholesky factorizations performed.
inline std::atomic<long>& cholesky_factorization_count() {
  static std::atomic<long> count{0};
  return count;
}

/// P B P^T = L L^T with L stored row-wise over its envelope.
class CholeskyFactor {
 public:
  CholeskyFactor() = default;
  CholeskyFactor(const CholeskyFactor& o)
      : n_(o.n_), perm_(o.perm_), first_(o.first_), start_(o.start_), l_(o.l_), solves_(o.solves_.load()) {}
  CholeskyFactor& operator=(const CholeskyFactor& o) {
    n_ = o.n_;
    perm_ = o.perm_;
    first_ = o.first_;
    start_ = o.start_;
    l_ = o.l_;
    solves_.store(o.solves_.load());
    return *this;
  }

  int size() const { return n_; }
  const std::vector<int>& permutation() const { return perm_; }
  long solve_count() const { return solves_.load(); }
  std::size_t envelope_size() const { return l_.size(); }

  /// Entry (i, j) of L in the permuted ordering.
  double l(int i, int j) const {
    if (j > i || j < first_[static_cast<std::size_t>(i)]) return 0.0;
    return l_[static_cast<std::size_t>(start_[static_cast<std::size_t>(i)] + (j - first_[static_cast<std::size_t>(i)]))];
  }

  Vector solve(std::span<const double> rhs) const {
    if (static_cast<int>(rhs.size()) != n_) throw std::invalid_argument("CholeskyFactor::solve: dimension mismatch");
    ++solves_;
    Vector y(static_cast<std::size_t>(n_));
    for (int i = 0; i < n_; ++i) y[static_cast<std::size_t>(i)] = rhs[static_cast<std::size_t>(perm_[static_cast<std::size_t>(i)])];
    for (int i = 0; i < n_; ++i) {
      const double* row = &l_[static_cast<std::size_t>(start_[static_cast<std::size_t>(i)])];
      int f = first_[static_cast<std::size_t>(i)];
      double s = y[static_cast<std::size_t>(i)];
      for (int j = f; j < i; ++j) s -= row[j - f] * y[static_cast<std::size_t>(j)];
      y[static_cast<std::size_t>(i)] = s / row[i - f];
    }
    for (int i = n_ - 1; i >= 0; --i) {
      const double* row = &l_[static_cast<std::size_t>(start_[static_cast<std::size_t>(i)])];
      int f = first_[static_cast<std::size_t>(i)];
      double xi = y[static_cast<std::size_t>(i)] / row[i - f];
      y[static_cast<std::size_t>(i)] = xi;
      for (int j = f; j < i; ++j) y[static_cast<std::size_t>(j)] -= row[j - f] * xi;
    }
    Vector x(static_cast<std::size_t>(n_));
    for (int i = 0; i < n_; ++i) x[static_cast<std::size_t>(perm_[static_cast<std::size_t>(i)])] = y[static_cast<std::size_t>(i)];
    return x;
  }

  friend CholeskyFactor cholesky(const SparseMatrix& b);

 private:
  int n_ = 0;
  std::vector<int> perm_;   // perm_[new] = old
  std::vector<int> first_;  // first envelope column of each permuted row
  std::vector<int> start_;  // offset of each row in l_
  std::vector<double> l_;
  mutable std::atomic<long> solves_{0};
};

/// Factorizes a symmetric positive definite matrix (full storage). Throws
/// std::runtime_error("... not SPD ...") on a non-positive pivot.
inline CholeskyFactor cholesky(const SparseMatrix& b) {
  if (b.rows() != b.cols()) throw std::invalid_argument("cholesky: matrix is not square");
  CholeskyFactor f;
  const int n = b.rows();
  f.n_ = n;
  f.perm_ = reverse_cuthill_mckee(b);
  std::vector<int> inv(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) inv[static_cast<std::size_t>(f.perm_[static_cast<std::size_t>(i)])] = i;

  f.first_.assign(static_cast<std::size_t>(n), 0);
  for (int i = 0; i < n; ++i) {
    int old = f.perm_[static_cast<std::size_t>(i)];
    int fi = i;
    for (int k = b.row_ptr()[static_cast<std::size_t>(old)]; k < b.row_ptr()[static_cast<std::size_t>(old) + 1]; ++k)
      fi = std::min(fi, inv[static_cast<std::size_t>(b.col_idx()[static_cast<std::size_t>(k)])]);
    f.first_[static_cast<std::size_t>(i)] = fi;
  }
  f.start_.assign(static_cast<std::size_t>(n) + 1, 0);
  for (int i = 0; i < n; ++i) f.start_[static_cast<std::size_t>(i) + 1] = f.start_[static_cast<std::size_t>(i)] + (i - f.first_[static_cast<std::size_t>(i)] + 1);
  f.l_.assign(static_cast<std::size_t>(f.start_[static_cast<std::size_t>(n)]), 0.0);
  for (int i = 0; i < n; ++i) {
    int old = f.perm_[static_cast<std::size_t>(i)];
    for (int k = b.row_ptr()[static_cast<std::size_t>(old)]; k < b.row_ptr()[static_cast<std::size_t>(old) + 1]; ++k) {
      int j = inv[static_cast<std::size_t>(b.col_idx()[static_cast<std::size_t>(k)])];
      if (j <= i) f.l_[static_cast<std::size_t>(f.start_[static_cast<std::size_t>(i)] + (j - f.first_[static_cast<std::size_t>(i)]))] = b.values()[static_cast<std::size_t>(k)];
    }
  }
  for (int i = 0; i < n; ++i) {
    double* ri = &f.l_[static_cast<std::size_t>(f.start_[static_cast<std::size_t>(i)])];
    int fi = f.first_[static_cast<std::size_t>(i)];
    for (int j = fi; j <= i; ++j) {
      const double* rj = &f.l_[static_cast<std::size_t>(f.start_[static_cast<std::size_t>(j)])];
      int fj = f.first_[static_cast<std::size_t>(j)];
      double s = ri[j - fi];
      for (int k = std::max(fi, fj); k < j; ++k) s -= ri[k - fi] * rj[k - fj];
      if (j < i) {
        ri[j - fi] = s / rj[j - fj];
      } else {
        if (!(s > 0.0) || !std::isfinite(s)) {
          throw std::runtime_error("cholesky: matrix not SPD (pivot " + std::to_string(s) + " at row " + std::to_string(i) + ")");
        }
        ri[j - fi] = std::sqrt(s);
      }
    }
  }
  ++cholesky_factorization_count();
  return f;
}

}  // namespace feinn
