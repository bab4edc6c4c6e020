#pragma once

#include <cmath>
#include <utility>
#include <vector>

#include "error.hpp"
#include "jet.hpp"

namespace sflow {

template <class C>
struct Mat {
  int rows = 0, cols = 0;
  std::vector<C> a;

  Mat() = default;
  Mat(int r, int c) : rows(r), cols(c), a(std::size_t(r) * std::size_t(c)) {}

  C& at(int r, int c) { return a[std::size_t(r) * cols + c]; }
  const C& at(int r, int c) const { return a[std::size_t(r) * cols + c]; }
};

struct PivotPattern {
  std::vector<std::pair<int, int>> pivots;  // (row, col) in elimination order
  int rows = 0, cols = 0;

  bool operator==(const PivotPattern&) const = default;

  int rank() const { return int(pivots.size()); }
  std::vector<int> pivot_cols() const {
    std::vector<int> c;
    for (auto& p : pivots) c.push_back(p.second);
    return c;
  }
};

// Gauss-Jordan elimination with a fixed strategy: columns scanned left to
// right, pivot row chosen by maximal absolute value, an entry counted as a
// pivot iff |entry| > tol * max|A|.  `trans` accumulates the row operations,
// so trans * A_original = rref.  When `forced` is given the recorded pivot
// sequence is replayed without threshold decisions, which keeps the reduced
// form a smooth function of the entries near the reference point.
template <class C>
struct Elimination {
  Mat<C> rref;
  Mat<C> trans;
  PivotPattern pattern;
  std::vector<int> pivot_row_of_col;  // -1 for free columns
  std::vector<int> free_cols;
  std::vector<int> pivotless_rows;
  int rank = 0;
  double norm_max = 0.0;
};

template <class C>
Elimination<C> eliminate(const Mat<C>& A, double rel_tol,
                         const PivotPattern* forced = nullptr) {
  const int m = A.rows, n = A.cols;
  Elimination<C> e;
  e.rref = A;
  e.trans = Mat<C>(m, m);
  for (int i = 0; i < m; ++i) e.trans.at(i, i) = C(1.0);
  e.pattern.rows = m;
  e.pattern.cols = n;
  e.pivot_row_of_col.assign(n, -1);

  for (const C& x : A.a) {
    double v = value_of(x);
    if (!std::isfinite(v)) fail(Err::NonFinite, "matrix entry is not finite");
    e.norm_max = std::max(e.norm_max, std::abs(v));
  }
  const double thresh = rel_tol * e.norm_max;

  std::vector<bool> row_used(m, false);

  auto is_exact_zero = [](const C& x) {
    if constexpr (std::is_same_v<C, double>) {
      return x == 0.0;
    } else {
      for (std::size_t q = 0; q < x.size(); ++q)
        if (x.data()[q] != 0.0) return false;
      return true;
    }
  };

  auto apply_pivot = [&](int r, int c) {
    C piv = e.rref.at(r, c);
    if (value_of(piv) == 0.0)
      fail(Err::Domain, "degenerate pivot while replaying elimination pattern");
    for (int k = 0; k < n; ++k) e.rref.at(r, k) /= piv;
    for (int k = 0; k < m; ++k) e.trans.at(r, k) /= piv;
    // a/a is identically one; pin it so eliminated entries vanish exactly.
    e.rref.at(r, c) = constant_like(piv, 1.0);
    for (int s = 0; s < m; ++s) {
      if (s == r) continue;
      C f = e.rref.at(s, c);
      if (is_exact_zero(f)) continue;
      for (int k = 0; k < n; ++k) e.rref.at(s, k) -= f * e.rref.at(r, k);
      for (int k = 0; k < m; ++k) e.trans.at(s, k) -= f * e.trans.at(r, k);
      e.rref.at(s, c) = constant_like(f, 0.0);
    }
    row_used[r] = true;
    e.pattern.pivots.emplace_back(r, c);
    e.pivot_row_of_col[c] = r;
  };

  if (forced) {
    if (forced->rows != m || forced->cols != n)
      fail(Err::Dimension, "pivot pattern does not match matrix dimensions");
    for (auto [r, c] : forced->pivots) apply_pivot(r, c);
  } else {
    for (int c = 0; c < n; ++c) {
      int best = -1;
      double best_abs = thresh;
      for (int r = 0; r < m; ++r) {
        if (row_used[r]) continue;
        double v = std::abs(value_of(e.rref.at(r, c)));
        if (v > best_abs) {
          best_abs = v;
          best = r;
        }
      }
      if (best >= 0) apply_pivot(best, c);
    }
  }

  e.rank = int(e.pattern.pivots.size());
  for (int c = 0; c < n; ++c)
    if (e.pivot_row_of_col[c] < 0) e.free_cols.push_back(c);
  for (int r = 0; r < m; ++r)
    if (!row_used[r]) e.pivotless_rows.push_back(r);
  return e;
}

// Basis of Ker A: one vector per free column, the free variable set to 1.
template <class C>
std::vector<std::vector<C>> right_nullspace(const Elimination<C>& e) {
  std::vector<std::vector<C>> basis;
  for (int f : e.free_cols) {
    std::vector<C> v(e.pattern.cols, C(0.0));
    v[f] = C(1.0);
    for (auto [r, c] : e.pattern.pivots) v[c] = -e.rref.at(r, f);
    basis.push_back(std::move(v));
  }
  return basis;
}

// Basis of Ker A^T: the accumulated row-operation rows of pivotless rows.
template <class C>
std::vector<std::vector<C>> left_nullspace(const Elimination<C>& e) {
  std::vector<std::vector<C>> basis;
  for (int r : e.pivotless_rows) {
    std::vector<C> v(e.pattern.rows, C(0.0));
    for (int k = 0; k < e.pattern.rows; ++k) v[k] = e.trans.at(r, k);
    basis.push_back(std::move(v));
  }
  return basis;
}

template <class C>
std::vector<C> reduce_rhs(const Elimination<C>& e, const std::vector<C>& b) {
  const int m = e.pattern.rows;
  std::vector<C> r(m, C(0.0));
  for (int i = 0; i < m; ++i) {
    C acc = C(0.0);
    for (int k = 0; k < m; ++k) acc += e.trans.at(i, k) * b[k];
    r[i] = acc;
  }
  return r;
}

// Particular solution with free variables set to zero.  Ignores residuals in
// pivotless rows, so it stays a smooth function of the data; consistency is
// the caller's concern.
template <class C>
std::vector<C> particular_solution(const Elimination<C>& e,
                                   const std::vector<C>& b_reduced) {
  std::vector<C> x(e.pattern.cols, C(0.0));
  for (auto [r, c] : e.pattern.pivots) x[c] = b_reduced[r];
  return x;
}

// --- public, double-precision surface -------------------------------------

struct NullspaceResult {
  int rank = 0;
  std::vector<std::vector<double>> right_basis;
  std::vector<std::vector<double>> left_basis;
  std::vector<std::pair<int, int>> pivot_pattern;
};

inline constexpr double kDefaultRankTol = 1e-10;

inline NullspaceResult rank_nullspaces(const Mat<double>& A,
                                       double tol = kDefaultRankTol) {
  auto e = eliminate(A, tol);
  NullspaceResult r;
  r.rank = e.rank;
  r.right_basis = right_nullspace(e);
  r.left_basis = left_nullspace(e);
  r.pivot_pattern = e.pattern.pivots;
  return r;
}

struct SolveResult {
  bool consistent = false;
  std::vector<double> particular;            // valid when consistent
  std::vector<std::vector<double>> nullspace;  // valid when consistent
  std::vector<int> violated_rows;  // reduced-row indices, when inconsistent
  std::vector<double> residuals;
};

inline SolveResult solve_consistent(const Mat<double>& A,
                                    const std::vector<double>& b,
                                    double tol = kDefaultRankTol) {
  if (int(b.size()) != A.rows)
    fail(Err::Dimension, "right-hand side length does not match matrix rows");
  double norm_b = 0.0;
  for (double x : b) {
    if (!std::isfinite(x)) fail(Err::NonFinite, "rhs entry is not finite");
    norm_b = std::max(norm_b, std::abs(x));
  }
  auto e = eliminate(A, tol);
  auto br = reduce_rhs(e, b);
  const double bound = tol * std::max({e.norm_max, norm_b, 1.0});
  SolveResult r;
  for (int row : e.pivotless_rows) {
    if (std::abs(br[row]) > bound) {
      r.violated_rows.push_back(row);
      r.residuals.push_back(br[row]);
    }
  }
  if (!r.violated_rows.empty()) {
    r.consistent = false;
    return r;
  }
  r.consistent = true;
  r.particular = particular_solution(e, br);
  r.nullspace = right_nullspace(e);
  return r;
}

}  // namespace sflow
