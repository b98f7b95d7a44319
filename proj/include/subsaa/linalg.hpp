#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace subsaa {

using Vector = std::vector<double>;

struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0)
      : rows(r), cols(c), data(r * c, fill) {}

  double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

  static Matrix identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  static Matrix diagonal(const Vector& d) {
    Matrix m(d.size(), d.size());
    for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
    return m;
  }
};

inline Vector matvec(const Matrix& m, const Vector& v) {
  if (v.size() != m.cols) throw std::invalid_argument("matvec: size mismatch");
  Vector out(m.rows, 0.0);
  for (std::size_t i = 0; i < m.rows; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < m.cols; ++j) s += m(i, j) * v[j];
    out[i] = s;
  }
  return out;
}

inline double dot(const Vector& a, const Vector& b) {
  if (a.size() != b.size()) throw std::invalid_argument("dot: size mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm2(const Vector& v) { return std::sqrt(dot(v, v)); }

inline double norm_inf(const Vector& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

inline double max_abs(const Matrix& m) {
  double s = 0.0;
  for (double x : m.data) s = std::max(s, std::abs(x));
  return s;
}

inline bool is_symmetric(const Matrix& m, double tol) {
  if (m.rows != m.cols) return false;
  for (std::size_t i = 0; i < m.rows; ++i)
    for (std::size_t j = i + 1; j < m.cols; ++j)
      if (std::abs(m(i, j) - m(j, i)) > tol) return false;
  return true;
}

// Cyclic Jacobi rotations; fine for the small symmetric matrices used here.
// Eigenvalues come back unsorted, eigvec columns match their order.
inline void symmetric_eigen(const Matrix& input, Vector& eigval, Matrix& eigvec,
                            std::size_t max_sweeps = 100) {
  if (input.rows != input.cols)
    throw std::invalid_argument("symmetric_eigen: matrix must be square");
  const std::size_t n = input.rows;
  Matrix a = input;
  eigvec = Matrix::identity(n);
  eigval.assign(n, 0.0);
  if (n == 0) return;

  const double scale = std::max(max_abs(a), 1.0);
  for (std::size_t sweep = 0; sweep < max_sweeps; ++sweep) {
    double off = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) off += a(i, j) * a(i, j);
    if (std::sqrt(off) <= 1e-14 * scale) break;

    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        if (std::abs(a(p, q)) <= 1e-300) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
        const double t = (theta >= 0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a(k, p);
          const double akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a(p, k);
          const double aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = eigvec(k, p);
          const double vkq = eigvec(k, q);
          eigvec(k, p) = c * vkp - s * vkq;
          eigvec(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }
  for (std::size_t i = 0; i < n; ++i) eigval[i] = a(i, i);
}

inline double min_eigenvalue(const Matrix& m) {
  Vector ev;
  Matrix v;
  symmetric_eigen(m, ev, v);
  double lo = ev.empty() ? 0.0 : ev[0];
  for (double x : ev) lo = std::min(lo, x);
  return lo;
}

// Symmetric square root of a positive semidefinite matrix. Eigenvalues in
// [-tol, 0) are treated as zero; anything below -tol is a domain error.
inline Matrix psd_sqrt(const Matrix& m, double rel_tol = 1e-10) {
  if (!is_symmetric(m, 1e-9 * std::max(max_abs(m), 1.0)))
    throw std::domain_error("psd_sqrt: matrix is not symmetric");
  Vector ev;
  Matrix v;
  symmetric_eigen(m, ev, v);
  const std::size_t n = m.rows;
  const double tol = rel_tol * std::max(max_abs(m), 1.0);
  Vector root(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    if (ev[i] < -tol)
      throw std::domain_error(
          "psd_sqrt: matrix has negative eigenvalue " + std::to_string(ev[i]));
    root[i] = std::sqrt(std::max(ev[i], 0.0));
  }
  Matrix out(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < n; ++k) s += v(i, k) * root[k] * v(j, k);
      out(i, j) = s;
    }
  return out;
}

// LU with partial pivoting. Returns nullopt when a pivot falls below
// 1e-12 times the matrix scale, which callers treat as a singular system.
inline std::optional<Vector> lu_solve(Matrix a, Vector b) {
  if (a.rows != a.cols || a.rows != b.size())
    throw std::invalid_argument("lu_solve: size mismatch");
  const std::size_t n = a.rows;
  const double scale = std::max(max_abs(a), 1.0);
  std::vector<std::size_t> perm(n);
  for (std::size_t i = 0; i < n; ++i) perm[i] = i;

  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot = col;
    double best = std::abs(a(col, col));
    for (std::size_t r = col + 1; r < n; ++r) {
      const double v = std::abs(a(r, col));
      if (v > best) {
        best = v;
        pivot = r;
      }
    }
    if (best < 1e-12 * scale) return std::nullopt;
    if (pivot != col) {
      for (std::size_t j = 0; j < n; ++j) std::swap(a(col, j), a(pivot, j));
      std::swap(b[col], b[pivot]);
    }
    for (std::size_t r = col + 1; r < n; ++r) {
      const double f = a(r, col) / a(col, col);
      a(r, col) = f;
      for (std::size_t j = col + 1; j < n; ++j) a(r, j) -= f * a(col, j);
      b[r] -= f * b[col];
    }
  }
  Vector x(n, 0.0);
  for (std::size_t i = n; i-- > 0;) {
    double s = b[i];
    for (std::size_t j = i + 1; j < n; ++j) s -= a(i, j) * x[j];
    x[i] = s / a(i, i);
  }
  return x;
}

// Largest eigenvalue estimate for a symmetric PSD matrix; used to pick
// gradient step sizes, so a slight overestimate is applied by the caller.
inline double power_iteration_lmax(const Matrix& m, std::size_t iters = 50) {
  if (m.rows != m.cols) throw std::invalid_argument("power_iteration: not square");
  const std::size_t n = m.rows;
  if (n == 0) return 0.0;
  Vector v(n, 1.0 / std::sqrt(static_cast<double>(n)));
  double lambda = 0.0;
  for (std::size_t it = 0; it < iters; ++it) {
    Vector w = matvec(m, v);
    const double nw = norm2(w);
    if (nw <= 1e-300) return 0.0;
    for (std::size_t i = 0; i < n; ++i) v[i] = w[i] / nw;
    lambda = nw;
  }
  return lambda;
}

} // namespace subsaa
