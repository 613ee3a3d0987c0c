#pragma once

// Fixed-size vector/matrix helpers for the 2- and 3-dimensional systems this
// library works with, plus closed-form 2x2 eigenvalues and a Jacobi
// eigensolver for small symmetric matrices.

#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <utility>

namespace biftune {

template <std::size_t N>
using State = std::array<double, N>;

template <std::size_t N>
using Mat = std::array<std::array<double, N>, N>;

template <std::size_t N>
inline bool all_finite(const State<N>& v) {
  for (double x : v) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

template <std::size_t N>
inline State<N> axpy(const State<N>& y, double a, const State<N>& x) {
  State<N> r{};
  for (std::size_t i = 0; i < N; ++i) r[i] = y[i] + a * x[i];
  return r;
}

template <std::size_t N>
inline double max_abs(const State<N>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

template <std::size_t N>
inline Mat<N> identity() {
  Mat<N> m{};
  for (std::size_t i = 0; i < N; ++i) m[i][i] = 1.0;
  return m;
}

template <std::size_t N>
inline Mat<N> matmul(const Mat<N>& a, const Mat<N>& b) {
  Mat<N> c{};
  for (std::size_t i = 0; i < N; ++i)
    for (std::size_t k = 0; k < N; ++k)
      for (std::size_t j = 0; j < N; ++j) c[i][j] += a[i][k] * b[k][j];
  return c;
}

template <std::size_t N>
inline State<N> matvec(const Mat<N>& a, const State<N>& x) {
  State<N> y{};
  for (std::size_t i = 0; i < N; ++i)
    for (std::size_t j = 0; j < N; ++j) y[i] += a[i][j] * x[j];
  return y;
}

template <std::size_t N>
inline double max_abs_diff(const Mat<N>& a, const Mat<N>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < N; ++i)
    for (std::size_t j = 0; j < N; ++j) m = std::max(m, std::abs(a[i][j] - b[i][j]));
  return m;
}

inline double det2(const Mat<2>& m) { return m[0][0] * m[1][1] - m[0][1] * m[1][0]; }
inline double trace2(const Mat<2>& m) { return m[0][0] + m[1][1]; }

// Eigenvalues of a real 2x2 matrix from trace and determinant. Avoids
// library variance; the matrices here are tiny and well scaled.
inline std::pair<std::complex<double>, std::complex<double>> eig2(const Mat<2>& m) {
  const double tr = trace2(m);
  const double det = det2(m);
  const double disc = tr * tr / 4.0 - det;
  if (disc >= 0.0) {
    const double s = std::sqrt(disc);
    return {std::complex<double>(tr / 2.0 + s, 0.0), std::complex<double>(tr / 2.0 - s, 0.0)};
  }
  const double s = std::sqrt(-disc);
  return {std::complex<double>(tr / 2.0, s), std::complex<double>(tr / 2.0, -s)};
}

// Eigenvalues of a symmetric NxN matrix by cyclic Jacobi rotations,
// returned in ascending order. Plenty for the 2x2/3x3 forms used here.
template <std::size_t N>
inline std::array<double, N> sym_eigenvalues(Mat<N> a) {
  for (int sweep = 0; sweep < 64; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p + 1 < N; ++p)
      for (std::size_t q = p + 1; q < N; ++q) off = std::max(off, std::abs(a[p][q]));
    if (off < 1e-300) break;
    for (std::size_t p = 0; p + 1 < N; ++p) {
      for (std::size_t q = p + 1; q < N; ++q) {
        if (std::abs(a[p][q]) < 1e-300) continue;
        const double theta = 0.5 * (a[q][q] - a[p][p]) / a[p][q];
        double t;
        if (std::abs(theta) > 1e150) {
          t = 0.5 / theta;
        } else {
          t = ((theta >= 0.0) ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        }
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        // Rotate rows/columns p and q.
        for (std::size_t k = 0; k < N; ++k) {
          const double akp = a[k][p], akq = a[k][q];
          a[k][p] = c * akp - s * akq;
          a[k][q] = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < N; ++k) {
          const double apk = a[p][k], aqk = a[q][k];
          a[p][k] = c * apk - s * aqk;
          a[q][k] = s * apk + c * aqk;
        }
      }
    }
  }
  std::array<double, N> ev{};
  for (std::size_t i = 0; i < N; ++i) ev[i] = a[i][i];
  for (std::size_t i = 1; i < N; ++i) {  // insertion sort
    double v = ev[i];
    std::size_t j = i;
    while (j > 0 && ev[j - 1] > v) {
      ev[j] = ev[j - 1];
      --j;
    }
    ev[j] = v;
  }
  return ev;
}

}  // namespace biftune
