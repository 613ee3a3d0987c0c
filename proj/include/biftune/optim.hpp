#pragma once

// Derivative-free minimizers for very small problems (<= 4 variables):
// Nelder-Mead with restarts and a compass search used to polish
// non-smooth objectives such as maximum eigenvalues.

#include <array>
#include <cmath>
#include <cstddef>
#include <vector>

namespace biftune {

template <std::size_t N, class F>
std::pair<std::array<double, N>, double> nelder_mead(F&& f, std::array<double, N> x0,
                                                     double scale, int iters) {
  constexpr std::size_t M = N + 1;
  std::array<std::array<double, N>, M> sx;
  std::array<double, M> sf;
  sx[0] = x0;
  for (std::size_t i = 0; i < N; ++i) {
    sx[i + 1] = x0;
    sx[i + 1][i] += scale;
  }
  for (std::size_t i = 0; i < M; ++i) sf[i] = f(sx[i]);

  auto order = [&] {
    for (std::size_t i = 1; i < M; ++i) {  // insertion sort, M <= 5
      auto xv = sx[i];
      double fv = sf[i];
      std::size_t j = i;
      while (j > 0 && sf[j - 1] > fv) {
        sx[j] = sx[j - 1];
        sf[j] = sf[j - 1];
        --j;
      }
      sx[j] = xv;
      sf[j] = fv;
    }
  };

  for (int it = 0; it < iters; ++it) {
    order();
    std::array<double, N> cen{};
    for (std::size_t i = 0; i + 1 < M; ++i)
      for (std::size_t k = 0; k < N; ++k) cen[k] += sx[i][k] / double(N);
    auto mix = [&](double t) {
      std::array<double, N> p;
      for (std::size_t k = 0; k < N; ++k) p[k] = cen[k] + t * (cen[k] - sx[M - 1][k]);
      return p;
    };
    auto xr = mix(1.0);
    const double fr = f(xr);
    if (fr < sf[0]) {
      auto xe = mix(2.0);
      const double fe = f(xe);
      if (fe < fr) {
        sx[M - 1] = xe;
        sf[M - 1] = fe;
      } else {
        sx[M - 1] = xr;
        sf[M - 1] = fr;
      }
    } else if (fr < sf[M - 2]) {
      sx[M - 1] = xr;
      sf[M - 1] = fr;
    } else {
      auto xc = mix(-0.5);
      const double fc = f(xc);
      if (fc < sf[M - 1]) {
        sx[M - 1] = xc;
        sf[M - 1] = fc;
      } else {
        for (std::size_t i = 1; i < M; ++i) {
          for (std::size_t k = 0; k < N; ++k) sx[i][k] = sx[0][k] + 0.5 * (sx[i][k] - sx[0][k]);
          sf[i] = f(sx[i]);
        }
      }
    }
  }
  order();
  return {sx[0], sf[0]};
}

// Compass search over axis and body-diagonal directions with geometric
// step shrink. Slow but dependable on piecewise-smooth objectives.
template <std::size_t N, class F>
std::pair<std::array<double, N>, double> compass_search(F&& f, std::array<double, N> x0, double f0,
                                                        double step0, double step_min) {
  std::vector<std::array<double, N>> dirs;
  for (std::size_t i = 0; i < N; ++i) {
    for (double sg : {1.0, -1.0}) {
      std::array<double, N> d{};
      d[i] = sg;
      dirs.push_back(d);
    }
  }
  const std::size_t ndiag = std::size_t{1} << N;
  for (std::size_t m = 0; m < ndiag; ++m) {
    std::array<double, N> d{};
    for (std::size_t i = 0; i < N; ++i) d[i] = ((m >> i) & 1u) ? 1.0 : -1.0;
    const double nrm = std::sqrt(double(N));
    for (std::size_t i = 0; i < N; ++i) d[i] /= nrm;
    dirs.push_back(d);
  }

  auto x = x0;
  double fx = f0;
  double s = step0;
  while (s > step_min) {
    bool improved = false;
    for (const auto& d : dirs) {
      auto xt = x;
      for (std::size_t i = 0; i < N; ++i) xt[i] += s * d[i];
      const double ft = f(xt);
      if (ft < fx) {
        x = xt;
        fx = ft;
        improved = true;
      }
    }
    if (!improved) s *= 0.5;
  }
  return {x, fx};
}

}  // namespace biftune
