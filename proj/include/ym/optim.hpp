#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <vector>

#include "ym/common.hpp"

namespace ym {

struct NelderMeadResult {
  std::vector<double> x;
  double value = 0.0;
  int evaluations = 0;
};

// Plain Nelder-Mead simplex minimization; deterministic.
inline NelderMeadResult nelder_mead(const std::function<double(const std::vector<double>&)>& f,
                                    std::vector<double> x0, double scale, int max_iterations = 200,
                                    double simplex_tol = 1e-10) {
  const size_t n = x0.size();
  NelderMeadResult res;
  std::vector<std::vector<double>> pts(n + 1, x0);
  std::vector<double> vals(n + 1);
  for (size_t i = 0; i < n; ++i) pts[i + 1][i] += scale;
  for (size_t i = 0; i <= n; ++i) {
    vals[i] = f(pts[i]);
    ++res.evaluations;
  }

  auto order = [&] {
    std::vector<size_t> idx(n + 1);
    for (size_t i = 0; i <= n; ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(), [&](size_t a, size_t b) { return vals[a] < vals[b]; });
    std::vector<std::vector<double>> p2;
    std::vector<double> v2;
    for (size_t i : idx) {
      p2.push_back(pts[i]);
      v2.push_back(vals[i]);
    }
    pts.swap(p2);
    vals.swap(v2);
  };

  for (int it = 0; it < max_iterations; ++it) {
    order();
    double diam = 0.0;
    for (size_t i = 1; i <= n; ++i)
      for (size_t d = 0; d < n; ++d) diam = std::max(diam, std::abs(pts[i][d] - pts[0][d]));
    if (diam < simplex_tol) break;

    std::vector<double> centroid(n, 0.0);
    for (size_t i = 0; i < n; ++i)
      for (size_t d = 0; d < n; ++d) centroid[d] += pts[i][d] / n;

    auto blend = [&](double coef) {
      std::vector<double> p(n);
      for (size_t d = 0; d < n; ++d) p[d] = centroid[d] + coef * (pts[n][d] - centroid[d]);
      return p;
    };

    const std::vector<double> xr = blend(-1.0);
    const double fr = f(xr);
    ++res.evaluations;
    if (fr < vals[0]) {
      const std::vector<double> xe = blend(-2.0);
      const double fe = f(xe);
      ++res.evaluations;
      if (fe < fr) {
        pts[n] = xe;
        vals[n] = fe;
      } else {
        pts[n] = xr;
        vals[n] = fr;
      }
    } else if (fr < vals[n - 1]) {
      pts[n] = xr;
      vals[n] = fr;
    } else {
      const std::vector<double> xc = blend(fr < vals[n] ? -0.5 : 0.5);
      const double fc = f(xc);
      ++res.evaluations;
      if (fc < std::min(fr, vals[n])) {
        pts[n] = xc;
        vals[n] = fc;
      } else {
        for (size_t i = 1; i <= n; ++i) {
          for (size_t d = 0; d < n; ++d) pts[i][d] = 0.5 * (pts[i][d] + pts[0][d]);
          vals[i] = f(pts[i]);
          ++res.evaluations;
        }
      }
    }
  }
  order();
  res.x = pts[0];
  res.value = vals[0];
  return res;
}

}  // namespace ym
