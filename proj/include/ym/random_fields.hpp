#pragma once

#include <cmath>
#include <random>
#include <vector>

#include "ym/gauge_field.hpp"
#include "ym/grid.hpp"
#include "ym/spectral.hpp"

namespace ym {

// Seeded band-limited random fields, evaluated as explicit trigonometric
// sums so the continuum field is identical at every resolution; the mode
// draw order is fixed and independent of the grid.
struct SmoothFieldSpec {
  int k_max = 2;        // band limit per axis
  double k_decay = 2.0; // Gaussian spectral envelope scale
};

namespace detail {

struct TrigMode {
  int kx, ky;
  double c[3];  // cosine amplitude per algebra coordinate
  double s[3];  // sine amplitude
};

inline std::vector<TrigMode> draw_modes(std::mt19937_64& rng, const SmoothFieldSpec& spec) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<TrigMode> modes;
  for (int ky = -spec.k_max; ky <= spec.k_max; ++ky) {
    for (int kx = -spec.k_max; kx <= spec.k_max; ++kx) {
      // One representative per +-k pair; k = 0 carries the mean.
      if (ky < 0 || (ky == 0 && kx < 0)) continue;
      TrigMode m{kx, ky, {0, 0, 0}, {0, 0, 0}};
      const double k2 = double(kx) * kx + double(ky) * ky;
      const double env = std::exp(-k2 / (2.0 * spec.k_decay * spec.k_decay));
      for (int c = 0; c < 3; ++c) {
        m.c[c] = env * gauss(rng);
        m.s[c] = (kx == 0 && ky == 0) ? 0.0 : env * gauss(rng);
      }
      modes.push_back(m);
    }
  }
  return modes;
}

inline void accumulate(Su2Field& f, const std::vector<TrigMode>& modes) {
  const Grid& g = f.grid();
  for (int iy = 0; iy < g.n; ++iy) {
    for (int ix = 0; ix < g.n; ++ix) {
      const int idx = g.index(ix, iy);
      const double x = g.x(ix), y = g.y(iy);
      AlgebraElement v;
      for (const TrigMode& m : modes) {
        const double phase = kTwoPi * (m.kx * x + m.ky * y);
        const double cp = std::cos(phase), sp = std::sin(phase);
        v.i += m.c[0] * cp + m.s[0] * sp;
        v.j += m.c[1] * cp + m.s[1] * sp;
        v.k += m.c[2] * cp + m.s[2] * sp;
      }
      f.set(idx, v);
    }
  }
}

}  // namespace detail

inline Su2Field random_scalar_field(Grid g, uint64_t seed, const SmoothFieldSpec& spec = {}) {
  std::mt19937_64 rng(seed);
  Su2Field f(g);
  detail::accumulate(f, detail::draw_modes(rng, spec));
  return f;
}

inline OneForm random_one_form(Grid g, uint64_t seed, const SmoothFieldSpec& spec = {}) {
  std::mt19937_64 rng(seed);
  OneForm a(g);
  const auto mx = detail::draw_modes(rng, spec);
  const auto my = detail::draw_modes(rng, spec);
  detail::accumulate(a.x, mx);
  detail::accumulate(a.y, my);
  return a;
}

// Random slice perturbation at the given base, normalized in W^{1,2}.
inline Connection random_slice_connection(SpectralWorkspace& ws, const FlatBase& base,
                                          uint64_t seed, double amplitude_w12,
                                          const SmoothFieldSpec& spec = {}) {
  OneForm a = random_one_form(ws.grid(), seed, spec);
  a = coulomb_project(ws, a, base);
  const double nrm = sobolev_norm(ws, a, 2.0, 1);
  if (nrm > 0.0) a *= amplitude_w12 / nrm;
  return Connection(base, std::move(a));
}

// Random slice perturbation normalized so the curvature has the requested
// L^2 norm (amplitude rescaled once; the quadratic term is negligible at
// the amplitudes used here).
inline Connection random_small_curvature_connection(SpectralWorkspace& ws, const FlatBase& base,
                                                    uint64_t seed, double curvature_l2,
                                                    const SmoothFieldSpec& spec = {}) {
  Connection A = random_slice_connection(ws, base, seed, 0.01, spec);
  const double f0 = l2_norm(curvature(ws, A));
  if (f0 > 0.0) A.a *= curvature_l2 / f0;
  // One corrective rescale for the quadratic part of the curvature.
  const double f1 = l2_norm(curvature(ws, A));
  if (f1 > 0.0) A.a *= curvature_l2 / f1;
  return A;
}

// Smooth random gauge transform exp(chi) with band-limited chi.
inline GaugeTransform random_gauge_transform(Grid g, uint64_t seed, double amplitude,
                                             const SmoothFieldSpec& spec = {}) {
  Su2Field chi = random_scalar_field(g, seed, spec);
  double m = 0.0;
  for (int i = 0; i < g.sites(); ++i) m = std::max(m, norm(chi.at(i)));
  if (m > 0.0) chi *= amplitude / m;
  return exponential(chi);
}

}  // namespace ym
