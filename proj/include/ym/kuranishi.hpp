#pragma once

#include <cmath>
#include <utility>
#include <vector>

#include "ym/gauge_field.hpp"
#include "ym/spectral.hpp"

namespace ym {

// Span of the slice one-form eigenmodes of the base Laplacian with eigenvalue
// below the cutoff, stored as an orthonormal real basis.  With the default
// cutoff (half the first nonzero eigenvalue) this is exactly the harmonic
// space: dimension 6 at the four corner bases, 2 elsewhere.
struct LowModeSpace {
  FlatBase base;
  Grid grid;
  double cutoff = 0.0;
  std::vector<OneForm> basis;

  int dimension() const { return static_cast<int>(basis.size()); }
};

namespace detail {

inline void add_trig_candidates(std::vector<OneForm>& out, const Grid& g, int s, int kx_idx,
                                int ky_idx, double mx, double my, double eig, double thr) {
  // Slice directions for this mode: both axes when harmonic, otherwise the
  // single direction orthogonal to m.
  std::vector<std::pair<double, double>> dirs;
  if (eig <= thr) {
    dirs = {{1.0, 0.0}, {0.0, 1.0}};
  } else {
    const double inv = 1.0 / std::sqrt(eig);
    dirs = {{-my * inv, mx * inv}};
  }

  const int n = g.n;
  const double kx = (kx_idx < n / 2) ? kx_idx : kx_idx - n;
  const double ky = (ky_idx < n / 2) ? ky_idx : ky_idx - n;

  for (auto [dx, dy] : dirs) {
    for (int part = 0; part < 2; ++part) {  // real and imaginary parts
      OneForm cand(g);
      for (int iy = 0; iy < n; ++iy) {
        for (int ix = 0; ix < n; ++ix) {
          const int idx = g.index(ix, iy);
          const double phase = kTwoPi * (kx * g.x(ix) + ky * g.y(iy));
          const double re = (part == 0) ? std::cos(phase) : -std::sin(phase);
          const double im = (part == 0) ? std::sin(phase) : std::cos(phase);
          AlgebraElement v;
          switch (s) {
            case 0: v = {0.0, 0.0, re}; break;
            case 1: v = {re, im, 0.0}; break;   // coefficient of I - iJ
            case 2: v = {re, -im, 0.0}; break;  // coefficient of I + iJ
          }
          cand.x.add(idx, dx * v);
          cand.y.add(idx, dy * v);
        }
      }
      out.push_back(std::move(cand));
    }
  }
}

}  // namespace detail

// Default cutoff: midpoint of the spectral gap between the kernel level and
// the first nonzero slice eigenvalue, so the low-mode space is exactly the
// harmonic space at every flat base.
inline double default_low_mode_cutoff(SpectralWorkspace& ws, const FlatBase& base) {
  return 0.5 * first_nonzero_eigenvalue(ws, base);
}

inline LowModeSpace make_low_mode_space(SpectralWorkspace& ws, const FlatBase& base,
                                        double cutoff = -1.0) {
  const Grid& g = ws.grid();
  const BaseModes& bm = ws.modes(base.alpha, base.beta);
  const double thr = bm.default_kernel_threshold();
  LowModeSpace space;
  space.base = base;
  space.grid = g;
  space.cutoff = (cutoff > 0.0) ? cutoff : default_low_mode_cutoff(ws, base);

  std::vector<OneForm> cands;
  for (int s = 0; s < 3; ++s)
    for (int ix = 0; ix < g.n; ++ix)
      for (int iy = 0; iy < g.n; ++iy) {
        const double e = bm.eig(s, ix, iy);
        if (e < space.cutoff)
          detail::add_trig_candidates(cands, g, s, ix, iy, bm.mx[s][ix], bm.my[s][iy], e, thr);
      }

  // Modified Gram-Schmidt with one re-orthogonalization pass; conjugate
  // mode pairs produce duplicate candidates that drop out here.
  for (OneForm& c : cands) {
    for (int pass = 0; pass < 2; ++pass)
      for (const OneForm& e : space.basis) {
        const double proj = l2_inner(c, e);
        OneForm scaled = e;
        scaled *= proj;
        c -= scaled;
      }
    const double nrm = l2_norm(c);
    if (nrm > 1e-6) {
      c *= 1.0 / nrm;
      space.basis.push_back(std::move(c));
    }
  }
  return space;
}

struct LowModeSplit {
  std::vector<double> coords;
  OneForm parallel;
  OneForm perpendicular;
};

// Orthogonal split b = b_par + b_perp against the low-mode basis.
inline LowModeSplit low_mode_projection(const OneForm& b, const LowModeSpace& space) {
  LowModeSplit split;
  split.parallel = OneForm(b.grid());
  split.coords.reserve(space.basis.size());
  for (const OneForm& e : space.basis) {
    const double c = l2_inner(b, e);
    split.coords.push_back(c);
    OneForm scaled = e;
    scaled *= c;
    split.parallel += scaled;
  }
  split.perpendicular = b - split.parallel;
  return split;
}

inline OneForm from_coords(const std::vector<double>& coords, const LowModeSpace& space) {
  if (coords.size() != space.basis.size())
    fail(ErrorCode::BadArgument, "coordinate/basis dimension mismatch");
  OneForm a(space.grid);
  for (size_t i = 0; i < coords.size(); ++i) {
    OneForm scaled = space.basis[i];
    scaled *= coords[i];
    a += scaled;
  }
  return a;
}

// Per-mode pseudo-inverse of the base Laplacian on two-forms; kernel modes
// map to zero.
inline TwoForm greens_operator(SpectralWorkspace& ws, const TwoForm& f, const FlatBase& base) {
  const BaseModes& bm = ws.modes(base.alpha, base.beta);
  const double thr = bm.default_kernel_threshold();
  SpectralSu2 s = ws.forward(f.f);
  detail::for_each_mode_scalar(ws.grid(), bm, s, [thr](double mx, double my, Complex& z) {
    const double e = mx * mx + my * my;
    z = (e <= thr) ? Complex{0.0, 0.0} : z / e;
  });
  TwoForm out(ws.grid());
  out.f = ws.inverse(s);
  return out;
}

// kappa(a) = a + (1/2) d_Gamma^* G_Gamma [a, a], with [a, a] the two-form
// with coefficient 2 [a_x, a_y].
inline OneForm kuranishi_map(SpectralWorkspace& ws, const OneForm& a, const FlatBase& base) {
  TwoForm w(a.grid());
  w.f = bracket(a.x, a.y);
  w.f *= 2.0;
  const TwoForm gw = greens_operator(ws, w, base);
  const Connection gamma(base, a.grid());
  OneForm corr = codifferential(ws, gamma, gw);
  corr *= 0.5;
  return a + corr;
}

struct KuranishiSolution {
  std::vector<double> a_par;
  OneForm a_perp;
  double residual = 0.0;
  int iterations = 0;
};

namespace detail {

// Zero the low-mode part (eig < cutoff) of a spectral one-form in place;
// optionally apply the inverse Laplacian on the remaining modes.
inline void mask_and_invert(const Grid& g, const BaseModes& bm, SpectralOneForm& s, double cutoff,
                            bool invert) {
  for_each_mode(g, bm, s, [cutoff, invert](double mx, double my, Complex& bx, Complex& by) {
    const double e = mx * mx + my * my;
    if (e < cutoff) {
      bx = Complex{0.0, 0.0};
      by = Complex{0.0, 0.0};
    } else if (invert) {
      bx /= e;
      by /= e;
    }
  });
}

}  // namespace detail

// Solve the high-mode equation Pi_perp d_A^* F_A = 0 for a_perp at fixed
// low-mode data, by Picard iteration preconditioned with the exact
// high-mode inverse of the base Laplacian.
inline KuranishiSolution solve_kuranishi(SpectralWorkspace& ws, const std::vector<double>& a_par,
                                         const LowModeSpace& space, double tol,
                                         int max_iterations = 60) {
  const Grid& g = ws.grid();
  const BaseModes& bm = ws.modes(space.base.alpha, space.base.beta);
  KuranishiSolution sol;
  sol.a_par = a_par;
  sol.a_perp = OneForm(g);
  const OneForm par = from_coords(a_par, space);

  double initial = -1.0;
  for (int it = 0; it <= max_iterations; ++it) {
    Connection A(space.base, par + sol.a_perp);
    SliceGradient sg = slice_gradient(ws, A);
    SpectralOneForm up = sg.g_hat;
    detail::mask_and_invert(g, bm, up, space.cutoff, /*invert=*/false);
    sol.residual = spectral_l2_norm(up);
    sol.iterations = it;
    if (initial < 0.0) initial = sol.residual;
    if (sol.residual <= tol) return sol;
    if (it == max_iterations || sol.residual > 10.0 * initial + tol)
      fail(ErrorCode::NoConvergence,
           "kuranishi residual " + std::to_string(sol.residual) + " after " + std::to_string(it) +
               " iterations");
    detail::mask_and_invert(g, bm, up, space.cutoff, /*invert=*/true);
    sol.a_perp -= ws.inverse(up);
  }
  return sol;
}

struct BalancingResult {
  std::vector<double> chi;
  KuranishiSolution solution;
};

// Low-mode coordinates of d_A^* F_A at the Kuranishi solution.
inline BalancingResult balancing(SpectralWorkspace& ws, const std::vector<double>& a_par,
                                 const LowModeSpace& space, double tol = 1e-12) {
  BalancingResult out;
  out.solution = solve_kuranishi(ws, a_par, space, tol);
  const OneForm a = from_coords(a_par, space) + out.solution.a_perp;
  const Connection A(space.base, a);
  const OneForm grad = gradient_slice(ws, A);
  out.chi.reserve(space.basis.size());
  for (const OneForm& e : space.basis) out.chi.push_back(l2_inner(grad, e));
  return out;
}

}  // namespace ym
