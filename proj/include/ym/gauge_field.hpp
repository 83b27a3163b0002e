#pragma once

#include <algorithm>
#include <cmath>
#include <tuple>
#include <vector>

#include "ym/common.hpp"
#include "ym/grid.hpp"
#include "ym/spectral.hpp"
#include "ym/su2.hpp"

namespace ym {

// Flat diagonal connection Gamma(alpha, beta) = alpha K dx + beta K dy.
// Its curvature vanishes identically: constant commuting components.
struct FlatBase {
  double alpha = 0.0, beta = 0.0;

  FlatBase() = default;
  FlatBase(double a, double b) : alpha(a), beta(b) {}
};

// Connection stored as flat base plus perturbation one-form, so a = A - Gamma
// is representation-exact.
struct Connection {
  FlatBase base;
  OneForm a;

  Connection() = default;
  Connection(FlatBase b, OneForm pert) : base(b), a(std::move(pert)) {}
  explicit Connection(FlatBase b, Grid g) : base(b), a(g) {}

  const Grid& grid() const { return a.grid(); }

  Su2Field total_x() const {
    Su2Field c = a.x;
    double* kp = c.plane(2);
    for (int i = 0; i < c.sites(); ++i) kp[i] += base.alpha;
    return c;
  }
  Su2Field total_y() const {
    Su2Field c = a.y;
    double* kp = c.plane(2);
    for (int i = 0; i < c.sites(); ++i) kp[i] += base.beta;
    return c;
  }

  bool perturbation_is_zero() const {
    for (double v : a.x.raw())
      if (v != 0.0) return false;
    for (double v : a.y.raw())
      if (v != 0.0) return false;
    return true;
  }
};

// Rebase: express the same total connection relative to another flat base.
inline Connection rebase(const Connection& A, const FlatBase& nb) {
  Connection r(nb, A.grid());
  r.a = A.a;
  double* kx = r.a.x.plane(2);
  double* ky = r.a.y.plane(2);
  const double dx = A.base.alpha - nb.alpha;
  const double dy = A.base.beta - nb.beta;
  for (int i = 0; i < r.a.x.sites(); ++i) {
    kx[i] += dx;
    ky[i] += dy;
  }
  return r;
}

// F = d_x c_y - d_y c_x + [c_x, c_y].  This is the convention under which
// curvature(A + b) - curvature(A) = d_A b + [b_x, b_y] dx^dy holds exactly
// and |F| is gauge invariant.
inline TwoForm curvature(SpectralWorkspace& ws, const Connection& A) {
  TwoForm F(A.grid());
  if (A.perturbation_is_zero()) return F;
  const Su2Field cx = A.total_x();
  const Su2Field cy = A.total_y();
  F.f = ws.spectral_derivative(cy, Axis::X);
  F.f -= ws.spectral_derivative(cx, Axis::Y);
  F.f += bracket(cx, cy);
  return F;
}

// YM(A) = (1/2) \int |F_A|^2.
inline double energy(SpectralWorkspace& ws, const Connection& A) {
  const TwoForm F = curvature(ws, A);
  return 0.5 * l2_inner(F, F);
}

inline double energy_of(const TwoForm& F) { return 0.5 * l2_inner(F, F); }

// d_A phi = (d_x phi + [c_x, phi]) dx + (d_y phi + [c_y, phi]) dy.
inline OneForm covariant_d(SpectralWorkspace& ws, const Connection& A, const Su2Field& phi) {
  OneForm r(A.grid());
  r.x = ws.spectral_derivative(phi, Axis::X) + bracket(A.total_x(), phi);
  r.y = ws.spectral_derivative(phi, Axis::Y) + bracket(A.total_y(), phi);
  return r;
}

// (d_A b)_{xy} = d_x b_y - d_y b_x + [c_x, b_y] - [c_y, b_x].
inline TwoForm covariant_d1(SpectralWorkspace& ws, const Connection& A, const OneForm& b) {
  TwoForm r(A.grid());
  r.f = ws.spectral_derivative(b.y, Axis::X);
  r.f -= ws.spectral_derivative(b.x, Axis::Y);
  r.f += bracket(A.total_x(), b.y);
  r.f -= bracket(A.total_y(), b.x);
  return r;
}

// Exact L^2 adjoint of covariant_d1: (d_A* F)_x = d_y f + [c_y, f],
// (d_A* F)_y = -d_x f - [c_x, f].
inline OneForm codifferential(SpectralWorkspace& ws, const Connection& A, const TwoForm& F) {
  OneForm r(A.grid());
  r.x = ws.spectral_derivative(F.f, Axis::Y) + bracket(A.total_y(), F.f);
  r.y = ws.spectral_derivative(F.f, Axis::X);
  r.y *= -1.0;
  r.y -= bracket(A.total_x(), F.f);
  return r;
}

// Exact L^2 adjoint of covariant_d:
// d_A* b = -d_x b_x - d_y b_y - [c_x, b_x] - [c_y, b_y].
inline Su2Field codifferential0(SpectralWorkspace& ws, const Connection& A, const OneForm& b) {
  Su2Field r = ws.spectral_derivative(b.x, Axis::X);
  r += ws.spectral_derivative(b.y, Axis::Y);
  r += bracket(A.total_x(), b.x);
  r += bracket(A.total_y(), b.y);
  r *= -1.0;
  return r;
}

// ---------------------------------------------------------------------------
// Per-mode operators in the ad(K) eigenbasis. For the flat base the covariant
// derivative acts mode-by-mode as multiplication by i*m with the shifted
// wavenumbers m of BaseModes, so slice projection, Green's operators, and the
// flow's linear factor are all exact per mode.

namespace detail {

// The discrete model space is the dealiased band excluding the Nyquist
// lines; all per-mode operator passes zero that content, so pointwise
// products cannot feed unresolved modes back into the linear algebra.

template <typename PerMode>
void for_each_mode(const Grid& g, const BaseModes& bm, SpectralOneForm& s, PerMode&& op) {
  const int n = g.n;
  const int nyq = n / 2;
  for (int iy = 0; iy < n; ++iy) {
    for (int ix = 0; ix < n; ++ix) {
      const int idx = iy * n + ix;
      if (ix == nyq || iy == nyq) {
        for (int c = 0; c < 3; ++c) {
          s.x.plane(c)[idx] = Complex{0.0, 0.0};
          s.y.plane(c)[idx] = Complex{0.0, 0.0};
        }
        continue;
      }
      Complex bx[3], by[3];
      split_adk(s.x.plane(0)[idx], s.x.plane(1)[idx], s.x.plane(2)[idx], bx[0], bx[1], bx[2]);
      split_adk(s.y.plane(0)[idx], s.y.plane(1)[idx], s.y.plane(2)[idx], by[0], by[1], by[2]);
      for (int c = 0; c < 3; ++c) {
        op(bm.mx[c][ix], bm.my[c][iy], bx[c], by[c]);
      }
      merge_adk(bx[0], bx[1], bx[2], s.x.plane(0)[idx], s.x.plane(1)[idx], s.x.plane(2)[idx]);
      merge_adk(by[0], by[1], by[2], s.y.plane(0)[idx], s.y.plane(1)[idx], s.y.plane(2)[idx]);
    }
  }
}

template <typename PerMode>
void for_each_mode_scalar(const Grid& g, const BaseModes& bm, SpectralSu2& s, PerMode&& op) {
  const int n = g.n;
  const int nyq = n / 2;
  for (int iy = 0; iy < n; ++iy) {
    for (int ix = 0; ix < n; ++ix) {
      const int idx = iy * n + ix;
      if (ix == nyq || iy == nyq) {
        for (int c = 0; c < 3; ++c) s.plane(c)[idx] = Complex{0.0, 0.0};
        continue;
      }
      Complex z[3];
      split_adk(s.plane(0)[idx], s.plane(1)[idx], s.plane(2)[idx], z[0], z[1], z[2]);
      for (int c = 0; c < 3; ++c) op(bm.mx[c][ix], bm.my[c][iy], z[c]);
      merge_adk(z[0], z[1], z[2], s.plane(0)[idx], s.plane(1)[idx], s.plane(2)[idx]);
    }
  }
}

inline void project_modes(const Grid& g, const BaseModes& bm, SpectralOneForm& s, double thr) {
  for_each_mode(g, bm, s, [thr](double mx, double my, Complex& bx, Complex& by) {
    const double e = mx * mx + my * my;
    if (e <= thr) return;  // harmonic mode: already in the slice
    const Complex dot = (mx * bx + my * by) / e;
    bx -= mx * dot;
    by -= my * dot;
  });
}

}  // namespace detail

// L^2-orthogonal projection onto the slice {b : d_Gamma* b = 0}, computed
// per Fourier mode in the ad(K) eigenbasis.  Modes whose Laplace eigenvalue
// falls below the kernel threshold are treated as kernel (pseudo-inverse).
inline OneForm coulomb_project(SpectralWorkspace& ws, const OneForm& b, const FlatBase& base,
                               double kernel_threshold = -1.0) {
  const BaseModes& bm = ws.modes(base.alpha, base.beta);
  const double thr = kernel_threshold >= 0.0 ? kernel_threshold : bm.default_kernel_threshold();
  SpectralOneForm s = ws.forward(b);
  detail::project_modes(b.grid(), bm, s, thr);
  return ws.inverse(s);
}

// Gradient of the energy restricted to the Coulomb-gauge slice through the
// connection's flat base: Pi_Gamma d_A* F_A.  The fused form also reports the
// spectral image, curvature, energy, and gradient norm, which the flow reuses.
struct SliceGradient {
  OneForm g;
  SpectralOneForm g_hat;
  TwoForm F;
  double energy = 0.0;
  double g_l2 = 0.0;
};

// Fused pipeline; pass the spectral image of the perturbation when already
// available to skip one forward transform.
inline SliceGradient slice_gradient(SpectralWorkspace& ws, const Connection& A,
                                    const SpectralOneForm* a_hat = nullptr,
                                    double kernel_threshold = -1.0) {
  SliceGradient out;
  const Grid& g = A.grid();
  if (A.perturbation_is_zero()) {
    out.g = OneForm(g);
    out.g_hat = SpectralOneForm(g);
    out.F = TwoForm(g);
    return out;
  }

  SpectralOneForm ah = a_hat ? *a_hat : ws.forward(A.a);
  // Constant base components drop under differentiation, so the curvature
  // derivatives only see the perturbation.
  ws.derivative_inplace(ah.y, Axis::X);
  ws.derivative_inplace(ah.x, Axis::Y);
  const Su2Field cx = A.total_x();
  const Su2Field cy = A.total_y();
  out.F = TwoForm(g);
  out.F.f = ws.inverse(ah.y);        // d_x c_y
  out.F.f -= ws.inverse(ah.x);       // - d_y c_x
  out.F.f += bracket(cx, cy);
  out.energy = energy_of(out.F);

  SpectralSu2 fh = ws.forward(out.F.f);
  SpectralSu2 fx = fh;
  ws.derivative_inplace(fx, Axis::X);
  ws.derivative_inplace(fh, Axis::Y);
  OneForm dstar(g);
  dstar.x = ws.inverse(fh) + bracket(cy, out.F.f);
  dstar.y = ws.inverse(fx);
  dstar.y *= -1.0;
  dstar.y -= bracket(cx, out.F.f);

  const BaseModes& bm = ws.modes(A.base.alpha, A.base.beta);
  const double thr = kernel_threshold >= 0.0 ? kernel_threshold : bm.default_kernel_threshold();
  out.g_hat = ws.forward(dstar);
  detail::project_modes(g, bm, out.g_hat, thr);
  out.g = ws.inverse(out.g_hat);
  out.g_l2 = spectral_l2_norm(out.g_hat);
  return out;
}

inline OneForm gradient_slice(SpectralWorkspace& ws, const Connection& A) {
  return slice_gradient(ws, A).g;
}

// ---------------------------------------------------------------------------
// Gauge action: components map to s^{-1} c s + s^{-1} d s, with the spectral
// derivative of the per-site group interpolant, re-expressed over the same
// flat base.

inline Connection gauge_apply(SpectralWorkspace& ws, const GaugeTransform& u, const Connection& A) {
  const Grid& g = A.grid();
  if (g != u.grid()) fail(ErrorCode::BadArgument, "gauge transform grid mismatch");

  // Derivatives of the four quaternion planes along both axes.
  std::vector<double> ds[2];
  for (int ax = 0; ax < 2; ++ax) {
    ds[ax].assign(4 * g.sites(), 0.0);
    for (int c = 0; c < 4; ++c) {
      ws.derivative_plane(u.plane(c), ds[ax].data() + c * g.sites(),
                          ax == 0 ? Axis::X : Axis::Y);
    }
  }

  const Su2Field cx = A.total_x();
  const Su2Field cy = A.total_y();
  Connection out(A.base, g);
  for (int i = 0; i < g.sites(); ++i) {
    const GroupElement s = u.at(i);
    const GroupElement sinv = s.conjugate();
    const GroupElement dsx{ds[0][0 * g.sites() + i], ds[0][1 * g.sites() + i],
                           ds[0][2 * g.sites() + i], ds[0][3 * g.sites() + i]};
    const GroupElement dsy{ds[1][0 * g.sites() + i], ds[1][1 * g.sites() + i],
                           ds[1][2 * g.sites() + i], ds[1][3 * g.sites() + i]};
    // s^{-1} ds lies in su(2) up to spectral error; keep the vector part.
    const AlgebraElement mx = mul_raw(sinv, dsx).vector_part();
    const AlgebraElement my = mul_raw(sinv, dsy).vector_part();
    AlgebraElement nx = adjoint(sinv, cx.at(i)) + mx;
    AlgebraElement ny = adjoint(sinv, cy.at(i)) + my;
    nx -= AlgebraElement{0.0, 0.0, A.base.alpha};
    ny -= AlgebraElement{0.0, 0.0, A.base.beta};
    out.a.x.set(i, nx);
    out.a.y.set(i, ny);
  }
  // Keep the result in the dealiased band the operator calculus works in.
  out.a.x = ws.band_filter(out.a.x);
  out.a.y = ws.band_filter(out.a.y);
  return out;
}

// ---------------------------------------------------------------------------
// Coulomb gauge fixing by Newton iteration on u = exp(chi) with the per-mode
// factorized linearization d_Gamma* d_Gamma, damped by a residual line search.

struct GaugeFixResult {
  GaugeTransform u;
  Connection fixed;
  double residual = 0.0;
  int iterations = 0;
};

inline GaugeFixResult coulomb_gauge_fix(SpectralWorkspace& ws, const Connection& A,
                                        const FlatBase& base, double tol,
                                        int max_iterations = 60) {
  const Grid& g = A.grid();
  const Connection gamma(base, g);
  const BaseModes& bm = ws.modes(base.alpha, base.beta);
  const double thr = bm.default_kernel_threshold();

  Connection cur = rebase(A, base);
  GaugeFixResult res{GaugeTransform(g), cur};

  auto slice_residual = [&](const Connection& c) {
    return codifferential0(ws, gamma, c.a);
  };

  Su2Field rho = slice_residual(cur);
  double rn = l2_norm(rho);
  int it = 0;
  while (rn > tol) {
    if (++it > max_iterations)
      fail(ErrorCode::NoConvergence, "coulomb_gauge_fix: residual " + std::to_string(rn));

    // chi solves d_Gamma* d_Gamma chi = -rho, with kernel modes dropped
    // so chi is orthogonal to Ker d_Gamma.
    SpectralSu2 srho = ws.forward(rho);
    detail::for_each_mode_scalar(g, bm, srho, [thr](double mx, double my, Complex& z) {
      const double e = mx * mx + my * my;
      z = (e <= thr) ? Complex{0.0, 0.0} : -z / e;
    });
    const Su2Field chi = ws.inverse(srho);

    double tau = 1.0;
    bool accepted = false;
    while (tau >= 1.0 / 64.0) {
      Su2Field step = chi;
      step *= tau;
      Connection cand = gauge_apply(ws, exponential(step), cur);
      Su2Field rho_new = slice_residual(cand);
      const double rn_new = l2_norm(rho_new);
      if (rn_new < (1.0 - 0.25 * tau) * rn || rn_new <= tol) {
        res.u.compose_right(exponential(step));
        cur = std::move(cand);
        rho = std::move(rho_new);
        rn = rn_new;
        accepted = true;
        break;
      }
      tau *= 0.5;
    }
    if (!accepted)
      fail(ErrorCode::NoConvergence, "coulomb_gauge_fix: line search stalled at residual " +
                                         std::to_string(rn));
  }

  res.fixed = cur;
  res.residual = rn;
  res.iterations = it;
  return res;
}

// ---------------------------------------------------------------------------
// Slice-projected Hessian. The pairing contract is
//   <H b, c> = <d_A b, d_A c> + <F_A, [b, c]>   for slice directions c,
// which matches the derivative of the slice gradient along b.

inline OneForm hessian_apply(SpectralWorkspace& ws, const Connection& A, const OneForm& b) {
  const TwoForm F = curvature(ws, A);
  const TwoForm db = covariant_d1(ws, A, b);
  OneForm h = codifferential(ws, A, db);
  h.x += bracket(b.y, F.f);
  h.y -= bracket(b.x, F.f);
  return coulomb_project(ws, h, A.base);
}

// ---------------------------------------------------------------------------
// Harmonic cohomology dimensions of (d_Gamma + d_Gamma*) on 0-, 1-, 2-forms,
// counted from the per-mode eigenvalues below the kernel threshold.

struct CohomologyDims {
  int h0 = 0, h1 = 0, h2 = 0;
};

inline CohomologyDims cohomology_dims(SpectralWorkspace& ws, const FlatBase& base,
                                      double kernel_threshold = -1.0) {
  const BaseModes& bm = ws.modes(base.alpha, base.beta);
  const double thr = kernel_threshold >= 0.0 ? kernel_threshold : bm.default_kernel_threshold();
  const int n = ws.grid().n;

  int zero_modes = 0;
  for (int s = 0; s < 3; ++s) {
    for (int ix = 0; ix < n; ++ix) {
      for (int iy = 0; iy < n; ++iy) {
        const double e = bm.eig(s, ix, iy);
        if (e > thr / 10.0 && e < thr * 10.0)
          fail(ErrorCode::AmbiguousKernel,
               "eigenvalue " + std::to_string(e) + " within a factor 10 of threshold " +
                   std::to_string(thr));
        if (e <= thr) ++zero_modes;
      }
    }
  }
  // On the flat torus the Hodge Laplacian acts mode-diagonally with the same
  // eigenvalue on 0-forms, both 1-form components, and 2-forms.
  return {zero_modes, 2 * zero_modes, zero_modes};
}

// ---------------------------------------------------------------------------
// Laplacian eigenvalue table helpers shared by the flow and the reduction.

inline double max_laplace_eigenvalue(SpectralWorkspace& ws, const FlatBase& base) {
  return ws.modes(base.alpha, base.beta).max_eig;
}

// Smallest eigenvalue above the kernel threshold on slice one-forms.
inline double first_nonzero_eigenvalue(SpectralWorkspace& ws, const FlatBase& base,
                                       double kernel_threshold = -1.0) {
  const BaseModes& bm = ws.modes(base.alpha, base.beta);
  const double thr = kernel_threshold >= 0.0 ? kernel_threshold : bm.default_kernel_threshold();
  const int n = ws.grid().n;
  double best = bm.max_eig;
  for (int s = 0; s < 3; ++s)
    for (int ix = 0; ix < n; ++ix)
      for (int iy = 0; iy < n; ++iy) {
        const double e = bm.eig(s, ix, iy);
        if (e > thr) best = std::min(best, e);
      }
  return best;
}

}  // namespace ym
