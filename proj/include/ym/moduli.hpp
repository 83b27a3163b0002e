#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "ym/fitting.hpp"
#include "ym/gauge_field.hpp"
#include "ym/optim.hpp"
#include "ym/spectral.hpp"
#include "ym/su2.hpp"

namespace ym {

// Holonomies around the two generator loops, with conjugacy data averaged
// over rows/columns.  The commutator norm vanishes iff the pair commutes,
// which holds up to O(h^2) for near-flat connections.
struct HolonomyPair {
  GroupElement h_mu;     // x-generator loop through the base point
  GroupElement h_gamma;  // y-generator loop through the base point
  double mean_cos_mu = 1.0;
  double mean_cos_gamma = 1.0;
  double commutator_norm = 0.0;
};

inline HolonomyPair holonomy(const Connection& A) {
  const Grid& g = A.grid();
  const double h = g.h();
  const Su2Field cx = A.total_x();
  const Su2Field cy = A.total_y();

  // Ordered with increasing coordinate to the right: under the gauge action
  // c -> s^{-1} c s + s^{-1} ds this transport conjugates by the base-point
  // value, so eigenphases are gauge invariant.
  auto row_product = [&](int iy) {
    GroupElement q = GroupElement::identity();
    for (int ix = 0; ix < g.n; ++ix) q = q * exponential(h * cx.at(g.index(ix, iy)));
    return q;
  };
  auto col_product = [&](int ix) {
    GroupElement q = GroupElement::identity();
    for (int iy = 0; iy < g.n; ++iy) q = q * exponential(h * cy.at(g.index(ix, iy)));
    return q;
  };

  HolonomyPair out;
  out.h_mu = row_product(0);
  out.h_gamma = col_product(0);

  double cm = 0.0, cg = 0.0;
  for (int i = 0; i < g.n; ++i) {
    cm += row_product(i).w;
    cg += col_product(i).w;
  }
  out.mean_cos_mu = cm / g.n;
  out.mean_cos_gamma = cg / g.n;

  const GroupElement comm =
      out.h_mu * out.h_gamma * inverse(out.h_mu) * inverse(out.h_gamma);
  out.commutator_norm = group_dist(comm, GroupElement::identity());
  return out;
}

// Point of the pillowcase R^2 / (2 pi Z^2 semidirect Z/2), stored in the
// fundamental domain [0, pi] x [0, 2 pi).
struct PillowcasePoint {
  double alpha = 0.0, beta = 0.0;
};

inline PillowcasePoint reduce(PillowcasePoint p) {
  auto wrap = [](double v) {
    v = std::fmod(v, kTwoPi);
    if (v < 0.0) v += kTwoPi;
    if (v == kTwoPi) v = 0.0;
    return v;
  };
  double a = wrap(p.alpha);
  double b = wrap(p.beta);
  if (a > kPi) {
    a = kTwoPi - a;
    b = wrap(kTwoPi - b);
  }
  if (a == 0.0 || a == kPi) b = std::min(b, wrap(kTwoPi - b));
  return {a, b};
}

inline double pillowcase_dist(const PillowcasePoint& p, const PillowcasePoint& q) {
  const PillowcasePoint a = reduce(p);
  const PillowcasePoint c = reduce(q);
  double best = std::numeric_limits<double>::infinity();
  for (int sign = -1; sign <= 1; sign += 2)
    for (int m = -1; m <= 1; ++m)
      for (int n = -1; n <= 1; ++n) {
        const double da = a.alpha - (sign * c.alpha + kTwoPi * m);
        const double db = a.beta - (sign * c.beta + kTwoPi * n);
        best = std::min(best, std::hypot(da, db));
      }
  return best;
}

// Simultaneous-diagonalization eigenphases of a commuting holonomy pair,
// reduced to the fundamental domain.
inline PillowcasePoint to_pillowcase(const HolonomyPair& rho, double tol) {
  if (rho.commutator_norm > tol)
    fail(ErrorCode::NonCommuting,
         "holonomy commutator norm " + std::to_string(rho.commutator_norm));

  auto clamp1 = [](double v) { return std::max(-1.0, std::min(1.0, v)); };
  const double a = std::acos(clamp1(rho.mean_cos_mu));
  double b = std::acos(clamp1(rho.mean_cos_gamma));

  // Relative orientation of the two rotation axes fixes the sign of beta;
  // for central elements the sign is immaterial under the quotient.
  const AlgebraElement v1 = rho.h_mu.vector_part();
  const AlgebraElement v2 = rho.h_gamma.vector_part();
  if (norm(v1) > 1e-9 && norm(v2) > 1e-9 && inner(v1, v2) < 0.0) b = -b;
  return reduce({a, b});
}

enum class Stratum { Central, Abelian, Irreducible };

inline int zariski_dim(Stratum s) {
  switch (s) {
    case Stratum::Central: return 6;
    case Stratum::Abelian: return 2;
    case Stratum::Irreducible: return 0;  // empty stratum over the torus
  }
  return 0;
}

inline Stratum classify(const PillowcasePoint& p, double tol = 1e-8) {
  const PillowcasePoint r = reduce(p);
  auto central_phase = [tol](double v) {
    return std::abs(v) <= tol || std::abs(v - kPi) <= tol || std::abs(v - kTwoPi) <= tol;
  };
  if (central_phase(r.alpha) && central_phase(r.beta)) return Stratum::Central;
  return Stratum::Abelian;
}

// ---------------------------------------------------------------------------
// Distance to the flat moduli: holonomy-seeded local minimization of the
// gauge-fixed L^2 distance over the flat family Gamma(alpha, beta).

struct NearestFlatResult {
  PillowcasePoint point;   // reduced representative
  FlatBase gamma;          // chart representative actually minimized over
  double dist_l2 = 0.0;
  Connection rep;          // gauge-fixed connection relative to gamma
  GaugeTransform u;
  int evaluations = 0;
};

struct NearestFlatOptions {
  double gauge_tol = 1e-11;
  int nm_iterations = 160;
  double nm_tol = 1e-9;
  double seed_simplex = 0.05;
  double holonomy_tol = 0.5;  // loose guard; the refinement fixes accuracy
};

inline NearestFlatResult nearest_flat(SpectralWorkspace& ws, const Connection& A,
                                      const NearestFlatOptions& opt = {}) {
  const HolonomyPair rho = holonomy(A);
  const PillowcasePoint seed_red = to_pillowcase(rho, opt.holonomy_tol);

  // Chart image of the seed closest to the stored base, so the local
  // minimization runs in the right fundamental-domain copy.
  double sa = seed_red.alpha, sb = seed_red.beta;
  double best = std::numeric_limits<double>::infinity();
  for (int sign = -1; sign <= 1; sign += 2)
    for (int m = -2; m <= 2; ++m)
      for (int n = -2; n <= 2; ++n) {
        const double ca = sign * seed_red.alpha + kTwoPi * m;
        const double cb = sign * seed_red.beta + kTwoPi * n;
        const double d = std::hypot(ca - A.base.alpha, cb - A.base.beta);
        if (d < best) {
          best = d;
          sa = ca;
          sb = cb;
        }
      }

  int evals = 0;
  int failures = 0;
  auto objective = [&](const std::vector<double>& p) {
    ++evals;
    try {
      const GaugeFixResult fx = coulomb_gauge_fix(ws, A, FlatBase(p[0], p[1]), opt.gauge_tol);
      return l2_norm(fx.fixed.a);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::NoConvergence) throw;
      ++failures;
      return 1e6;
    }
  };

  const NelderMeadResult nm =
      nelder_mead(objective, {sa, sb}, opt.seed_simplex, opt.nm_iterations, opt.nm_tol);
  if (nm.value >= 1e6)
    fail(ErrorCode::NoConvergence, "gauge fixing failed on the whole search simplex");

  NearestFlatResult out;
  out.gamma = FlatBase(nm.x[0], nm.x[1]);
  const GaugeFixResult fx = coulomb_gauge_fix(ws, A, out.gamma, opt.gauge_tol);
  out.rep = fx.fixed;
  out.u = fx.u;
  out.dist_l2 = l2_norm(fx.fixed.a);
  out.point = reduce({nm.x[0], nm.x[1]});
  out.evaluations = evals;
  return out;
}

// ---------------------------------------------------------------------------
// Log-log scan of gauge-fixed distance against curvature norm along a
// parameterized ray of connections.

struct LambdaScanSample {
  double t = 0.0;
  double curvature_norm = 0.0;
  double distance = 0.0;
  double alpha = 0.0, beta = 0.0;
};

struct LambdaScanResult {
  double lambda = 0.0;
  double C = 0.0;
  double r2 = 0.0;
  std::vector<LambdaScanSample> samples;
};

inline LambdaScanResult lambda_scan(SpectralWorkspace& ws,
                                    const std::function<Connection(double)>& ray,
                                    const std::vector<double>& t_grid, double p,
                                    const NearestFlatOptions& opt = {}) {
  LambdaScanResult out;
  out.samples.reserve(t_grid.size());
  for (double t : t_grid) {
    const Connection A = ray(t);
    LambdaScanSample s;
    s.t = t;
    s.curvature_norm = lp_norm(curvature(ws, A), p);
    const NearestFlatResult nf = nearest_flat(ws, A, opt);
    s.distance = sobolev_norm(ws, nf.rep.a, p, 1);
    s.alpha = nf.point.alpha;
    s.beta = nf.point.beta;
    out.samples.push_back(s);
  }

  bool degenerate = true;
  for (const auto& s : out.samples)
    if (s.distance >= 1e-12) degenerate = false;
  if (degenerate) fail(ErrorCode::DegenerateRay, "all distances below 1e-12");

  std::vector<double> lx, ly;
  for (const auto& s : out.samples) {
    if (s.distance > 0.0 && s.curvature_norm > 0.0) {
      lx.push_back(std::log(s.curvature_norm));
      ly.push_back(std::log(s.distance));
    }
  }
  const LineFit f = linear_fit(lx, ly);
  out.lambda = f.slope;
  out.C = std::exp(f.intercept);
  out.r2 = f.r2;
  return out;
}

}  // namespace ym
