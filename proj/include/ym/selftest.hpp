#pragma once

#include <cmath>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "ym/flow.hpp"
#include "ym/kuranishi.hpp"
#include "ym/lojasiewicz.hpp"
#include "ym/moduli.hpp"
#include "ym/random_fields.hpp"

namespace ym {

// Condensed invariant suites runnable from the command line; each check is
// a named predicate so failures are reportable without a test framework.
struct SuiteResult {
  std::string name;
  int passed = 0;
  int failed = 0;
  std::vector<std::string> failures;

  explicit SuiteResult(std::string n) : name(std::move(n)) {}

  void check(bool ok, const std::string& what) {
    if (ok) {
      ++passed;
    } else {
      ++failed;
      failures.push_back(what);
    }
  }
};

namespace selftest {

inline AlgebraElement random_algebra(std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  return {g(rng), g(rng), g(rng)};
}

inline SuiteResult lie_suite() {
  SuiteResult s("lie");
  std::mt19937_64 rng(11);
  double worst_anti = 0.0, worst_jacobi = 0.0, worst_ad = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const AlgebraElement a = random_algebra(rng), b = random_algebra(rng),
                         c = random_algebra(rng);
    worst_anti = std::max(worst_anti, norm(bracket(a, b) + bracket(b, a)));
    const AlgebraElement jac =
        bracket(a, bracket(b, c)) + bracket(b, bracket(c, a)) + bracket(c, bracket(a, b));
    worst_jacobi = std::max(worst_jacobi, norm(jac) / (1.0 + norm(a) * norm(b) * norm(c)));
    worst_ad = std::max(worst_ad,
                        std::abs(inner(bracket(c, a), b) + inner(a, bracket(c, b))));
  }
  s.check(worst_anti < 1e-12, "bracket antisymmetry");
  s.check(worst_jacobi < 1e-12, "Jacobi identity");
  s.check(worst_ad < 1e-11, "Ad-invariance of the inner product");
  s.check(norm(bracket(kBasisI, kBasisJ) - 2.0 * kBasisK) == 0.0, "[I,J] = 2K");

  double worst_inv = 0.0, worst_expinv = 0.0;
  for (int i = 0; i < 200; ++i) {
    const AlgebraElement v = random_algebra(rng);
    const GroupElement g1 = exponential(v);
    worst_expinv = std::max(worst_expinv, group_dist(g1 * exponential(-v), GroupElement::identity()));
    const AlgebraElement w = random_algebra(rng);
    worst_inv = std::max(worst_inv,
                         std::abs(inner(adjoint(g1, v), adjoint(g1, w)) - inner(v, w)));
  }
  s.check(worst_expinv < 1e-12, "exp(v) exp(-v) = 1");
  s.check(worst_inv < 1e-12, "adjoint preserves the inner product");
  return s;
}

inline SuiteResult lattice_suite() {
  SuiteResult s("lattice");
  for (int n : {8, 16}) {
    Grid g(n);
    SpectralWorkspace ws(g);
    const Su2Field f = random_scalar_field(g, 101 + n, {2, 2.0});
    const Su2Field h = random_scalar_field(g, 202 + n, {2, 2.0});
    // Transform round trip.
    const Su2Field back = ws.inverse(ws.forward(f));
    double rt = 0.0;
    for (size_t i = 0; i < f.raw().size(); ++i)
      rt = std::max(rt, std::abs(f.raw()[i] - back.raw()[i]));
    s.check(rt < 1e-12, "transform round trip N=" + std::to_string(n));
    // Skew-adjointness of the derivative.
    const double skew = l2_inner(ws.spectral_derivative(f, Axis::X), h) +
                        l2_inner(f, ws.spectral_derivative(h, Axis::X));
    s.check(std::abs(skew) < 1e-10, "derivative skew-adjointness N=" + std::to_string(n));
    // Parseval.
    s.check(std::abs(l2_norm(f) - spectral_l2_norm(ws.forward(f))) < 1e-10 * l2_norm(f),
            "Parseval N=" + std::to_string(n));
  }
  return s;
}

inline SuiteResult gaugefield_suite() {
  SuiteResult s("gaugefield");
  Grid g(16);
  SpectralWorkspace ws(g);
  const FlatBase base(0.9, 0.4);
  const Connection A = random_slice_connection(ws, base, 5, 0.08);
  const Connection gamma(base, g);

  // Adjointness of (covariant_d1, codifferential).
  const OneForm b = random_one_form(g, 6, {2, 2.0});
  TwoForm F(g);
  F.f = random_scalar_field(g, 7, {2, 2.0});
  const double lhs = l2_inner(covariant_d1(ws, A, b), F);
  const double rhs = l2_inner(b, codifferential(ws, A, F));
  s.check(std::abs(lhs - rhs) < 1e-10 * (1.0 + std::abs(lhs)), "adjointness d1/d*");

  const Su2Field phi = random_scalar_field(g, 8, {2, 2.0});
  const double lhs0 = l2_inner(covariant_d(ws, A, phi), b);
  const double rhs0 = l2_inner(phi, codifferential0(ws, A, b));
  s.check(std::abs(lhs0 - rhs0) < 1e-10 * (1.0 + std::abs(lhs0)), "adjointness d/d*0");

  // Projection idempotence and slice condition.
  const OneForm pb = coulomb_project(ws, b, base);
  s.check(l2_norm(coulomb_project(ws, pb, base) - pb) < 1e-10 * (1.0 + l2_norm(b)),
          "projection idempotence");
  s.check(l2_norm(codifferential0(ws, gamma, pb)) < 1e-10 * (1.0 + l2_norm(b)),
          "slice condition after projection");

  // Gauge invariance of the energy.
  const GaugeTransform u = random_gauge_transform(g, 9, 0.04, {1, 1.0});
  s.check(std::abs(energy(ws, gauge_apply(ws, u, A)) - energy(ws, A)) < 1e-10,
          "gauge invariance of the energy");

  // Hessian symmetry and flat-base identity.
  const OneForm c1 = coulomb_project(ws, random_one_form(g, 10, {2, 2.0}), base);
  const OneForm c2 = coulomb_project(ws, random_one_form(g, 11, {2, 2.0}), base);
  const double h12 = l2_inner(hessian_apply(ws, A, c1), c2);
  const double h21 = l2_inner(hessian_apply(ws, A, c2), c1);
  s.check(std::abs(h12 - h21) < 1e-10 * (1.0 + std::abs(h12)), "Hessian symmetry");
  const OneForm hflat = hessian_apply(ws, gamma, c1);
  const OneForm ref = coulomb_project(ws, codifferential(ws, gamma, covariant_d1(ws, gamma, c1)), base);
  s.check(l2_norm(hflat - ref) < 1e-10 * (1.0 + l2_norm(hflat)), "flat Hessian = Pi d*d");

  // Cohomology dimensions.
  const auto c0 = cohomology_dims(ws, FlatBase(0.0, 0.0));
  const auto ci = cohomology_dims(ws, FlatBase(kPi / 2, kPi / 2));
  s.check(c0.h0 == 3 && c0.h1 == 6 && c0.h2 == 3, "corner cohomology (3,6,3)");
  s.check(ci.h0 == 1 && ci.h1 == 2 && ci.h2 == 1, "interior cohomology (1,2,1)");
  return s;
}

inline SuiteResult flow_suite() {
  SuiteResult s("flow");
  Grid g(8);
  SpectralWorkspace ws(g);
  // Constant-mode oracle at t = 1.
  Connection A(FlatBase(0, 0), g);
  const double s0 = 0.1;
  A.a.x.fill({s0, 0, 0});
  A.a.y.fill({0, s0, 0});
  FlowConfig cfg;
  cfg.t_max = 1.0;
  cfg.grad_tol = 0.0;
  cfg.keep_states = false;
  cfg.record_stride = 1 << 20;
  const Trajectory tr = run(ws, A, cfg);
  const double exact = 1.0 / std::sqrt(1.0 / (s0 * s0) + 8.0);
  s.check(std::abs(tr.terminal.a.x.at(0).i - exact) < 1e-6 * exact, "constant-mode oracle t=1");
  s.check(tr.energy_equality_residual < 1e-6 * tr.energy_initial, "energy equality");

  // Flat initial data is a fixed point.
  const Trajectory fl = run(ws, Connection(FlatBase(1.0, 0.5), g), cfg);
  s.check(fl.converged && fl.samples.back().arclength <= 1e-12, "flat data fixed point");
  return s;
}

inline SuiteResult moduli_suite() {
  SuiteResult s("moduli");
  Grid g(8);
  // Exact holonomy of flat bases.
  const FlatBase base(0.7, 2.1);
  const HolonomyPair hp = holonomy(Connection(base, g));
  s.check(std::abs(group_angle(hp.h_mu) - 0.7) < 1e-12, "flat holonomy phase mu");
  s.check(std::abs(group_angle(hp.h_gamma) - 2.1) < 1e-12, "flat holonomy phase gamma");
  s.check(hp.commutator_norm < 1e-12, "flat holonomies commute");

  // Reduction idempotence and quotient identifications.
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> uni(-10.0, 10.0);
  bool idem = true, quot = true;
  for (int i = 0; i < 200; ++i) {
    const PillowcasePoint p{uni(rng), uni(rng)};
    const PillowcasePoint r = reduce(p);
    const PillowcasePoint rr = reduce(r);
    if (r.alpha != rr.alpha || r.beta != rr.beta) idem = false;
    if (pillowcase_dist(p, {-p.alpha, -p.beta}) > 1e-9) quot = false;
    if (pillowcase_dist(p, {p.alpha + kTwoPi, p.beta}) > 1e-9) quot = false;
  }
  s.check(idem, "reduce idempotence");
  s.check(quot, "quotient identifications");
  s.check(classify({0.0, 0.0}) == Stratum::Central, "corner classification");
  s.check(classify({kPi / 2, 1.0}) == Stratum::Abelian, "interior classification");
  return s;
}

inline SuiteResult kuranishi_suite() {
  SuiteResult s("kuranishi");
  Grid g(8);
  SpectralWorkspace ws(g);
  const FlatBase theta(0.0, 0.0);
  const LowModeSpace space = make_low_mode_space(ws, theta);
  s.check(space.dimension() == 6, "corner low-mode dimension 6");
  double worst = 0.0;
  for (size_t i = 0; i < space.basis.size(); ++i)
    for (size_t j = 0; j < space.basis.size(); ++j) {
      const double v = l2_inner(space.basis[i], space.basis[j]) - (i == j ? 1.0 : 0.0);
      worst = std::max(worst, std::abs(v));
    }
  s.check(worst < 1e-12, "basis orthonormal");

  // Green's operator inverts the Laplacian off the kernel: L G w equals w
  // with its constant (kernel) part removed.
  TwoForm w(g);
  w.f = random_scalar_field(g, 12, {2, 2.0});
  const Connection gamma(theta, g);
  const TwoForm gw = greens_operator(ws, w, theta);
  const TwoForm lgw = covariant_d1(ws, gamma, codifferential(ws, gamma, gw));
  AlgebraElement mean;
  for (int i = 0; i < g.sites(); ++i) mean += w.f.at(i);
  mean *= 1.0 / g.sites();
  TwoForm wk = w;
  for (int i = 0; i < g.sites(); ++i) wk.f.add(i, -1.0 * mean);
  s.check(l2_norm(lgw - wk) < 1e-9 * (1.0 + l2_norm(w)), "Green's operator inverts off kernel");

  // Balancing pairing identity on constants.
  std::mt19937_64 rng(77);
  double worst_pair = 0.0;
  for (int k = 0; k < 20; ++k) {
    AlgebraElement xi = random_algebra(rng), eta = random_algebra(rng);
    xi *= 0.05;
    eta *= 0.05;
    OneForm apar(g);
    apar.x.fill(xi);
    apar.y.fill(eta);
    const auto split = low_mode_projection(apar, space);
    const auto bal = balancing(ws, split.coords, space, 1e-13);
    double dotv = 0.0;
    for (size_t i = 0; i < bal.chi.size(); ++i) dotv += bal.chi[i] * split.coords[i];
    const AlgebraElement f = bracket(xi, eta);
    worst_pair = std::max(worst_pair, std::abs(dotv - 2.0 * inner(f, f)));
  }
  s.check(worst_pair < 1e-10, "balancing pairing identity");
  return s;
}

inline SuiteResult loja_suite() {
  SuiteResult s("lojasiewicz");
  using namespace loja;
  // Quadratic closed form.
  const TestFunction q = quadratic(2);
  const FlowTrajectory t1 = flow_ode(q, {0.7, -0.4}, 4.0, 0.0);
  const double ex = 0.7 * std::exp(-2.0 * 4.0);
  s.check(std::abs(t1.terminal[0] - ex) < 1e-8, "quadratic trajectory closed form");
  s.check(energy_identity_check(t1) < 1e-8 * q.value({0.7, -0.4}), "quadratic energy identity");

  // Quartic closed form.
  const TestFunction qu = quartic();
  const FlowTrajectory t2 = flow_ode(qu, {0.5}, 5.0, 0.0);
  const double ex2 = 1.0 / std::sqrt(1.0 / 0.25 + 8.0 * 5.0);
  s.check(std::abs(t2.terminal[0] - ex2) < 1e-8, "quartic trajectory closed form");

  // Distance-inequality exponents.
  const auto d1 = verify_distance_inequality(quadratic(2), 0.5, 300, 5);
  s.check(std::abs(d1.alpha - 2.0) < 0.02 && d1.violations == 0, "quadratic distance exponent");
  const auto d2 = verify_distance_inequality(quartic(), 0.5, 300, 6);
  s.check(std::abs(d2.alpha - 4.0) < 0.05, "quartic distance exponent");

  // Envelope values.
  s.check(std::abs(psi_envelope(0.5, 1.0, 1.0, 0.0) - 2.0) < 1e-14, "envelope exp branch at 0");
  s.check(std::abs(psi_envelope(0.75, 1.0, 1.0, 0.0) - 4.0) < 1e-14, "envelope power branch at 0");
  return s;
}

inline std::vector<SuiteResult> run_all() {
  return {lie_suite(),    lattice_suite(),  gaugefield_suite(),
          flow_suite(),   moduli_suite(),   kuranishi_suite(),
          loja_suite()};
}

}  // namespace selftest
}  // namespace ym
