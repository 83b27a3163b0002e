#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "ym/kuranishi.hpp"
#include "ym/random_fields.hpp"

using namespace ym;

TEST_CASE("low-mode space dimensions and orthonormality") {
  Grid g(8);
  SpectralWorkspace ws(g);

  const LowModeSpace corner = make_low_mode_space(ws, FlatBase(0, 0));
  CHECK(corner.dimension() == 6);
  const LowModeSpace interior = make_low_mode_space(ws, FlatBase(kPi / 2, kPi / 2));
  CHECK(interior.dimension() == 2);

  for (const LowModeSpace* sp : {&corner, &interior}) {
    double worst = 0.0;
    for (size_t i = 0; i < sp->basis.size(); ++i)
      for (size_t j = 0; j < sp->basis.size(); ++j)
        worst = std::max(worst, std::abs(l2_inner(sp->basis[i], sp->basis[j]) -
                                         (i == j ? 1.0 : 0.0)));
    CHECK(worst < 1e-12);
    const Connection gamma(sp->base, g);
    for (const OneForm& e : sp->basis)
      CHECK(l2_norm(codifferential0(ws, gamma, e)) < 1e-12);
  }
}

TEST_CASE("low-mode projection at the product base extracts constants") {
  Grid g(8);
  SpectralWorkspace ws(g);
  const LowModeSpace space = make_low_mode_space(ws, FlatBase(0, 0), 10.0);
  CHECK(space.dimension() == 6);

  const OneForm b = random_one_form(g, 60, {2, 2.0});
  const LowModeSplit split = low_mode_projection(b, space);

  // The parallel part is exactly the constant Fourier mode of b.
  AlgebraElement mx, my;
  for (int i = 0; i < g.sites(); ++i) {
    mx += b.x.at(i);
    my += b.y.at(i);
  }
  mx *= 1.0 / g.sites();
  my *= 1.0 / g.sites();
  double worst = 0.0;
  for (int i = 0; i < g.sites(); ++i) {
    worst = std::max(worst, norm(split.parallel.x.at(i) - mx));
    worst = std::max(worst, norm(split.parallel.y.at(i) - my));
  }
  CHECK(worst < 1e-12);

  // Idempotence of the projection.
  const LowModeSplit twice = low_mode_projection(split.parallel, space);
  CHECK(l2_norm(twice.perpendicular) < 1e-12);

  // The base Laplacian commutes with the projection.
  const Connection gamma(FlatBase(0, 0), g);
  auto laplacian = [&](const OneForm& a) {
    return codifferential(ws, gamma, covariant_d1(ws, gamma, a)) +
           covariant_d(ws, gamma, codifferential0(ws, gamma, a));
  };
  const OneForm lb = laplacian(b);
  const OneForm lhs = low_mode_projection(lb, space).parallel;
  const OneForm rhs = laplacian(split.parallel);
  CHECK(l2_norm(lhs - rhs) < 1e-10 * (1.0 + l2_norm(lb)));
}

TEST_CASE("greens operator") {
  Grid g(8);
  SpectralWorkspace ws(g);
  const FlatBase theta(0, 0);
  const Connection gamma(theta, g);

  // G(L phi) = phi for phi orthogonal to the kernel.
  TwoForm phi(g);
  phi.f = random_scalar_field(g, 61, {2, 2.0});
  AlgebraElement mean;
  for (int i = 0; i < g.sites(); ++i) mean += phi.f.at(i);
  mean *= 1.0 / g.sites();
  for (int i = 0; i < g.sites(); ++i) phi.f.add(i, -1.0 * mean);
  const TwoForm lphi = covariant_d1(ws, gamma, codifferential(ws, gamma, phi));
  CHECK(l2_norm(greens_operator(ws, lphi, theta) - phi) < 1e-10 * (1.0 + l2_norm(phi)));

  // Constants are kernel and map to zero.
  TwoForm cst(g);
  cst.f.fill({0.4, -0.7, 0.1});
  CHECK(l2_norm(greens_operator(ws, cst, theta)) == 0.0);

  // Single mode: G multiplies by 1 / ((2 pi)^2 |k|^2).
  TwoForm mode(g);
  for (int iy = 0; iy < g.n; ++iy)
    for (int ix = 0; ix < g.n; ++ix)
      mode.f.set(g.index(ix, iy), {std::cos(kTwoPi * (g.x(ix) + 2.0 * g.y(iy))), 0.0, 0.0});
  const double eig = kTwoPi * kTwoPi * (1.0 + 4.0);
  const TwoForm gm = greens_operator(ws, mode, theta);
  TwoForm expect = mode;
  expect *= 1.0 / eig;
  CHECK(l2_norm(gm - expect) < 1e-12);
}

TEST_CASE("kuranishi deformation map") {
  Grid g(8);
  SpectralWorkspace ws(g);
  const FlatBase theta(0, 0);

  CHECK(l2_norm(kuranishi_map(ws, OneForm(g), theta)) == 0.0);

  // Constants: the bracket two-form is constant, so the correction vanishes.
  OneForm cst(g);
  cst.x.fill({0.2, 0.1, 0.0});
  cst.y.fill({0.0, 0.3, -0.1});
  CHECK(l2_norm(kuranishi_map(ws, cst, theta) - cst) < 1e-13);

  // The linearization at zero is the identity.
  const OneForm b = random_one_form(g, 62, {2, 2.0});
  auto fd = [&](double eps) {
    OneForm be = b;
    be *= eps;
    OneForm k = kuranishi_map(ws, be, theta);
    k *= 1.0 / eps;
    return l2_norm(k - b);
  };
  const double e1 = fd(1e-3), e2 = fd(5e-4);
  CHECK(e1 < 1e-2);
  CHECK(e2 < 0.6 * e1);  // first-order remainder shrinks linearly
}

TEST_CASE("kuranishi solve") {
  Grid g(8);
  SpectralWorkspace ws(g);
  const FlatBase theta(0, 0);
  const LowModeSpace corner = make_low_mode_space(ws, theta);

  // Zero data: zero solution.
  const KuranishiSolution s0 =
      solve_kuranishi(ws, std::vector<double>(corner.dimension(), 0.0), corner, 1e-12);
  CHECK(l2_norm(s0.a_perp) == 0.0);

  // Constant low-mode data at the product base: d*F of constants is constant,
  // hence inside the low-mode range, so the high-mode part stays zero.
  OneForm apar(g);
  apar.x.fill({0.15, 0.05, 0.0});
  apar.y.fill({-0.1, 0.2, 0.1});
  const LowModeSplit split = low_mode_projection(apar, corner);
  REQUIRE(l2_norm(split.perpendicular) < 1e-12);
  const KuranishiSolution s1 = solve_kuranishi(ws, split.coords, corner, 1e-12);
  CHECK(l2_norm(s1.a_perp) == 0.0);
  CHECK(s1.iterations == 0);

  // Random small data at a regular base: the residual contract holds.
  const FlatBase reg(kPi / 2, kPi / 2);
  const LowModeSpace interior = make_low_mode_space(ws, reg);
  std::mt19937_64 rng(63);
  std::normal_distribution<double> gauss(0.0, 0.03);
  std::vector<double> coords(interior.dimension());
  for (double& c : coords) c = gauss(rng);
  const KuranishiSolution s2 = solve_kuranishi(ws, coords, interior, 1e-11);
  CHECK(s2.residual <= 1e-11);
  // The high-mode part carries no low-mode component.
  const LowModeSplit perp_split = low_mode_projection(s2.a_perp, interior);
  CHECK(l2_norm(perp_split.parallel) < 1e-12);
}

TEST_CASE("balancing map on constants") {
  Grid g(8);
  SpectralWorkspace ws(g);
  const FlatBase theta(0, 0);
  const LowModeSpace space = make_low_mode_space(ws, theta);

  // chi on the ray t (I dx + J dy) reconstructs 4 t^3 (I dx + J dy).
  const double t = 0.1;
  OneForm apar(g);
  apar.x.fill({t, 0, 0});
  apar.y.fill({0, t, 0});
  const LowModeSplit split = low_mode_projection(apar, space);
  const BalancingResult bal = balancing(ws, split.coords, space, 1e-13);
  const OneForm chi_field = from_coords(bal.chi, space);
  double worst = 0.0;
  for (int i = 0; i < g.sites(); ++i) {
    worst = std::max(worst, norm(chi_field.x.at(i) - 4.0 * t * t * t * kBasisI));
    worst = std::max(worst, norm(chi_field.y.at(i) - 4.0 * t * t * t * kBasisJ));
  }
  CHECK(worst < 1e-12);

  // Pairing identity <chi, (xi, eta)> = 2 |[xi, eta]|^2.
  std::mt19937_64 rng(64);
  std::normal_distribution<double> gauss(0.0, 0.05);
  for (int k = 0; k < 25; ++k) {
    const AlgebraElement xi{gauss(rng), gauss(rng), gauss(rng)};
    const AlgebraElement eta{gauss(rng), gauss(rng), gauss(rng)};
    OneForm a(g);
    a.x.fill(xi);
    a.y.fill(eta);
    const LowModeSplit sp = low_mode_projection(a, space);
    const BalancingResult b = balancing(ws, sp.coords, space, 1e-13);
    double dotv = 0.0;
    for (size_t i = 0; i < b.chi.size(); ++i) dotv += b.chi[i] * sp.coords[i];
    const AlgebraElement f = bracket(xi, eta);
    CHECK(std::abs(dotv - 2.0 * inner(f, f)) < 1e-10);
  }

  // Commuting pairs lie on the flat cone: chi = 0.
  OneForm comm(g);
  comm.x.fill({0.0, 0.0, 0.08});
  comm.y.fill({0.0, 0.0, -0.05});
  const LowModeSplit spc = low_mode_projection(comm, space);
  const BalancingResult bc = balancing(ws, spc.coords, space, 1e-13);
  double cn = 0.0;
  for (double v : bc.chi) cn += v * v;
  CHECK(std::sqrt(cn) < 1e-12);
}

TEST_CASE("balancing cone matches the direct flatness test") {
  Grid g(8);
  SpectralWorkspace ws(g);
  const FlatBase theta(0, 0);
  const LowModeSpace space = make_low_mode_space(ws, theta);
  std::mt19937_64 rng(65);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> uni(0.0, 1.0);

  for (int k = 0; k < 60; ++k) {
    AlgebraElement xi{gauss(rng), gauss(rng), gauss(rng)};
    AlgebraElement eta{gauss(rng), gauss(rng), gauss(rng)};
    const double nn = std::sqrt(inner(xi, xi) + inner(eta, eta));
    const double r = 0.1 * std::pow(uni(rng), 1.0 / 6.0) / nn;
    xi *= r;
    eta *= r;
    if (k % 3 == 0) eta = (uni(rng) - 0.5) * xi;  // deliberately commuting pair
    OneForm a(g);
    a.x.fill(xi);
    a.y.fill(eta);
    const LowModeSplit sp = low_mode_projection(a, space);
    const BalancingResult b = balancing(ws, sp.coords, space, 1e-13);
    double cn = 0.0;
    for (double v : b.chi) cn += v * v;
    const bool chi_zero = std::sqrt(cn) <= 1e-10;
    const bool flat = norm(bracket(xi, eta)) <= 1e-10;
    CHECK(chi_zero == flat);
  }
}

TEST_CASE("regular bases reduce the flat locus to the harmonic space") {
  Grid g(8);
  SpectralWorkspace ws(g);
  const FlatBase reg(kPi / 2, kPi / 2);
  const LowModeSpace space = make_low_mode_space(ws, reg);
  REQUIRE(space.dimension() == 2);
  std::mt19937_64 rng(66);
  std::uniform_real_distribution<double> uni(-0.1, 0.1);
  for (int k = 0; k < 20; ++k) {
    std::vector<double> coords{uni(rng), uni(rng)};
    const BalancingResult b = balancing(ws, coords, space, 1e-12);
    double cn = 0.0;
    for (double v : b.chi) cn += v * v;
    CHECK(std::sqrt(cn) <= 1e-11);

    // Gradient consistency: the low-mode part of the slice gradient at the
    // solved connection equals chi.
    const OneForm a = from_coords(coords, space) + b.solution.a_perp;
    const OneForm grad = gradient_slice(ws, Connection(reg, a));
    const LowModeSplit gs = low_mode_projection(grad, space);
    for (int i = 0; i < 2; ++i) CHECK(std::abs(gs.coords[i] - b.chi[i]) < 1e-11);
  }
}
