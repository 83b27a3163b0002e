#include <catch2/catch_amalgamated.hpp>

#include "ym/gauge_field.hpp"
#include "ym/random_fields.hpp"
#include "ym/spectral.hpp"

using namespace ym;

TEST_CASE("grid validation") {
  CHECK_THROWS_AS(Grid(3), Error);
  CHECK_THROWS_AS(Grid(7), Error);
  CHECK_NOTHROW(Grid(4));
}

TEST_CASE("spectral derivative is exact on band-limited data") {
  Grid g(8);
  SpectralWorkspace ws(g);

  Su2Field c(g);
  c.fill({0.3, -0.1, 2.0});
  const Su2Field dc = ws.spectral_derivative(c, Axis::X);
  double worst = 0.0;
  for (int i = 0; i < g.sites(); ++i) worst = std::max(worst, norm(dc.at(i)));
  CHECK(worst < 1e-14);

  Su2Field f(g);
  for (int iy = 0; iy < g.n; ++iy)
    for (int ix = 0; ix < g.n; ++ix)
      f.set(g.index(ix, iy), {std::sin(kTwoPi * g.x(ix)), 0.0, 0.0});
  const Su2Field df = ws.spectral_derivative(f, Axis::X);
  worst = 0.0;
  for (int iy = 0; iy < g.n; ++iy)
    for (int ix = 0; ix < g.n; ++ix) {
      const double expect = kTwoPi * std::cos(kTwoPi * g.x(ix));
      worst = std::max(worst, std::abs(df.at(g.index(ix, iy)).i - expect));
    }
  CHECK(worst < 1e-12);
}

TEST_CASE("derivative skew-adjointness and transform round trip") {
  for (int n : {8, 16, 32}) {
    Grid g(n);
    SpectralWorkspace ws(g);
    double worst_skew = 0.0, worst_rt = 0.0;
    for (int k = 0; k < 100; ++k) {
      const Su2Field f = random_scalar_field(g, 100 + k, {3, 2.0});
      const Su2Field h = random_scalar_field(g, 500 + k, {3, 2.0});
      worst_skew = std::max(
          worst_skew, std::abs(l2_inner(ws.spectral_derivative(f, Axis::Y), h) +
                               l2_inner(f, ws.spectral_derivative(h, Axis::Y))));
      const Su2Field rt = ws.inverse(ws.forward(f));
      for (size_t i = 0; i < f.raw().size(); ++i)
        worst_rt = std::max(worst_rt, std::abs(rt.raw()[i] - f.raw()[i]));
    }
    CHECK(worst_skew < 1e-10);
    CHECK(worst_rt < 1e-12);
  }
}

TEST_CASE("l2 inner products") {
  Grid g(8);
  SpectralWorkspace ws(g);

  // Constant field c I on the unit torus has norm |c|.
  Su2Field c(g);
  c.fill({-1.7, 0.0, 0.0});
  CHECK(l2_norm(c) == Catch::Approx(1.7).margin(1e-13));

  // The constant ray t I dx + t J dy has norm sqrt(2) |t|.
  const double t = 0.05;
  OneForm at(g);
  at.x.fill({t, 0, 0});
  at.y.fill({0, t, 0});
  CHECK(l2_norm(at) == Catch::Approx(std::sqrt(2.0) * t).margin(1e-15));

  // Parseval cross-check.
  const Su2Field f = random_scalar_field(g, 9, {3, 2.0});
  CHECK(std::abs(l2_norm(f) - spectral_l2_norm(ws.forward(f))) < 1e-10 * l2_norm(f));

  // Mismatched grids are rejected, by pairings and by the workspace.
  Su2Field other(Grid(16));
  CHECK_THROWS_AS(l2_inner(c, other), Error);
  CHECK_THROWS_AS(ws.forward(other), Error);
  CHECK_THROWS_AS(ws.spectral_derivative(other, Axis::X), Error);
}

TEST_CASE("sobolev norms") {
  Grid g(8);
  SpectralWorkspace ws(g);
  const double t = 0.03;
  OneForm at(g);
  at.x.fill({t, 0, 0});
  at.y.fill({0, t, 0});

  // Constants have no gradient term.
  CHECK(sobolev_norm(ws, at, 2.0, 1) == Catch::Approx(std::sqrt(2.0) * t).margin(1e-15));
  CHECK(sobolev_norm(ws, OneForm(g), 2.0, 1) == 0.0);
  CHECK_THROWS_AS(sobolev_norm(ws, at, 0.5, 1), Error);

  // W^{1,p}(A_t) / ||F(A_t)||_p^{1/2} is t-independent: both scale as |t|.
  for (double p : {2.0, 3.0, 4.0}) {
    double ratio0 = 0.0;
    for (double tv : {1e-3, 1e-2, 1e-1}) {
      OneForm a(g);
      a.x.fill({tv, 0, 0});
      a.y.fill({0, tv, 0});
      Connection A(FlatBase(0, 0), a);
      const double r = sobolev_norm(ws, a, p, 1) / std::sqrt(lp_norm(curvature(ws, A), p));
      if (ratio0 == 0.0)
        ratio0 = r;
      else
        CHECK(std::abs(r - ratio0) < 1e-10 * ratio0);
    }
  }
}

TEST_CASE("norms are resolution independent once resolved") {
  // L^2-type norms are exact by Parseval for any band-limited field.
  {
    const OneForm a16 = random_one_form(Grid(16), 77, {3, 2.0});
    const OneForm a32 = random_one_form(Grid(32), 77, {3, 2.0});
    SpectralWorkspace w16(Grid(16)), w32(Grid(32));
    const double n16 = sobolev_norm(w16, a16, 2.0, 1);
    const double n32 = sobolev_norm(w32, a32, 2.0, 1);
    CHECK(std::abs(n16 - n32) < 1e-10 * n16);
  }
  // For p != 2 the site sum is a trapezoid quadrature; it is spectrally
  // accurate once |f| is analytic, so keep the field away from zeros.
  {
    auto make = [](Grid g) {
      OneForm a = random_one_form(g, 78, {1, 1.0});
      a *= 0.05;
      Su2Field c(g);
      c.fill({1.0, 0.0, 0.0});
      a.x += c;
      return a;
    };
    const OneForm a16 = make(Grid(16));
    const OneForm a32 = make(Grid(32));
    SpectralWorkspace w16(Grid(16)), w32(Grid(32));
    for (double p : {3.0, 4.0}) {
      const double n16 = sobolev_norm(w16, a16, p, 1);
      const double n32 = sobolev_norm(w32, a32, p, 1);
      CHECK(std::abs(n16 - n32) < 1e-10 * n16);
    }
  }
}
