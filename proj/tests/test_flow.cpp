#include <catch2/catch_amalgamated.hpp>

#include "ym/flow.hpp"
#include "ym/random_fields.hpp"

using namespace ym;

namespace {

Connection at_ray(Grid g, double t) {
  Connection A(FlatBase(0, 0), g);
  A.a.x.fill({t, 0, 0});
  A.a.y.fill({0, t, 0});
  return A;
}

double exact_ray(double s0, double t) { return 1.0 / std::sqrt(1.0 / (s0 * s0) + 8.0 * t); }

}  // namespace

TEST_CASE("flat initial data is a fixed point of the step") {
  Grid g(8);
  SpectralWorkspace ws(g);
  FlowState st = make_flow_state(ws, Connection(FlatBase(0.9, 0.2), g));
  const FlowState next = step(ws, st, 0.1);
  CHECK(l2_norm(next.A.a) < 1e-14);

  FlowConfig cfg;
  cfg.t_max = 1.0;
  cfg.grad_tol = 1e-12;
  const Trajectory tr = run(ws, Connection(FlatBase(0.9, 0.2), g), cfg);
  CHECK(tr.converged);
  CHECK(tr.samples.back().arclength <= 1e-12);
}

TEST_CASE("constant-mode flow matches the closed form") {
  Grid g(8);
  SpectralWorkspace ws(g);
  const double s0 = 0.1;
  FlowConfig cfg;
  cfg.grad_tol = 0.0;
  cfg.keep_states = false;
  cfg.record_stride = 1 << 20;
  for (double T : {1.0, 10.0}) {
    cfg.t_max = T;
    const Trajectory tr = run(ws, at_ray(g, s0), cfg);
    const double got = tr.terminal.a.x.at(0).i;
    CHECK(std::abs(got - exact_ray(s0, T)) < 1e-6 * exact_ray(s0, T));
  }
}

TEST_CASE("one ETD step agrees with one RK4 step to O(dt^3)") {
  Grid g(16);
  SpectralWorkspace ws(g);
  const FlatBase base(kPi / 2, kPi / 2);
  const FlowState st = make_flow_state(ws, random_slice_connection(ws, base, 50, 0.05));

  auto diff = [&](double dt) {
    const FlowState a = step(ws, st, dt, Integrator::EtdRk2);
    const FlowState b = step(ws, st, dt, Integrator::ExplicitRk4);
    return l2_norm(a.A.a - b.A.a);
  };
  const double d1 = diff(2e-4);
  const double d2 = diff(1e-4);
  const double slope = std::log2(d1 / d2);
  CHECK(slope > 2.5);
  CHECK(slope < 3.6);
}

TEST_CASE("energy guard rejects uphill steps") {
  Grid g(8);
  SpectralWorkspace ws(g);
  const FlowState st = make_flow_state(ws, at_ray(g, 0.4));
  // A huge explicit step overshoots the minimum and raises the energy.
  CHECK_THROWS_AS(step(ws, st, 50.0, Integrator::ExplicitRk4), Error);
}

TEST_CASE("flow at a regular base converges with monotone energy") {
  Grid g(16);
  SpectralWorkspace ws(g);
  const FlatBase base(kPi / 2, kPi / 2);
  const Connection A0 = random_slice_connection(ws, base, 51, 0.05);
  FlowConfig cfg;
  cfg.t_max = 50.0;
  cfg.grad_tol = 1e-8;
  const Trajectory tr = run(ws, A0, cfg);
  REQUIRE(tr.converged);
  CHECK(l2_norm(curvature(ws, tr.terminal)) <= 1e-6);
  CHECK(tr.energy_equality_residual <= 1e-6 * tr.energy_initial);

  double worst_rise = 0.0, worst_resid = 0.0, amax = 0.0;
  for (size_t i = 0; i + 1 < tr.samples.size(); ++i)
    worst_rise = std::max(worst_rise, tr.samples[i + 1].energy - tr.samples[i].energy);
  for (const auto& s : tr.samples) {
    worst_resid = std::max(worst_resid, s.slice_residual);
    amax = std::max(amax, s.dist_l2);
  }
  CHECK(worst_rise <= 1e-9 * tr.energy_initial);
  CHECK(worst_resid <= 1e-8 * amax);
}

TEST_CASE("integrator cross-validation on a fixed benchmark") {
  Grid g(16);
  SpectralWorkspace ws(g);
  const FlatBase base(kPi / 2, kPi / 2);
  const Connection A0 = random_slice_connection(ws, base, 52, 0.05);
  FlowConfig cfg;
  cfg.t_max = 5.0;
  cfg.grad_tol = 0.0;
  cfg.keep_states = false;
  cfg.record_stride = 1 << 20;
  cfg.integrator = Integrator::EtdRk2;
  const Trajectory te = run(ws, A0, cfg);
  cfg.integrator = Integrator::ExplicitRk4;
  const Trajectory tr = run(ws, A0, cfg);
  CHECK(l2_norm(te.terminal.a - tr.terminal.a) <= 1e-5);
}

TEST_CASE("decay fits on synthetic series") {
  // Exponential generator.
  {
    std::vector<double> t, y;
    for (int i = 1; i <= 200; ++i) {
      t.push_back(0.05 * i);
      y.push_back(std::exp(-3.0 * 0.05 * i));
    }
    const DecayFit f = fit_decay_series(t, y);
    CHECK(f.regime == DecayFit::Regime::Exponential);
    CHECK(f.rate == Catch::Approx(3.0).epsilon(0.01));
    CHECK(f.theta == 0.5);
  }
  // Power generator t^{-1/2}.
  {
    std::vector<double> t, y;
    for (int i = 0; i < 200; ++i) {
      const double tv = std::pow(10.0, -1.0 + 4.0 * i / 199.0);
      t.push_back(tv);
      y.push_back(std::pow(tv, -0.5));
    }
    const DecayFit f = fit_decay_series(t, y);
    CHECK(f.regime == DecayFit::Regime::Power);
    CHECK(f.q == Catch::Approx(0.5).margin(1e-6));
    CHECK(f.theta == Catch::Approx(0.75).margin(0.01));
  }
  // Too little decay is reported, not fitted.
  {
    std::vector<double> t, y;
    for (int i = 1; i <= 50; ++i) {
      t.push_back(0.1 * i);
      y.push_back(1.0 - 0.001 * i);
    }
    CHECK_THROWS_AS(fit_decay_series(t, y), Error);
  }
}

TEST_CASE("constant-ray flow fits the power regime") {
  Grid g(8);
  SpectralWorkspace ws(g);
  FlowConfig cfg;
  cfg.t_max = 3e6;
  cfg.grad_tol = 1e-11;
  cfg.keep_states = true;
  cfg.record_stride = 8;
  const Trajectory tr = run(ws, at_ray(g, 0.1), cfg);
  const DecayFit f = fit_decay(tr, DecayQuantity::DistanceToLimit);
  CHECK(f.regime == DecayFit::Regime::Power);
  CHECK(f.q == Catch::Approx(0.5).margin(0.05));
  CHECK(f.theta == Catch::Approx(0.75).margin(0.02));
}

TEST_CASE("retraction basics") {
  Grid g(16);
  SpectralWorkspace ws(g);
  FlowConfig cfg;
  cfg.t_max = 50.0;
  cfg.grad_tol = 1e-8;
  cfg.keep_states = false;
  cfg.record_stride = 64;

  // Flat initial data is an exact fixed point of the retraction.
  const FlatBase base(1.2, 0.9);
  const RetractResult r0 = retract(ws, Connection(base, g), cfg);
  CHECK(pillowcase_dist(r0.point, reduce({1.2, 0.9})) < 1e-12);
  CHECK(r0.trajectory.samples.back().arclength <= 1e-12);

  // The constant ray at the product base flows to the product class; the
  // decay there is a power law and the curvature shrinks only like the
  // 2/3 power of the gradient, so both tolerances must be tightened.
  FlowConfig slow = cfg;
  slow.t_max = 1e6;
  slow.grad_tol = 1e-9;
  const RetractResult r1 = retract(ws, at_ray(g, 0.05), slow);
  CHECK(r1.terminal_curvature <= 1e-6);
  CHECK(pillowcase_dist(r1.point, {0.0, 0.0}) < 1e-3);

  // Continuity probe: nearby initial data land at nearby points.
  const Connection A = random_slice_connection(ws, base, 53, 0.02);
  Connection B = A;
  OneForm bump = random_one_form(g, 54, {1, 1.0});
  bump *= 1e-3 / std::max(1e-30, l2_norm(bump));
  B.a += coulomb_project(ws, bump, base);
  const RetractResult ra = retract(ws, A, cfg);
  const RetractResult rb = retract(ws, B, cfg);
  CHECK(pillowcase_dist(ra.point, rb.point) < 1e-2);
}
