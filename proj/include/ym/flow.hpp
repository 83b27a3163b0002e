#pragma once

#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

#include "ym/fitting.hpp"
#include "ym/gauge_field.hpp"
#include "ym/moduli.hpp"
#include "ym/spectral.hpp"

namespace ym {

enum class Integrator { EtdRk2, ExplicitRk4 };

struct FlowConfig {
  double t_max = 10.0;
  double grad_tol = 1e-8;
  Integrator integrator = Integrator::EtdRk2;
  double dt_init = 1e-4;
  double dt_min = 1e-14;
  double dt_max = 1e30;
  double rel_tol = 1e-8;          // per-step local error target
  double quad_budget_rel = 2e-7;  // energy-equality quadrature budget, times E(0)
  double energy_guard_rel = 1e-12;
  double growth_cap = 1.3;
  int record_stride = 1;
  int max_records = 4096;
  bool keep_states = true;
  double retract_eps = 0.05;      // admissible initial curvature for retraction
  double flatness_tol = 1e-7;     // terminal-curvature scale for retraction
};

struct TrajectorySample {
  double t = 0.0;
  double energy = 0.0;
  double grad_l2 = 0.0;
  double slice_residual = 0.0;
  double dist_l2 = 0.0;   // L^2 distance to the flat base
  double arclength = 0.0;
};

struct Trajectory {
  std::vector<TrajectorySample> samples;
  std::vector<OneForm> states;  // aligned with samples when kept
  Connection terminal;
  bool converged = false;
  double energy_initial = 0.0;
  double energy_terminal = 0.0;
  double grad_sq_integral = 0.0;
  double energy_equality_residual = 0.0;
  int steps_accepted = 0;
  int steps_rejected = 0;
};

// ---------------------------------------------------------------------------
// ad(K) eigenbasis planes of a spectral one-form; the flow's per-mode
// arithmetic lives here.

namespace detail {

struct EigenOneForm {
  Grid grid;
  std::vector<Complex> data;  // plane order: (s, axis)

  EigenOneForm() = default;
  explicit EigenOneForm(Grid g) : grid(g), data(6 * g.sites(), Complex{0.0, 0.0}) {}

  Complex* plane(int s, int axis) { return data.data() + (2 * s + axis) * grid.sites(); }
  const Complex* plane(int s, int axis) const {
    return data.data() + (2 * s + axis) * grid.sites();
  }
};

inline EigenOneForm to_eigen(const SpectralOneForm& s) {
  EigenOneForm e(s.grid());
  const int m = e.grid.sites();
  for (int i = 0; i < m; ++i) {
    split_adk(s.x.plane(0)[i], s.x.plane(1)[i], s.x.plane(2)[i], e.plane(0, 0)[i],
              e.plane(1, 0)[i], e.plane(2, 0)[i]);
    split_adk(s.y.plane(0)[i], s.y.plane(1)[i], s.y.plane(2)[i], e.plane(0, 1)[i],
              e.plane(1, 1)[i], e.plane(2, 1)[i]);
  }
  return e;
}

inline SpectralOneForm from_eigen(const EigenOneForm& e) {
  SpectralOneForm s(e.grid);
  const int m = e.grid.sites();
  for (int i = 0; i < m; ++i) {
    merge_adk(e.plane(0, 0)[i], e.plane(1, 0)[i], e.plane(2, 0)[i], s.x.plane(0)[i],
              s.x.plane(1)[i], s.x.plane(2)[i]);
    merge_adk(e.plane(0, 1)[i], e.plane(1, 1)[i], e.plane(2, 1)[i], s.y.plane(0)[i],
              s.y.plane(1)[i], s.y.plane(2)[i]);
  }
  return s;
}

// Parseval weight: the +-2i eigencomponents carry twice the I,J content.
inline double eigen_weight(int s) { return s == 0 ? 1.0 : 2.0; }

inline double eigen_l2(const EigenOneForm& e) {
  double acc = 0.0;
  const int m = e.grid.sites();
  for (int s = 0; s < 3; ++s)
    for (int ax = 0; ax < 2; ++ax) {
      const Complex* p = e.plane(s, ax);
      double sub = 0.0;
      for (int i = 0; i < m; ++i) sub += std::norm(p[i]);
      acc += eigen_weight(s) * sub;
    }
  return std::sqrt(acc) / m;
}

inline void phi_factors(double z, double& ez, double& phi1, double& phi2) {
  ez = std::exp(z);
  if (std::abs(z) < 1e-5) {
    phi1 = 1.0 + z / 2.0 + z * z / 6.0 + z * z * z / 24.0;
    phi2 = 0.5 + z / 6.0 + z * z / 24.0 + z * z * z / 120.0;
  } else {
    const double em1 = std::expm1(z);
    phi1 = em1 / z;
    phi2 = (em1 - z) / (z * z);
  }
}

// Walk the dealiased modes with their eigenvalues.
template <typename Op>
void for_modes(const Grid& g, const BaseModes& bm, Op&& op) {
  const int n = g.n;
  const int nyq = n / 2;
  for (int s = 0; s < 3; ++s)
    for (int iy = 0; iy < n; ++iy) {
      if (iy == nyq) continue;
      for (int ix = 0; ix < n; ++ix) {
        if (ix == nyq) continue;
        op(s, iy * n + ix, bm.mx[s][ix], bm.my[s][iy]);
      }
    }
}

}  // namespace detail

struct FlowState {
  Connection A;
  detail::EigenOneForm a_hat;
  SliceGradient grad;
  double t = 0.0;
};

inline FlowState make_flow_state(SpectralWorkspace& ws, const Connection& A0, double t = 0.0) {
  FlowState st;
  st.A = Connection(A0.base, coulomb_project(ws, A0.a, A0.base));
  SpectralOneForm sh = ws.forward(st.A.a);
  st.a_hat = detail::to_eigen(sh);
  st.grad = slice_gradient(ws, st.A, &sh);
  st.t = t;
  return st;
}

namespace detail {

struct StepDiagnostics {
  double error_estimate = 0.0;     // local error proxy for the controller
  double grad_sq_int = 0.0;        // contribution to int ||grad||^2 dt
  double quad_error_slope = 0.0;   // mean slope of the nonlinear remainder
};

// One ETD-RK2 step: the slice Laplacian of the base handled exactly per mode,
// the nonlinearity evaluated pseudo-spectrally at the predictor, and the
// result re-projected onto the slice.
inline FlowState etd_rk2_step(SpectralWorkspace& ws, const FlowState& st, double dt,
                              StepDiagnostics& diag) {
  const Grid& g = ws.grid();
  const BaseModes& bm = ws.modes(st.A.base.alpha, st.A.base.beta);
  const EigenOneForm g_n = to_eigen(st.grad.g_hat);
  const EigenOneForm& a_n = st.a_hat;

  // Nonlinearity relative to the exactly-solved linear part.
  EigenOneForm n_n(g), a_p(g);
  for_modes(g, bm, [&](int s, int idx, double mx, double my) {
    const double eig = mx * mx + my * my;
    double ez, p1, p2;
    phi_factors(-eig * dt, ez, p1, p2);
    for (int ax = 0; ax < 2; ++ax) {
      const Complex a = a_n.plane(s, ax)[idx];
      const Complex nn = eig * a - g_n.plane(s, ax)[idx];
      n_n.plane(s, ax)[idx] = nn;
      a_p.plane(s, ax)[idx] = ez * a + dt * p1 * nn;
    }
  });

  SpectralOneForm sp = from_eigen(a_p);
  Connection A_p(st.A.base, ws.inverse(sp));
  const SliceGradient sg_p = slice_gradient(ws, A_p, &sp);
  const EigenOneForm g_p = to_eigen(sg_p.g_hat);

  EigenOneForm a_1(g), corr(g);
  for_modes(g, bm, [&](int s, int idx, double mx, double my) {
    const double eig = mx * mx + my * my;
    double ez, p1, p2;
    phi_factors(-eig * dt, ez, p1, p2);
    Complex v[2];
    for (int ax = 0; ax < 2; ++ax) {
      const Complex np = eig * a_p.plane(s, ax)[idx] - g_p.plane(s, ax)[idx];
      const Complex dc = dt * p2 * (np - n_n.plane(s, ax)[idx]);
      corr.plane(s, ax)[idx] = dc;
      v[ax] = a_p.plane(s, ax)[idx] + dc;
    }
    // Re-zero the slice constraint.
    if (eig > 1e-14 * bm.max_eig) {
      const Complex dot = (mx * v[0] + my * v[1]) / eig;
      v[0] -= mx * dot;
      v[1] -= my * dot;
    }
    a_1.plane(s, 0)[idx] = v[0];
    a_1.plane(s, 1)[idx] = v[1];
  });
  diag.error_estimate = eigen_l2(corr);

  FlowState out;
  out.A = Connection(st.A.base, OneForm(g));
  SpectralOneForm s1 = from_eigen(a_1);
  out.A.a = ws.inverse(s1);
  out.a_hat = std::move(a_1);
  out.grad = slice_gradient(ws, out.A, &s1);
  out.t = st.t + dt;
  return out;
}

inline FlowState rk4_step(SpectralWorkspace& ws, const FlowState& st, double dt,
                          StepDiagnostics& diag) {
  const FlatBase base = st.A.base;

  auto eval = [&](const OneForm& a) {
    Connection A(base, a);
    return slice_gradient(ws, A);
  };

  const OneForm& a0 = st.A.a;
  OneForm k1 = st.grad.g;
  k1 *= -1.0;
  OneForm k2 = eval(a0 + 0.5 * dt * k1).g;
  k2 *= -1.0;
  OneForm k3 = eval(a0 + 0.5 * dt * k2).g;
  k3 *= -1.0;
  OneForm k4 = eval(a0 + dt * k3).g;
  k4 *= -1.0;

  OneForm incr = k1 + 2.0 * k2 + 2.0 * k3 + k4;
  incr *= dt / 6.0;
  diag.error_estimate = dt * l2_norm(k3 - k2);

  FlowState out;
  out.A = Connection(base, coulomb_project(ws, a0 + incr, base));
  SpectralOneForm sh = ws.forward(out.A.a);
  out.a_hat = to_eigen(sh);
  out.grad = slice_gradient(ws, out.A, &sh);
  out.t = st.t + dt;
  return out;
}

// Exact integral of the linearly-decayed gradient over the step plus a
// trapezoidal correction for the nonlinear remainder; this is what makes the
// energy-equality ledger affordable on stiff transients.
inline void accumulate_grad_sq(SpectralWorkspace& ws, const FlowState& before,
                               const FlowState& after, double dt, StepDiagnostics& diag) {
  const Grid& g = ws.grid();
  const BaseModes& bm = ws.modes(before.A.base.alpha, before.A.base.beta);
  const EigenOneForm g_n = to_eigen(before.grad.g_hat);

  double lin_int = 0.0, decayed = 0.0;
  for_modes(g, bm, [&](int s, int idx, double mx, double my) {
    const double eig = mx * mx + my * my;
    double ez, p1, p2;
    phi_factors(-2.0 * eig * dt, ez, p1, p2);
    const double w = eigen_weight(s);
    for (int ax = 0; ax < 2; ++ax) {
      const double a2 = std::norm(g_n.plane(s, ax)[idx]);
      lin_int += w * a2 * dt * p1;
      decayed += w * a2 * ez;
    }
  });
  const double scale = 1.0 / (double(g.sites()) * double(g.sites()));
  lin_int *= scale;
  decayed *= scale;

  const double g1 = after.grad.g_l2;
  const double r_end = g1 * g1 - decayed;
  diag.grad_sq_int = lin_int + 0.5 * dt * r_end;
  diag.quad_error_slope = r_end / dt;
}

}  // namespace detail

// One step of the slice flow. Throws StepRejected when the energy increases
// beyond the guard; the caller halves dt.
inline FlowState step(SpectralWorkspace& ws, const FlowState& st, double dt,
                      Integrator integrator = Integrator::EtdRk2,
                      double energy_guard_rel = 1e-12) {
  detail::StepDiagnostics diag;
  FlowState out = (integrator == Integrator::EtdRk2) ? detail::etd_rk2_step(ws, st, dt, diag)
                                                     : detail::rk4_step(ws, st, dt, diag);
  const double e0 = st.grad.energy;
  if (out.grad.energy > e0 + energy_guard_rel * e0 + 1e-300)
    fail(ErrorCode::StepRejected, "energy increased by " + std::to_string(out.grad.energy - e0));
  return out;
}

// Integrate the slice flow until the gradient norm drops below tolerance or
// t_max is reached (the trajectory is then returned flagged, not thrown).
inline Trajectory run(SpectralWorkspace& ws, const Connection& initial, const FlowConfig& cfg) {
  Trajectory traj;
  FlowState st = make_flow_state(ws, initial);
  const double e0 = st.grad.energy;
  traj.energy_initial = e0;

  const double a0_norm = detail::eigen_l2(st.a_hat);
  const double quad_budget = cfg.quad_budget_rel * std::max(e0, 1e-300);
  double quad_spent = 0.0;
  double prev_slope = 0.0;
  double prev_dt = 0.0;
  bool have_prev_slope = false;

  double arclength = 0.0;
  int stride = std::max(1, cfg.record_stride);
  int since_record = 0;

  auto slice_residual = [&](const FlowState& s) {
    // ||d_Gamma* a|| from the per-mode slice condition.
    const BaseModes& bm = ws.modes(s.A.base.alpha, s.A.base.beta);
    double acc = 0.0;
    detail::for_modes(ws.grid(), bm, [&](int c, int idx, double mx, double my) {
      const Complex d = mx * s.a_hat.plane(c, 0)[idx] + my * s.a_hat.plane(c, 1)[idx];
      acc += detail::eigen_weight(c) * std::norm(d);
    });
    return std::sqrt(acc) / ws.grid().sites();
  };

  auto record = [&](const FlowState& s) {
    TrajectorySample smp;
    smp.t = s.t;
    smp.energy = s.grad.energy;
    smp.grad_l2 = s.grad.g_l2;
    smp.slice_residual = slice_residual(s);
    smp.dist_l2 = detail::eigen_l2(s.a_hat);
    smp.arclength = arclength;
    traj.samples.push_back(smp);
    if (cfg.keep_states) traj.states.push_back(s.A.a);
    if (static_cast<int>(traj.samples.size()) > cfg.max_records) {
      // Thin to every other record and double the stride.
      std::vector<TrajectorySample> s2;
      std::vector<OneForm> st2;
      for (size_t i = 0; i < traj.samples.size(); i += 2) {
        s2.push_back(traj.samples[i]);
        if (cfg.keep_states) st2.push_back(traj.states[i]);
      }
      traj.samples.swap(s2);
      traj.states.swap(st2);
      stride *= 2;
    }
  };

  record(st);
  double dt = cfg.dt_init;
  const double stability_cap =
      (cfg.integrator == Integrator::ExplicitRk4)
          ? 2.5 / std::max(1.0, max_laplace_eigenvalue(ws, initial.base))
          : 1e30;

  while (true) {
    if (st.grad.g_l2 <= cfg.grad_tol) {
      traj.converged = true;
      break;
    }
    if (st.t >= cfg.t_max) break;

    dt = std::min({dt, cfg.dt_max, stability_cap, cfg.t_max - st.t});
    FlowState next;
    detail::StepDiagnostics diag;
    bool accepted = false;
    while (!accepted) {
      try {
        next = (cfg.integrator == Integrator::EtdRk2)
                   ? detail::etd_rk2_step(ws, st, dt, diag)
                   : detail::rk4_step(ws, st, dt, diag);
        const double e_prev = st.grad.energy;
        if (next.grad.energy > e_prev + cfg.energy_guard_rel * e_prev + 1e-300)
          fail(ErrorCode::StepRejected, "energy guard");
        accepted = true;
      } catch (const Error& e) {
        if (e.code() != ErrorCode::StepRejected) throw;
        ++traj.steps_rejected;
        dt *= 0.5;
        if (dt < cfg.dt_min) fail(ErrorCode::NoConvergence, "step size underflow");
      }
    }

    detail::accumulate_grad_sq(ws, st, next, dt, diag);
    traj.grad_sq_integral += diag.grad_sq_int;
    arclength += 0.5 * dt * (st.grad.g_l2 + next.grad.g_l2);

    // Quadrature error proxy from the curvature of the nonlinear remainder.
    double quad_err = 0.0;
    if (have_prev_slope) {
      const double mean_dt = 0.5 * (dt + prev_dt);
      quad_err = dt * dt * dt / 12.0 * std::abs(diag.quad_error_slope - prev_slope) / mean_dt;
    }
    quad_spent += quad_err;
    prev_slope = diag.quad_error_slope;
    prev_dt = dt;
    have_prev_slope = true;

    ++traj.steps_accepted;
    st = std::move(next);
    if (++since_record >= stride) {
      record(st);
      since_record = 0;
    }

    // Step-size controller: local error, quadrature budget, growth cap.
    const double floor = std::max(detail::eigen_l2(st.a_hat), 1e-6 * a0_norm + 1e-300);
    const double rel_err = diag.error_estimate / floor;
    double factor = cfg.growth_cap;
    if (rel_err > 0.0)
      factor = std::min(factor, 0.9 * std::sqrt(cfg.rel_tol / rel_err));
    if (quad_err > 0.0 && quad_budget > 0.0) {
      const double remaining = std::max(quad_budget - quad_spent, 0.05 * quad_budget);
      const double cap = 0.02 * remaining;
      factor = std::min(factor, 0.9 * std::cbrt(cap / quad_err));
    }
    dt *= std::max(0.1, factor);
  }

  if (since_record != 0) record(st);
  traj.terminal = st.A;
  traj.energy_terminal = st.grad.energy;
  traj.energy_equality_residual =
      std::abs(traj.grad_sq_integral - (traj.energy_initial - traj.energy_terminal));
  return traj;
}

// ---------------------------------------------------------------------------
// Decay-regime fitting of trajectory diagnostics.

enum class DecayQuantity { Energy, DistanceToLimit };

inline DecayFit fit_decay(const Trajectory& traj, DecayQuantity quantity) {
  std::vector<double> ts, ys;
  ts.reserve(traj.samples.size());
  if (quantity == DecayQuantity::Energy) {
    for (const auto& s : traj.samples) {
      ts.push_back(s.t);
      ys.push_back(s.energy);
    }
  } else {
    if (traj.states.size() != traj.samples.size())
      fail(ErrorCode::BadArgument, "distance-to-limit fit requires stored states");
    const OneForm& last = traj.states.back();
    for (size_t i = 0; i + 1 < traj.states.size(); ++i) {
      ts.push_back(traj.samples[i].t);
      ys.push_back(l2_norm(traj.states[i] - last));
    }
  }
  return fit_decay_series(ts, ys);
}

// ---------------------------------------------------------------------------
// Flow-to-flat retraction: run the flow, require a near-flat terminal state,
// and read off its pillowcase point.  The homotopy parameter is s = 1 - e^-t.

struct RetractResult {
  PillowcasePoint point;
  Trajectory trajectory;
  double terminal_curvature = 0.0;
  HolonomyPair holonomy_pair;
};

inline RetractResult retract(SpectralWorkspace& ws, const Connection& initial,
                             const FlowConfig& cfg, double holonomy_tol = 1e-4) {
  const double f0 = l2_norm(curvature(ws, initial));
  if (f0 > cfg.retract_eps)
    fail(ErrorCode::BadArgument,
         "initial curvature " + std::to_string(f0) + " above configured bound");

  RetractResult out;
  out.trajectory = run(ws, initial, cfg);
  if (!out.trajectory.converged)
    fail(ErrorCode::DidNotConverge, "flow reached t_max before the gradient tolerance");
  out.terminal_curvature = l2_norm(curvature(ws, out.trajectory.terminal));
  if (out.terminal_curvature > 10.0 * cfg.flatness_tol)
    fail(ErrorCode::NotNearFlat,
         "terminal curvature " + std::to_string(out.terminal_curvature));
  out.holonomy_pair = holonomy(out.trajectory.terminal);
  out.point = to_pillowcase(out.holonomy_pair, holonomy_tol);
  return out;
}

inline double retraction_parameter(double t) { return 1.0 - std::exp(-t); }

}  // namespace ym
