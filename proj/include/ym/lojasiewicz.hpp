#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "ym/common.hpp"
#include "ym/fitting.hpp"

namespace ym {
namespace loja {

using Vec = std::vector<double>;

inline double dot(const Vec& a, const Vec& b) {
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}
inline double norm(const Vec& a) { return std::sqrt(dot(a, a)); }
inline Vec axpy(double c, const Vec& x, const Vec& y) {
  Vec r(y);
  for (size_t i = 0; i < x.size(); ++i) r[i] += c * x[i];
  return r;
}

// Analytic test function with gradient and, when available, its gradient
// exponent and distance functions to the critical / zero sets.
struct TestFunction {
  std::string name;
  int n = 1;
  std::function<double(const Vec&)> value;
  std::function<Vec(const Vec&)> gradient;
  double theta = -1.0;  // known gradient exponent, if any
  std::function<double(const Vec&)> dist_crit;
  std::function<double(const Vec&)> dist_zero;
};

inline TestFunction quadratic(int n) {
  TestFunction f;
  f.name = "quadratic";
  f.n = n;
  f.value = [](const Vec& x) { return dot(x, x); };
  f.gradient = [](const Vec& x) {
    Vec g(x);
    for (double& v : g) v *= 2.0;
    return g;
  };
  f.theta = 0.5;
  f.dist_crit = [](const Vec& x) { return norm(x); };
  f.dist_zero = f.dist_crit;
  return f;
}

inline TestFunction quartic() {
  TestFunction f;
  f.name = "quartic";
  f.n = 1;
  f.value = [](const Vec& x) { return std::pow(x[0], 4); };
  f.gradient = [](const Vec& x) { return Vec{4.0 * std::pow(x[0], 3)}; };
  f.theta = 0.75;
  f.dist_crit = [](const Vec& x) { return std::abs(x[0]); };
  f.dist_zero = f.dist_crit;
  return f;
}

// E(x, y) = x^2: the critical set is the y-axis, a manifold matching the
// Hessian kernel, so the exponent is 1/2.
inline TestFunction morse_bott() {
  TestFunction f;
  f.name = "morse-bott";
  f.n = 2;
  f.value = [](const Vec& x) { return x[0] * x[0]; };
  f.gradient = [](const Vec& x) { return Vec{2.0 * x[0], 0.0}; };
  f.theta = 0.5;
  f.dist_crit = [](const Vec& x) { return std::abs(x[0]); };
  f.dist_zero = f.dist_crit;
  return f;
}

// E(x) = x^2 (x-1)^2: Crit = {0, 1/2, 1} strictly contains Zero = {0, 1}.
inline TestFunction double_well() {
  TestFunction f;
  f.name = "double-well";
  f.n = 1;
  f.value = [](const Vec& x) {
    const double a = x[0], b = x[0] - 1.0;
    return a * a * b * b;
  };
  f.gradient = [](const Vec& x) {
    const double a = x[0];
    return Vec{2.0 * a * (a - 1.0) * (2.0 * a - 1.0)};
  };
  f.dist_crit = [](const Vec& x) {
    return std::min({std::abs(x[0]), std::abs(x[0] - 0.5), std::abs(x[0] - 1.0)});
  };
  f.dist_zero = [](const Vec& x) { return std::min(std::abs(x[0]), std::abs(x[0] - 1.0)); };
  return f;
}

// Constants of a gradient inequality together with the derived exponents.
struct LojConstants {
  double theta = 0.5;
  double C = 1.0;
  double sigma = 1.0;
  double delta = 0.25;
  double alpha() const { return 1.0 / (1.0 - theta); }
  double lambda() const { return 2.0 / alpha(); }
  double beta_dist() const { return alpha() / 2.0; }

  LojConstants() = default;
  LojConstants(double th, double c, double sg, double dl)
      : theta(th), C(c), sigma(sg), delta(dl) {
    if (theta < 0.5 || theta >= 1.0) fail(ErrorCode::BadArgument, "theta outside [1/2, 1)");
    if (C <= 0.0) fail(ErrorCode::BadArgument, "C must be positive");
    if (sigma <= 0.0 || sigma > 1.0) fail(ErrorCode::BadArgument, "sigma outside (0, 1]");
    if (delta <= 0.0 || delta > sigma / 4.0) fail(ErrorCode::BadArgument, "delta outside (0, sigma/4]");
  }
};

// ---------------------------------------------------------------------------
// Gradient flow with a Cash-Karp embedded pair; the square of the gradient
// norm is integrated as an augmented state so the energy-equality ledger is
// as accurate as the trajectory itself.

struct FlowSample {
  double t = 0.0;
  double energy = 0.0;
  double grad_norm = 0.0;
  Vec x;
};

struct FlowTrajectory {
  std::vector<FlowSample> samples;
  Vec terminal;
  bool converged = false;
  double grad_sq_integral = 0.0;
  bool has_exact_integral = false;
};

struct OdeOptions {
  double rel_tol = 1e-11;
  double abs_tol = 1e-13;
  double dt_init = 1e-4;
  double dt_max = 1e9;  // the embedded error estimate already bounds steps
  int max_steps = 4000000;
  int record_stride = 1;
  int max_records = 100000;
};

inline FlowTrajectory flow_ode(const TestFunction& f, const Vec& x0, double t_max, double tol,
                               const OdeOptions& opt = {}) {
  // State: (x, q) with dq/dt = |grad E|^2.
  const int n = f.n;
  auto rhs = [&](const Vec& s) {
    Vec g = f.gradient(Vec(s.begin(), s.begin() + n));
    Vec d(n + 1);
    for (int i = 0; i < n; ++i) d[i] = -g[i];
    d[n] = dot(g, g);
    return d;
  };

  static const double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 3.0 / 5, c5 = 1.0, c6 = 7.0 / 8;
  static const double b21 = 1.0 / 5;
  static const double b31 = 3.0 / 40, b32 = 9.0 / 40;
  static const double b41 = 3.0 / 10, b42 = -9.0 / 10, b43 = 6.0 / 5;
  static const double b51 = -11.0 / 54, b52 = 5.0 / 2, b53 = -70.0 / 27, b54 = 35.0 / 27;
  static const double b61 = 1631.0 / 55296, b62 = 175.0 / 512, b63 = 575.0 / 13824,
                      b64 = 44275.0 / 110592, b65 = 253.0 / 4096;
  static const double w1 = 37.0 / 378, w3 = 250.0 / 621, w4 = 125.0 / 594, w6 = 512.0 / 1771;
  static const double e1 = w1 - 2825.0 / 27648, e3 = w3 - 18575.0 / 48384,
                      e4 = w4 - 13525.0 / 55296, e5 = -277.0 / 14336, e6 = w6 - 0.25;
  (void)c2; (void)c3; (void)c4; (void)c5; (void)c6;

  Vec s(n + 1, 0.0);
  for (int i = 0; i < n; ++i) s[i] = x0[i];

  FlowTrajectory traj;
  traj.has_exact_integral = true;
  double t = 0.0, dt = opt.dt_init;
  int since = 0;
  int stride = std::max(1, opt.record_stride);

  auto record = [&] {
    Vec x(s.begin(), s.begin() + n);
    Vec g = f.gradient(x);
    traj.samples.push_back({t, f.value(x), norm(g), x});
    if (static_cast<int>(traj.samples.size()) > opt.max_records) {
      std::vector<FlowSample> thin;
      for (size_t i = 0; i < traj.samples.size(); i += 2) thin.push_back(traj.samples[i]);
      traj.samples.swap(thin);
      stride *= 2;
    }
  };
  record();

  for (int stepn = 0; stepn < opt.max_steps; ++stepn) {
    Vec x(s.begin(), s.begin() + n);
    const double gn = norm(f.gradient(x));
    if (gn <= tol) {
      traj.converged = true;
      break;
    }
    if (t >= t_max) break;
    dt = std::min({dt, opt.dt_max, t_max - t});

    const Vec k1 = rhs(s);
    const Vec k2 = rhs(axpy(dt * b21, k1, s));
    Vec tmp = axpy(dt * b31, k1, s);
    const Vec k3 = rhs(axpy(dt * b32, k2, tmp));
    tmp = axpy(dt * b41, k1, s);
    tmp = axpy(dt * b42, k2, tmp);
    const Vec k4 = rhs(axpy(dt * b43, k3, tmp));
    tmp = axpy(dt * b51, k1, s);
    tmp = axpy(dt * b52, k2, tmp);
    tmp = axpy(dt * b53, k3, tmp);
    const Vec k5 = rhs(axpy(dt * b54, k4, tmp));
    tmp = axpy(dt * b61, k1, s);
    tmp = axpy(dt * b62, k2, tmp);
    tmp = axpy(dt * b63, k3, tmp);
    tmp = axpy(dt * b64, k4, tmp);
    const Vec k6 = rhs(axpy(dt * b65, k5, tmp));

    Vec snew(n + 1);
    double err = 0.0, scale = 0.0;
    for (int i = 0; i <= n; ++i) {
      snew[i] = s[i] + dt * (w1 * k1[i] + w3 * k3[i] + w4 * k4[i] + w6 * k6[i]);
      const double ei =
          dt * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i]);
      const double sc = opt.abs_tol + opt.rel_tol * std::max(std::abs(s[i]), std::abs(snew[i]));
      err = std::max(err, std::abs(ei) / sc);
      scale = std::max(scale, sc);
    }
    if (err <= 1.0) {
      s = snew;
      t += dt;
      if (++since >= stride) {
        record();
        since = 0;
      }
    }
    const double factor = (err > 0.0) ? 0.9 * std::pow(err, -0.2) : 5.0;
    dt *= std::clamp(factor, 0.1, 5.0);
  }
  if (since != 0) record();
  traj.terminal = Vec(s.begin(), s.begin() + n);
  traj.grad_sq_integral = s[n];
  return traj;
}

// ---------------------------------------------------------------------------
// Unit-speed flow dy/ds = -grad E / |grad E|.  Terminates at |grad E| <= tol
// or at a direction reversal, located by bisection; returns the arc length.

struct ArcLengthResult {
  std::vector<Vec> path;
  double length = 0.0;
  bool converged = false;
};

inline ArcLengthResult arc_length_flow(const TestFunction& f, const Vec& x0, double tol,
                                       double ds = 1e-4, double s_max = 1e3) {
  ArcLengthResult out;
  Vec y = x0;
  out.path.push_back(y);
  if (f.value(y) <= 0.0) fail(ErrorCode::BadArgument, "arc_length_flow requires E(x0) > 0");

  auto dir = [&](const Vec& p) -> Vec {
    Vec g = f.gradient(p);
    const double gn = norm(g);
    if (gn == 0.0) return Vec(f.n, 0.0);
    for (double& v : g) v /= -gn;
    return g;
  };

  int stores = 0;
  while (out.length < s_max) {
    if (norm(f.gradient(y)) <= tol) {
      out.converged = true;
      break;
    }
    // Heun step on the unit field; the direction is unit-normalized so each
    // full step advances the arc length by ds.
    const Vec d0 = dir(y);
    const Vec d1 = dir(axpy(ds, d0, y));
    Vec dm(f.n);
    for (int i = 0; i < f.n; ++i) dm[i] = 0.5 * (d0[i] + d1[i]);
    const double dm_norm = norm(dm);

    // A direction reversal or a stalled step means the critical set was
    // crossed inside this step: bisect along the incoming direction for the
    // turning point and account for the partial arc.
    if (dot(d1, d0) < 0.0 || dm_norm < 0.5) {
      double lo = 0.0, hi = ds;
      for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        const Vec p = axpy(mid, d0, y);
        if (dot(dir(p), d0) >= 0.0)
          lo = mid;
        else
          hi = mid;
      }
      out.length += 0.5 * (lo + hi);
      y = axpy(0.5 * (lo + hi), d0, y);
      out.path.push_back(y);
      out.converged = true;
      break;
    }
    for (double& v : dm) v /= dm_norm;
    y = axpy(ds, dm, y);
    out.length += ds;
    if (++stores % 64 == 0) out.path.push_back(y);
  }
  if (!out.converged) fail(ErrorCode::DidNotConverge, "arc length flow exceeded s_max");
  out.path.push_back(y);
  return out;
}

// ---------------------------------------------------------------------------
// Distance-inequality verification by log-log regression of E against the
// distance to the critical set over a ball of samples.

struct DistanceFitResult {
  double C = 0.0;
  double alpha = 0.0;
  double r2 = 0.0;
  int violations = 0;
  int samples = 0;
};

// Damped Newton polish of a critical point with finite-difference Hessian.
// Degenerate roots only converge linearly, so the budget is generous.
inline Vec polish_critical(const TestFunction& f, Vec x, int iterations = 300) {
  const double h = 1e-6;
  for (int it = 0; it < iterations; ++it) {
    const Vec g = f.gradient(x);
    const double gn = norm(g);
    if (gn < 1e-16) break;
    const int n = f.n;
    // Finite-difference Hessian.
    std::vector<Vec> H(n, Vec(n, 0.0));
    for (int j = 0; j < n; ++j) {
      Vec xp = x, xm = x;
      xp[j] += h;
      xm[j] -= h;
      const Vec gp = f.gradient(xp);
      const Vec gm = f.gradient(xm);
      for (int i = 0; i < n; ++i) H[i][j] = (gp[i] - gm[i]) / (2.0 * h);
    }
    // Solve H d = -g by Gaussian elimination with a Levenberg fallback.
    Vec d(n, 0.0);
    std::vector<Vec> M = H;
    Vec rhs(n);
    for (int i = 0; i < n; ++i) {
      M[i][i] += 1e-12;
      rhs[i] = -g[i];
    }
    for (int col = 0; col < n; ++col) {
      int piv = col;
      for (int r = col + 1; r < n; ++r)
        if (std::abs(M[r][col]) > std::abs(M[piv][col])) piv = r;
      std::swap(M[col], M[piv]);
      std::swap(rhs[col], rhs[piv]);
      if (std::abs(M[col][col]) < 1e-300) break;
      for (int r = col + 1; r < n; ++r) {
        const double fct = M[r][col] / M[col][col];
        for (int c2 = col; c2 < n; ++c2) M[r][c2] -= fct * M[col][c2];
        rhs[r] -= fct * rhs[col];
      }
    }
    for (int i = n - 1; i >= 0; --i) {
      double s = rhs[i];
      for (int c2 = i + 1; c2 < n; ++c2) s -= M[i][c2] * d[c2];
      d[i] = (std::abs(M[i][i]) > 1e-300) ? s / M[i][i] : 0.0;
    }
    double tau = 1.0;
    while (tau > 1.0 / 1024.0) {
      const Vec cand = axpy(tau, d, x);
      if (norm(f.gradient(cand)) < gn) {
        x = cand;
        break;
      }
      tau *= 0.5;
    }
    if (tau <= 1.0 / 1024.0) break;
  }
  return x;
}

inline double dist_to_critical(const TestFunction& f, const Vec& x) {
  if (f.dist_crit) return f.dist_crit(x);
  // Fallback: flow to a critical point and polish.
  FlowTrajectory tr = flow_ode(f, x, 1e4, 1e-10);
  const Vec c = polish_critical(f, tr.terminal);
  Vec d = x;
  for (int i = 0; i < f.n; ++i) d[i] -= c[i];
  return norm(d);
}

inline DistanceFitResult verify_distance_inequality(const TestFunction& f, double sample_radius,
                                                    int n_samples, uint64_t seed = 1) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(-sample_radius, sample_radius);

  std::vector<double> ld, le, es, dsv;
  for (int k = 0; k < n_samples; ++k) {
    Vec x(f.n);
    double r2sum;
    do {
      r2sum = 0.0;
      for (double& v : x) {
        v = uni(rng);
        r2sum += v * v;
      }
    } while (r2sum > sample_radius * sample_radius);
    const double d = dist_to_critical(f, x);
    const double e = f.value(x);
    if (d < 1e-10 || e <= 0.0) continue;
    ld.push_back(std::log(d));
    le.push_back(std::log(e));
    dsv.push_back(d);
    es.push_back(e);
  }

  const LineFit fit = linear_fit(ld, le);
  DistanceFitResult out;
  out.alpha = fit.slope;
  out.C = std::exp(fit.intercept);
  out.r2 = fit.r2;
  out.samples = static_cast<int>(es.size());
  for (size_t i = 0; i < es.size(); ++i)
    if (es[i] < 0.99 * out.C * std::pow(dsv[i], out.alpha)) ++out.violations;
  return out;
}

// ---------------------------------------------------------------------------
// Two-branch convergence-rate envelope.

inline double psi_envelope(double theta, double c, double gamma_minus_a, double t) {
  if (theta < 0.5 || theta >= 1.0) fail(ErrorCode::BadArgument, "theta outside [1/2, 1)");
  if (c <= 0.0) fail(ErrorCode::BadArgument, "c must be positive");
  if (gamma_minus_a <= 0.0) fail(ErrorCode::BadArgument, "gamma - a must be positive");
  if (t < 0.0) fail(ErrorCode::BadArgument, "t must be nonnegative");
  if (theta == 0.5) return (2.0 / c) * std::sqrt(gamma_minus_a) * std::exp(-c * c * t / 2.0);
  const double p = -(1.0 - theta) / (2.0 * theta - 1.0);
  const double base =
      c * c * (2.0 * theta - 1.0) * t + std::pow(gamma_minus_a, 1.0 - 2.0 * theta);
  return 1.0 / (c * (1.0 - theta)) * std::pow(base, p);
}

// Residual of int |grad E|^2 dt = E(0) - E(T) along a trajectory; uses the
// integrator-accumulated quadrature when present, else the trapezoid rule
// over the recorded samples.
inline double energy_identity_check(const FlowTrajectory& traj) {
  if (traj.samples.size() < 2) fail(ErrorCode::BadArgument, "trajectory too short");
  double integral;
  if (traj.has_exact_integral) {
    integral = traj.grad_sq_integral;
  } else {
    integral = 0.0;
    for (size_t i = 0; i + 1 < traj.samples.size(); ++i) {
      const double dt = traj.samples[i + 1].t - traj.samples[i].t;
      const double f0 = traj.samples[i].grad_norm * traj.samples[i].grad_norm;
      const double f1 = traj.samples[i + 1].grad_norm * traj.samples[i + 1].grad_norm;
      integral += 0.5 * dt * (f0 + f1);
    }
  }
  return std::abs(integral - (traj.samples.front().energy - traj.samples.back().energy));
}

}  // namespace loja
}  // namespace ym
