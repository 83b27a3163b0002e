#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "ym/common.hpp"

namespace ym {

struct LineFit {
  double intercept = 0.0;
  double slope = 0.0;
  double r2 = 0.0;
};

inline LineFit linear_fit(const std::vector<double>& xs, const std::vector<double>& ys) {
  const size_t n = xs.size();
  if (n < 2 || ys.size() != n) fail(ErrorCode::BadArgument, "linear_fit needs >= 2 points");
  double sx = 0.0, sy = 0.0;
  for (size_t i = 0; i < n; ++i) {
    sx += xs[i];
    sy += ys[i];
  }
  const double mx = sx / n, my = sy / n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (size_t i = 0; i < n; ++i) {
    const double dx = xs[i] - mx, dy = ys[i] - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  LineFit f;
  f.slope = (sxx > 0.0) ? sxy / sxx : 0.0;
  f.intercept = my - f.slope * mx;
  if (syy > 0.0) {
    double ssres = 0.0;
    for (size_t i = 0; i < n; ++i) {
      const double r = ys[i] - (f.intercept + f.slope * xs[i]);
      ssres += r * r;
    }
    f.r2 = 1.0 - ssres / syy;
  } else {
    f.r2 = 1.0;
  }
  return f;
}

// Decay-regime classification of a positive time series.
struct DecayFit {
  enum class Regime { Exponential, Power, Undecided };

  Regime regime = Regime::Undecided;
  // Exponential: y ~ C exp(-rate t).  Power: y ~ C t^{-q}.
  double rate = 0.0;
  double q = 0.0;
  double theta = 0.5;     // 1/2 for exponential, (1+q)/(1+2q) for power
  double r2 = 0.0;        // of the winning model
  double r2_exponential = 0.0;
  double r2_power = 0.0;
  double amplitude = 0.0;
  double offset = 0.0;    // additive proxy offset absorbed by the fit
};

namespace detail {

// Best linear fit of ln(y + w) against x over a small deterministic grid of
// offsets w.  The offset absorbs the bias of measuring decay against a
// terminal proxy instead of the true limit.
inline std::pair<LineFit, double> offset_log_fit(const std::vector<double>& xs,
                                                 const std::vector<double>& ys) {
  double ymin = std::numeric_limits<double>::infinity();
  for (double y : ys) ymin = std::min(ymin, y);
  std::vector<double> offsets{0.0};
  if (ymin > 0.0) {
    for (int i = -12; i <= 4; ++i) offsets.push_back(ymin * std::pow(2.0, i));
  }
  LineFit best;
  best.r2 = -std::numeric_limits<double>::infinity();
  double best_w = 0.0;
  std::vector<double> lny(ys.size());
  for (double w : offsets) {
    bool ok = true;
    for (size_t i = 0; i < ys.size(); ++i) {
      const double v = ys[i] + w;
      if (v <= 0.0) {
        ok = false;
        break;
      }
      lny[i] = std::log(v);
    }
    if (!ok) continue;
    const LineFit f = linear_fit(xs, lny);
    if (f.r2 > best.r2) {
      best = f;
      best_w = w;
    }
  }
  return {best, best_w};
}

}  // namespace detail

// Fit log-linear and log-log models to the tail half of a decaying series and
// classify the regime by the larger R^2.  Requires >= 20 samples and at least
// one decade of decay (terminal/initial ratio <= 0.1).
inline DecayFit fit_decay_series(const std::vector<double>& ts, const std::vector<double>& ys) {
  std::vector<double> t, y;
  for (size_t i = 0; i < ts.size(); ++i) {
    if (ts[i] > 0.0 && ys[i] > 0.0 && std::isfinite(ys[i])) {
      t.push_back(ts[i]);
      y.push_back(ys[i]);
    }
  }
  if (t.size() < 20) fail(ErrorCode::InsufficientDecay, "need at least 20 positive samples");
  if (y.back() > 0.1 * y.front())
    fail(ErrorCode::InsufficientDecay, "terminal/initial ratio above 0.1");

  // Tail half in log time.
  const double t_mid = std::sqrt(t.front() * t.back());
  std::vector<double> tw, yw;
  for (size_t i = 0; i < t.size(); ++i) {
    if (t[i] >= t_mid) {
      tw.push_back(t[i]);
      yw.push_back(y[i]);
    }
  }
  // Guard against the terminal-proxy floor: drop trailing samples already
  // within a factor ~30 of the smallest value, if enough samples remain.
  double ymin = std::numeric_limits<double>::infinity();
  for (double v : yw) ymin = std::min(ymin, v);
  std::vector<double> tg, yg;
  for (size_t i = 0; i < tw.size(); ++i) {
    if (yw[i] >= 30.0 * ymin) {
      tg.push_back(tw[i]);
      yg.push_back(yw[i]);
    }
  }
  if (tg.size() >= 10) {
    tw.swap(tg);
    yw.swap(yg);
  }
  if (tw.size() < 5) fail(ErrorCode::InsufficientDecay, "tail window too short");

  std::vector<double> lt(tw.size());
  for (size_t i = 0; i < tw.size(); ++i) lt[i] = std::log(tw[i]);

  auto [fe, we] = detail::offset_log_fit(tw, yw);   // ln y vs t
  auto [fp, wp] = detail::offset_log_fit(lt, yw);   // ln y vs ln t

  DecayFit out;
  out.r2_exponential = fe.r2;
  out.r2_power = fp.r2;
  const bool exp_wins = fe.r2 >= fp.r2;
  if (std::max(fe.r2, fp.r2) < 0.98) {
    out.regime = DecayFit::Regime::Undecided;
    out.r2 = std::max(fe.r2, fp.r2);
    return out;
  }
  if (exp_wins) {
    out.regime = DecayFit::Regime::Exponential;
    out.rate = -fe.slope;
    out.theta = 0.5;
    out.r2 = fe.r2;
    out.amplitude = std::exp(fe.intercept);
    out.offset = we;
  } else {
    out.regime = DecayFit::Regime::Power;
    out.q = -fp.slope;
    out.theta = (out.q > 0.0) ? (1.0 + out.q) / (1.0 + 2.0 * out.q) : 0.5;
    out.r2 = fp.r2;
    out.amplitude = std::exp(fp.intercept);
    out.offset = wp;
  }
  return out;
}

}  // namespace ym
