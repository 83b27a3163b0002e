// Minimal library walkthrough: start near a flat connection, run the slice
// flow, and read off the limit point on the pillowcase.

#include <cstdio>

#include "ym/flow.hpp"
#include "ym/random_fields.hpp"

int main() {
  using namespace ym;
  Grid grid(16);
  SpectralWorkspace ws(grid);

  const FlatBase base(kPi / 2, kPi / 2);
  const Connection initial = random_small_curvature_connection(ws, base, 12345, 0.04);
  std::printf("initial energy    %.6e\n", energy(ws, initial));

  FlowConfig cfg;
  cfg.t_max = 60.0;
  cfg.grad_tol = 1e-8;
  cfg.record_stride = 8;
  const RetractResult rr = retract(ws, initial, cfg);

  const Trajectory& tr = rr.trajectory;
  std::printf("terminal energy   %.6e after %d steps\n", tr.energy_terminal,
              tr.steps_accepted);
  std::printf("energy equality   |int - dE| = %.3e (E0 = %.3e)\n",
              tr.energy_equality_residual, tr.energy_initial);
  std::printf("pillowcase point  (%.6f, %.6f), commutator %.2e\n", rr.point.alpha,
              rr.point.beta, rr.holonomy_pair.commutator_norm);

  const DecayFit fit = fit_decay(tr, DecayQuantity::DistanceToLimit);
  std::printf("decay regime      %s (r2 = %.5f)\n",
              fit.regime == DecayFit::Regime::Exponential ? "exponential"
              : fit.regime == DecayFit::Regime::Power     ? "power"
                                                          : "undecided",
              fit.r2);
  return 0;
}
