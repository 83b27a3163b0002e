// Distance-to-moduli exponents at two kinds of flat points: the product
// connection (a singular corner of the pillowcase) gives the square-root
// law, a regular interior point gives the linear one.

#include <cstdio>
#include <vector>

#include "ym/kuranishi.hpp"
#include "ym/moduli.hpp"
#include "ym/random_fields.hpp"

int main() {
  using namespace ym;
  Grid grid(8);
  SpectralWorkspace ws(grid);

  std::vector<double> ts;
  for (int i = 0; i < 12; ++i) ts.push_back(1e-3 * std::pow(100.0, i / 11.0));

  // Corner: the commuting-pair ray t(I dx + J dy) has |F| ~ t^2 but stays at
  // L^2 distance ~ t from every flat connection.
  auto corner_ray = [&](double t) {
    Connection A(FlatBase(0, 0), grid);
    A.a.x.fill({t, 0, 0});
    A.a.y.fill({0, t, 0});
    return A;
  };
  const LambdaScanResult corner = lambda_scan(ws, corner_ray, ts, 2.0);
  std::printf("corner ray:   lambda = %.4f  (C = %.4f, r2 = %.6f)\n", corner.lambda,
              corner.C, corner.r2);

  // Regular point: a ray transverse to the flat family scales linearly.
  const FlatBase base(kPi / 2, kPi / 2);
  const Connection gamma(base, grid);
  OneForm dir = covariant_d(ws, gamma, random_scalar_field(grid, 1, {1, 1.0}));
  dir *= 1.0 / l2_norm(dir);
  const LowModeSpace space = make_low_mode_space(ws, base);
  OneForm slice =
      low_mode_projection(coulomb_project(ws, random_one_form(grid, 2, {1, 1.0}), base), space)
          .perpendicular;
  slice *= 1.0 / l2_norm(slice);
  dir += slice;
  auto regular_ray = [&](double t) {
    OneForm a = dir;
    a *= t;
    return Connection(base, std::move(a));
  };
  const LambdaScanResult regular = lambda_scan(ws, regular_ray, ts, 2.0);
  std::printf("regular ray:  lambda = %.4f  (C = %.4f, r2 = %.6f)\n", regular.lambda,
              regular.C, regular.r2);
  return 0;
}
