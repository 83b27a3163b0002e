#pragma once

#include <fftw3.h>

#include <algorithm>
#include <array>
#include <complex>
#include <map>
#include <mutex>
#include <vector>

#include "ym/common.hpp"
#include "ym/grid.hpp"

namespace ym {

using Complex = std::complex<double>;

// Spectral image of an su(2) field, one complex plane per algebra coordinate,
// FFTW layout (row-major, x fastest), unnormalized forward transform.
struct SpectralSu2 {
  Grid grid;
  std::vector<Complex> data;

  SpectralSu2() = default;
  explicit SpectralSu2(Grid g) : grid(g), data(3 * g.sites(), Complex{0.0, 0.0}) {}

  Complex* plane(int c) { return data.data() + c * grid.sites(); }
  const Complex* plane(int c) const { return data.data() + c * grid.sites(); }
};

struct SpectralOneForm {
  SpectralSu2 x, y;

  SpectralOneForm() = default;
  explicit SpectralOneForm(Grid g) : x(g), y(g) {}

  const Grid& grid() const { return x.grid; }
};

enum class Axis { X, Y };

// Pointwise ad(K) eigencomponents used by all flat-base mode arithmetic:
// s = 0 is the K coordinate, s = 1 the (I - iJ)/... coefficient with
// ad(K) eigenvalue +2i, s = 2 its conjugate partner with eigenvalue -2i.
inline void split_adk(const Complex& zi, const Complex& zj, const Complex& zk,
                      Complex& z0, Complex& zp, Complex& zm) {
  z0 = zk;
  zp = 0.5 * (zi + Complex{0.0, 1.0} * zj);
  zm = 0.5 * (zi - Complex{0.0, 1.0} * zj);
}

inline void merge_adk(const Complex& z0, const Complex& zp, const Complex& zm,
                      Complex& zi, Complex& zj, Complex& zk) {
  zk = z0;
  zi = zp + zm;
  zj = Complex{0.0, 1.0} * (zm - zp);
}

// Shifted wavenumber tables for a flat diagonal base:
// m = 2 pi k + {0, +2, -2} * angle per eigencomponent.
struct BaseModes {
  double alpha = 0.0, beta = 0.0;
  std::array<std::vector<double>, 3> mx, my;
  double max_eig = 0.0;

  double eig(int s, int ix, int iy) const {
    const double a = mx[s][ix], b = my[s][iy];
    return a * a + b * b;
  }
  // Default kernel threshold: tiny relative to the largest mode eigenvalue.
  double default_kernel_threshold() const { return 1e-10 * max_eig; }
};

// Transform plans, wavenumber tables, and per-base mode caches. Single-owner:
// one workspace per concurrent evaluation stream; independent workspaces may
// run in parallel.
class SpectralWorkspace {
public:
  explicit SpectralWorkspace(Grid g) : grid_(g) {
    const int n = g.n;
    std::lock_guard<std::mutex> lock(plan_mutex());
    in_ = fftw_alloc_complex(g.sites());
    out_ = fftw_alloc_complex(g.sites());
    fwd_ = fftw_plan_dft_2d(n, n, in_, out_, FFTW_FORWARD, FFTW_ESTIMATE);
    bwd_ = fftw_plan_dft_2d(n, n, in_, out_, FFTW_BACKWARD, FFTW_ESTIMATE);
    wave_.resize(n);
    for (int i = 0; i < n; ++i) {
      const int k = (i < n / 2) ? i : i - n;
      wave_[i] = kTwoPi * k;
    }
  }

  ~SpectralWorkspace() {
    std::lock_guard<std::mutex> lock(plan_mutex());
    fftw_destroy_plan(fwd_);
    fftw_destroy_plan(bwd_);
    fftw_free(in_);
    fftw_free(out_);
  }

  SpectralWorkspace(const SpectralWorkspace&) = delete;
  SpectralWorkspace& operator=(const SpectralWorkspace&) = delete;

  const Grid& grid() const { return grid_; }
  double wavenumber(int i) const { return wave_[i]; }
  int nyquist_index() const { return grid_.n / 2; }

  void forward_plane(const double* re, Complex* out) {
    const int m = grid_.sites();
    for (int i = 0; i < m; ++i) {
      in_[i][0] = re[i];
      in_[i][1] = 0.0;
    }
    fftw_execute(fwd_);
    for (int i = 0; i < m; ++i) out[i] = Complex{out_[i][0], out_[i][1]};
  }

  void inverse_plane(const Complex* in, double* re) {
    const int m = grid_.sites();
    for (int i = 0; i < m; ++i) {
      in_[i][0] = in[i].real();
      in_[i][1] = in[i].imag();
    }
    fftw_execute(bwd_);
    const double scale = 1.0 / m;
    for (int i = 0; i < m; ++i) re[i] = out_[i][0] * scale;
  }

  SpectralSu2 forward(const Su2Field& f) {
    check_grid(f.grid());
    SpectralSu2 s(grid_);
    for (int c = 0; c < 3; ++c) forward_plane(f.plane(c), s.plane(c));
    return s;
  }

  Su2Field inverse(const SpectralSu2& s) {
    check_grid(s.grid);
    Su2Field f(grid_);
    for (int c = 0; c < 3; ++c) inverse_plane(s.plane(c), f.plane(c));
    return f;
  }

  SpectralOneForm forward(const OneForm& a) {
    SpectralOneForm s(grid_);
    s.x = forward(a.x);
    s.y = forward(a.y);
    return s;
  }

  OneForm inverse(const SpectralOneForm& s) {
    OneForm a(grid_);
    a.x = inverse(s.x);
    a.y = inverse(s.y);
    return a;
  }

  // Exact derivative of the band-limited interpolant; the Nyquist mode of
  // the derivative is zeroed.
  void derivative_inplace(SpectralSu2& s, Axis axis) const {
    const int n = grid_.n;
    const int ny = nyquist_index();
    for (int c = 0; c < 3; ++c) {
      Complex* p = s.plane(c);
      for (int iy = 0; iy < n; ++iy) {
        for (int ix = 0; ix < n; ++ix) {
          const int idx = iy * n + ix;
          const int mode = (axis == Axis::X) ? ix : iy;
          if (mode == ny) {
            p[idx] = Complex{0.0, 0.0};
          } else {
            const double m = wave_[mode];
            p[idx] *= Complex{0.0, m};
          }
        }
      }
    }
  }

  Su2Field spectral_derivative(const Su2Field& f, Axis axis) {
    SpectralSu2 s = forward(f);
    derivative_inplace(s, axis);
    return inverse(s);
  }

  // Zero the Nyquist lines: projection onto the dealiased band that all
  // per-mode operator arithmetic works in.
  void zero_nyquist(SpectralSu2& s) const {
    const int n = grid_.n;
    const int nyq = n / 2;
    for (int c = 0; c < 3; ++c) {
      Complex* p = s.plane(c);
      for (int iy = 0; iy < n; ++iy)
        for (int ix = 0; ix < n; ++ix)
          if (ix == nyq || iy == nyq) p[iy * n + ix] = Complex{0.0, 0.0};
    }
  }

  Su2Field band_filter(const Su2Field& f) {
    SpectralSu2 s = forward(f);
    zero_nyquist(s);
    return inverse(s);
  }

  // Derivative of a single real plane (used for group-valued fields).
  void derivative_plane(const double* re, double* out, Axis axis) {
    std::vector<Complex> tmp(grid_.sites());
    forward_plane(re, tmp.data());
    const int n = grid_.n;
    const int ny = nyquist_index();
    for (int iy = 0; iy < n; ++iy) {
      for (int ix = 0; ix < n; ++ix) {
        const int idx = iy * n + ix;
        const int mode = (axis == Axis::X) ? ix : iy;
        if (mode == ny) {
          tmp[idx] = Complex{0.0, 0.0};
        } else {
          tmp[idx] *= Complex{0.0, wave_[mode]};
        }
      }
    }
    inverse_plane(tmp.data(), out);
  }

  // Shifted-wavenumber tables for the flat base Gamma(alpha, beta);
  // cached per base so per-mode factorizations are reused.
  const BaseModes& modes(double alpha, double beta) {
    const auto key = std::make_pair(alpha, beta);
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;

    BaseModes bm;
    bm.alpha = alpha;
    bm.beta = beta;
    const int n = grid_.n;
    const double shift[3] = {0.0, 2.0, -2.0};
    for (int s = 0; s < 3; ++s) {
      bm.mx[s].resize(n);
      bm.my[s].resize(n);
      for (int i = 0; i < n; ++i) {
        bm.mx[s][i] = wave_[i] + shift[s] * alpha;
        bm.my[s][i] = wave_[i] + shift[s] * beta;
      }
    }
    for (int s = 0; s < 3; ++s)
      for (int ix = 0; ix < n; ++ix)
        for (int iy = 0; iy < n; ++iy) bm.max_eig = std::max(bm.max_eig, bm.eig(s, ix, iy));
    return cache_.emplace(key, std::move(bm)).first->second;
  }

private:
  static std::mutex& plan_mutex() {
    static std::mutex m;
    return m;
  }

  void check_grid(const Grid& g) const {
    if (g != grid_) fail(ErrorCode::BadArgument, "workspace grid mismatch");
  }

  Grid grid_;
  fftw_complex* in_ = nullptr;
  fftw_complex* out_ = nullptr;
  fftw_plan fwd_{};
  fftw_plan bwd_{};
  std::vector<double> wave_;
  std::map<std::pair<double, double>, BaseModes> cache_;
};

// ---------------------------------------------------------------------------
// L^2 pairings and norms. The site sum carries the cell area h^2, so the
// torus has unit total area.

inline double l2_inner(const Su2Field& f, const Su2Field& g) {
  if (f.grid() != g.grid()) fail(ErrorCode::BadArgument, "grid mismatch");
  double s = 0.0;
  for (int c = 0; c < 3; ++c) {
    const double* a = f.plane(c);
    const double* b = g.plane(c);
    for (int i = 0; i < f.sites(); ++i) s += a[i] * b[i];
  }
  return s * f.grid().h() * f.grid().h();
}

inline double l2_inner(const OneForm& a, const OneForm& b) {
  return l2_inner(a.x, b.x) + l2_inner(a.y, b.y);
}

inline double l2_inner(const TwoForm& a, const TwoForm& b) { return l2_inner(a.f, b.f); }

template <typename T>
double l2_norm(const T& f) {
  return std::sqrt(std::max(0.0, l2_inner(f, f)));
}

inline double site_norm2(const Su2Field& f, int idx) {
  const AlgebraElement v = f.at(idx);
  return inner(v, v);
}

inline double site_norm2(const OneForm& a, int idx) {
  return site_norm2(a.x, idx) + site_norm2(a.y, idx);
}

inline double site_norm2(const TwoForm& w, int idx) { return site_norm2(w.f, idx); }

// (h^2 sum |f|^p)^(1/p); p = infinity gives the pointwise max norm.
template <typename T>
double lp_norm(const T& f, double p) {
  if (p < 1.0) fail(ErrorCode::BadArgument, "lp_norm requires p >= 1");
  const Grid& g = f.grid();
  if (std::isinf(p)) {
    double m = 0.0;
    for (int i = 0; i < g.sites(); ++i) m = std::max(m, site_norm2(f, i));
    return std::sqrt(m);
  }
  double s = 0.0;
  for (int i = 0; i < g.sites(); ++i) s += std::pow(site_norm2(f, i), 0.5 * p);
  return std::pow(s * g.h() * g.h(), 1.0 / p);
}

// W^{1,p} norm with the flat spectral gradient of each component:
// (sum h^2 (|f|^p + |grad f|^p))^(1/p); order 0 omits the gradient term.
// For p = infinity the ess-sup of each term is summed.
inline double sobolev_norm(SpectralWorkspace& ws, const OneForm& a, double p, int order) {
  if (p < 1.0) fail(ErrorCode::BadArgument, "sobolev_norm requires p >= 1");
  if (order < 0 || order > 1) fail(ErrorCode::BadArgument, "sobolev_norm order must be 0 or 1");
  const Grid& g = a.grid();

  std::vector<double> grad2;
  if (order == 1) {
    grad2.assign(g.sites(), 0.0);
    for (const Su2Field* comp : {&a.x, &a.y}) {
      for (Axis ax : {Axis::X, Axis::Y}) {
        Su2Field d = ws.spectral_derivative(*comp, ax);
        for (int i = 0; i < g.sites(); ++i) grad2[i] += site_norm2(d, i);
      }
    }
  }

  if (std::isinf(p)) {
    double mf = 0.0, mg = 0.0;
    for (int i = 0; i < g.sites(); ++i) {
      mf = std::max(mf, site_norm2(a, i));
      if (order == 1) mg = std::max(mg, grad2[i]);
    }
    return std::sqrt(mf) + (order == 1 ? std::sqrt(mg) : 0.0);
  }

  double s = 0.0;
  for (int i = 0; i < g.sites(); ++i) {
    s += std::pow(site_norm2(a, i), 0.5 * p);
    if (order == 1) s += std::pow(grad2[i], 0.5 * p);
  }
  return std::pow(s * g.h() * g.h(), 1.0 / p);
}

// Fourier-side L^2 norm; equals the site-sum norm by Parseval.
inline double spectral_l2_norm(const SpectralSu2& s) {
  double acc = 0.0;
  for (const Complex& z : s.data) acc += std::norm(z);
  const double m = s.grid.sites();
  return std::sqrt(acc) / m;
}

inline double spectral_l2_norm(const SpectralOneForm& s) {
  double ax = spectral_l2_norm(s.x);
  double ay = spectral_l2_norm(s.y);
  return std::sqrt(ax * ax + ay * ay);
}

}  // namespace ym
