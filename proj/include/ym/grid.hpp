#pragma once

#include <cstddef>
#include <vector>

#include "ym/common.hpp"
#include "ym/su2.hpp"

namespace ym {

// Periodic N x N grid over the unit torus [0,1)^2, spacing h = 1/N.
// N must be even and at least 4 so Nyquist handling is well defined.
struct Grid {
  int n = 0;

  Grid() = default;
  explicit Grid(int n_) : n(n_) {
    if (n < 4 || n % 2 != 0) fail(ErrorCode::BadArgument, "grid size must be even and >= 4");
  }

  double h() const { return 1.0 / n; }
  int sites() const { return n * n; }
  int index(int ix, int iy) const { return iy * n + ix; }
  double x(int ix) const { return ix * h(); }
  double y(int iy) const { return iy * h(); }

  bool operator==(const Grid& o) const { return n == o.n; }
  bool operator!=(const Grid& o) const { return n != o.n; }
};

// su(2)-valued lattice field; one contiguous plane per algebra coordinate
// so transforms can run per component. Site order is row-major, x fastest.
class Su2Field {
public:
  Su2Field() = default;
  explicit Su2Field(Grid g) : grid_(g), data_(3 * g.sites(), 0.0) {}

  const Grid& grid() const { return grid_; }
  int sites() const { return grid_.sites(); }

  double* plane(int c) { return data_.data() + c * sites(); }
  const double* plane(int c) const { return data_.data() + c * sites(); }

  AlgebraElement at(int idx) const {
    return {plane(0)[idx], plane(1)[idx], plane(2)[idx]};
  }
  void set(int idx, const AlgebraElement& v) {
    plane(0)[idx] = v.i;
    plane(1)[idx] = v.j;
    plane(2)[idx] = v.k;
  }
  void add(int idx, const AlgebraElement& v) {
    plane(0)[idx] += v.i;
    plane(1)[idx] += v.j;
    plane(2)[idx] += v.k;
  }

  void fill(const AlgebraElement& v) {
    for (int s = 0; s < sites(); ++s) set(s, v);
  }

  Su2Field& operator+=(const Su2Field& o) {
    check_same(o);
    for (size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
    return *this;
  }
  Su2Field& operator-=(const Su2Field& o) {
    check_same(o);
    for (size_t i = 0; i < data_.size(); ++i) data_[i] -= o.data_[i];
    return *this;
  }
  Su2Field& operator*=(double s) {
    for (double& v : data_) v *= s;
    return *this;
  }

  std::vector<double>& raw() { return data_; }
  const std::vector<double>& raw() const { return data_; }

private:
  void check_same(const Su2Field& o) const {
    if (grid_ != o.grid_) fail(ErrorCode::BadArgument, "grid mismatch");
  }

  Grid grid_;
  std::vector<double> data_;
};

inline Su2Field operator+(Su2Field a, const Su2Field& b) { return a += b; }
inline Su2Field operator-(Su2Field a, const Su2Field& b) { return a -= b; }
inline Su2Field operator*(double s, Su2Field f) { return f *= s; }

// Pointwise bracket of two fields.
inline Su2Field bracket(const Su2Field& a, const Su2Field& b) {
  Su2Field r(a.grid());
  for (int s = 0; s < a.sites(); ++s) r.set(s, bracket(a.at(s), b.at(s)));
  return r;
}

// su(2)-valued one-form with components along dx and dy.
struct OneForm {
  Su2Field x, y;

  OneForm() = default;
  explicit OneForm(Grid g) : x(g), y(g) {}

  const Grid& grid() const { return x.grid(); }

  OneForm& operator+=(const OneForm& o) {
    x += o.x; y += o.y;
    return *this;
  }
  OneForm& operator-=(const OneForm& o) {
    x -= o.x; y -= o.y;
    return *this;
  }
  OneForm& operator*=(double s) {
    x *= s; y *= s;
    return *this;
  }
};

inline OneForm operator+(OneForm a, const OneForm& b) { return a += b; }
inline OneForm operator-(OneForm a, const OneForm& b) { return a -= b; }
inline OneForm operator*(double s, OneForm f) { return f *= s; }

// su(2)-valued two-form; f is the coefficient of dx ^ dy.
struct TwoForm {
  Su2Field f;

  TwoForm() = default;
  explicit TwoForm(Grid g) : f(g) {}

  const Grid& grid() const { return f.grid(); }

  TwoForm& operator+=(const TwoForm& o) { f += o.f; return *this; }
  TwoForm& operator-=(const TwoForm& o) { f -= o.f; return *this; }
  TwoForm& operator*=(double s) { f *= s; return *this; }
};

inline TwoForm operator-(TwoForm a, const TwoForm& b) { return a -= b; }
inline TwoForm operator+(TwoForm a, const TwoForm& b) { return a += b; }

// Per-site SU(2) gauge transformation, stored as unit quaternion planes.
class GaugeTransform {
public:
  GaugeTransform() = default;
  explicit GaugeTransform(Grid g) : grid_(g), data_(4 * g.sites(), 0.0) {
    for (int s = 0; s < g.sites(); ++s) data_[0 * g.sites() + s] = 1.0;
  }

  const Grid& grid() const { return grid_; }
  int sites() const { return grid_.sites(); }

  double* plane(int c) { return data_.data() + c * sites(); }
  const double* plane(int c) const { return data_.data() + c * sites(); }

  GroupElement at(int idx) const {
    return {plane(0)[idx], plane(1)[idx], plane(2)[idx], plane(3)[idx]};
  }
  void set(int idx, const GroupElement& g) {
    plane(0)[idx] = g.w;
    plane(1)[idx] = g.x;
    plane(2)[idx] = g.y;
    plane(3)[idx] = g.z;
  }

  // s <- s * t pointwise (right composition of gauge actions).
  void compose_right(const GaugeTransform& t) {
    for (int s = 0; s < sites(); ++s) set(s, at(s) * t.at(s));
  }

private:
  Grid grid_;
  std::vector<double> data_;
};

// exp of an su(2) scalar field, per site.
inline GaugeTransform exponential(const Su2Field& chi) {
  GaugeTransform u(chi.grid());
  for (int s = 0; s < chi.sites(); ++s) u.set(s, exponential(chi.at(s)));
  return u;
}

}  // namespace ym
