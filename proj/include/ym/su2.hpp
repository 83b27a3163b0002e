#pragma once

#include <array>
#include <cmath>

#include "ym/common.hpp"

namespace ym {

// su(2) element in coordinates over the basis {I, J, K} with
// [I,J] = 2K, [J,K] = 2I, [K,I] = 2J.  The inner product that makes
// this basis orthonormal is <x,y> = -tr(xy)/2.
struct AlgebraElement {
  double i = 0.0, j = 0.0, k = 0.0;

  AlgebraElement() = default;
  AlgebraElement(double ci, double cj, double ck) : i(ci), j(cj), k(ck) {}

  AlgebraElement& operator+=(const AlgebraElement& o) {
    i += o.i; j += o.j; k += o.k;
    return *this;
  }
  AlgebraElement& operator-=(const AlgebraElement& o) {
    i -= o.i; j -= o.j; k -= o.k;
    return *this;
  }
  AlgebraElement& operator*=(double s) {
    i *= s; j *= s; k *= s;
    return *this;
  }
};

inline AlgebraElement operator+(AlgebraElement a, const AlgebraElement& b) { return a += b; }
inline AlgebraElement operator-(AlgebraElement a, const AlgebraElement& b) { return a -= b; }
inline AlgebraElement operator*(double s, AlgebraElement a) { return a *= s; }
inline AlgebraElement operator*(AlgebraElement a, double s) { return a *= s; }
inline AlgebraElement operator-(const AlgebraElement& a) { return {-a.i, -a.j, -a.k}; }

// Structure constants are twice the cross product in {I,J,K} coordinates.
inline AlgebraElement bracket(const AlgebraElement& x, const AlgebraElement& y) {
  return {2.0 * (x.j * y.k - x.k * y.j),
          2.0 * (x.k * y.i - x.i * y.k),
          2.0 * (x.i * y.j - x.j * y.i)};
}

inline double inner(const AlgebraElement& x, const AlgebraElement& y) {
  return x.i * y.i + x.j * y.j + x.k * y.k;
}

inline double norm(const AlgebraElement& x) { return std::sqrt(inner(x, x)); }

inline const AlgebraElement kBasisI{1.0, 0.0, 0.0};
inline const AlgebraElement kBasisJ{0.0, 1.0, 0.0};
inline const AlgebraElement kBasisK{0.0, 0.0, 1.0};

// SU(2) element stored as a unit quaternion w + x I + y J + z K; the
// matrix algebra spanned by {1, I, J, K} is exactly the quaternions.
struct GroupElement {
  double w = 1.0, x = 0.0, y = 0.0, z = 0.0;

  GroupElement() = default;
  GroupElement(double w_, double x_, double y_, double z_) : w(w_), x(x_), y(y_), z(z_) {}

  static GroupElement identity() { return {}; }

  GroupElement conjugate() const { return {w, -x, -y, -z}; }

  double norm() const { return std::sqrt(w * w + x * x + y * y + z * z); }

  // Renormalize so long product chains stay on the group.
  void normalize() {
    const double n = norm();
    if (n > 0.0) {
      w /= n; x /= n; y /= n; z /= n;
    } else {
      *this = identity();
    }
  }

  AlgebraElement vector_part() const { return {x, y, z}; }
};

// Plain quaternion product, no renormalization.
inline GroupElement mul_raw(const GroupElement& a, const GroupElement& b) {
  return {a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z,
          a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
          a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x,
          a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w};
}

// Group product; renormalizes so long chains stay unitary with det 1.
inline GroupElement operator*(const GroupElement& a, const GroupElement& b) {
  GroupElement r = mul_raw(a, b);
  r.normalize();
  return r;
}

inline GroupElement inverse(const GroupElement& g) { return g.conjugate(); }

inline double group_dist(const GroupElement& a, const GroupElement& b) {
  return std::sqrt((a.w - b.w) * (a.w - b.w) + (a.x - b.x) * (a.x - b.x) +
                   (a.y - b.y) * (a.y - b.y) + (a.z - b.z) * (a.z - b.z));
}

// exp(theta n) = cos(theta) + sin(theta) n for a unit vector n in span{I,J,K}.
inline GroupElement exponential(const AlgebraElement& v) {
  const double theta = norm(v);
  if (theta < 1e-300) return GroupElement::identity();
  const double c = std::cos(theta);
  const double s = std::sin(theta) / theta;
  GroupElement g{c, s * v.i, s * v.j, s * v.k};
  g.normalize();
  return g;
}

// g v g^{-1} expressed in {I,J,K} coordinates; an isometry of su(2).
inline AlgebraElement adjoint(const GroupElement& g, const AlgebraElement& v) {
  const GroupElement p =
      mul_raw(mul_raw(g, GroupElement{0.0, v.i, v.j, v.k}), g.conjugate());
  return p.vector_part();
}

// Rotation angle of g about its axis, in [0, pi]; eigenvalues are e^{+-i angle}.
inline double group_angle(const GroupElement& g) {
  const double c = std::max(-1.0, std::min(1.0, g.w));
  return std::acos(c);
}

}  // namespace ym
