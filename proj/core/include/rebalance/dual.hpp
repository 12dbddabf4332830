#pragma once

#include <cmath>

namespace rebalance {

// First-order forward-mode dual number: value + tangent. Arithmetic on
// Duals propagates exact directional derivatives through any computation
// written generically over the scalar type. The GAN critic update uses this
// to differentiate the gradient-penalty term (a function of an input
// gradient) with respect to network parameters without a second
// hand-derived backward pass.
struct Dual {
  double v = 0.0;
  double t = 0.0;

  constexpr Dual() = default;
  constexpr Dual(double value) : v(value) {}  // NOLINT: implicit by design
  constexpr Dual(double value, double tangent) : v(value), t(tangent) {}

  Dual& operator+=(const Dual& o) {
    v += o.v;
    t += o.t;
    return *this;
  }
  Dual& operator-=(const Dual& o) {
    v -= o.v;
    t -= o.t;
    return *this;
  }
  Dual& operator*=(const Dual& o) {
    t = t * o.v + v * o.t;
    v *= o.v;
    return *this;
  }
  Dual& operator/=(const Dual& o) {
    v /= o.v;
    t = (t - v * o.t) / o.v;
    return *this;
  }
};

constexpr Dual operator+(Dual a, const Dual& b) { return {a.v + b.v, a.t + b.t}; }
constexpr Dual operator-(Dual a, const Dual& b) { return {a.v - b.v, a.t - b.t}; }
constexpr Dual operator-(Dual a) { return {-a.v, -a.t}; }
constexpr Dual operator*(Dual a, const Dual& b) { return {a.v * b.v, a.t * b.v + a.v * b.t}; }
inline Dual operator/(Dual a, const Dual& b) {
  const double q = a.v / b.v;
  return {q, (a.t - q * b.t) / b.v};
}

constexpr bool operator<(const Dual& a, const Dual& b) { return a.v < b.v; }
constexpr bool operator>(const Dual& a, const Dual& b) { return a.v > b.v; }
constexpr bool operator<=(const Dual& a, const Dual& b) { return a.v <= b.v; }
constexpr bool operator>=(const Dual& a, const Dual& b) { return a.v >= b.v; }

inline Dual exp(const Dual& a) {
  const double e = std::exp(a.v);
  return {e, e * a.t};
}
inline Dual log(const Dual& a) { return {std::log(a.v), a.t / a.v}; }
inline Dual log1p(const Dual& a) { return {std::log1p(a.v), a.t / (1.0 + a.v)}; }
inline Dual sqrt(const Dual& a) {
  const double s = std::sqrt(a.v);
  return {s, s == 0.0 ? 0.0 : 0.5 * a.t / s};
}
inline Dual tanh(const Dual& a) {
  const double th = std::tanh(a.v);
  return {th, (1.0 - th * th) * a.t};
}
inline Dual abs(const Dual& a) { return a.v < 0.0 ? -a : a; }

// scalar-generic helpers used by the nnet templates
inline double value_of(double x) { return x; }
inline double value_of(const Dual& x) { return x.v; }

}  // namespace rebalance
