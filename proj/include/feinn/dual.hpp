#pragma once

/// \file dual.hpp
/// Forward-mode dual numbers. Nesting Dual<Dual<double>> yields exact second
/// derivatives, which is how source terms are derived from manufactured
/// solutions and how level-set gradients are obtained.

#include <cmath>
#include <type_traits>

namespace feinn {

template <typename T>
struct Dual {
  T v{};  ///< value
  T d{};  ///< derivative along the seeded direction

  constexpr Dual() = default;
  constexpr Dual(T value, T deriv = T{}) : v(value), d(deriv) {}
  template <typename S>
    requires std::is_arithmetic_v<S> && (!std::is_same_v<S, T>)
  constexpr Dual(S value) : v(T(value)), d(T{}) {}
};

template <typename T> struct is_dual : std::false_type {};
template <typename T> struct is_dual<Dual<T>> : std::true_type {};

/// Strips all dual layers down to the underlying double.
inline double primal(double x) { return x; }
template <typename T>
double primal(const Dual<T>& x) {
  return primal(x.v);
}

template <typename T> Dual<T> operator+(const Dual<T>& a, const Dual<T>& b) { return {a.v + b.v, a.d + b.d}; }
template <typename T> Dual<T> operator-(const Dual<T>& a, const Dual<T>& b) { return {a.v - b.v, a.d - b.d}; }
template <typename T> Dual<T> operator*(const Dual<T>& a, const Dual<T>& b) { return {a.v * b.v, a.d * b.v + a.v * b.d}; }
template <typename T> Dual<T> operator/(const Dual<T>& a, const Dual<T>& b) {
  return {a.v / b.v, (a.d * b.v - a.v * b.d) / (b.v * b.v)};
}
template <typename T> Dual<T> operator-(const Dual<T>& a) { return {-a.v, -a.d}; }

template <typename T> Dual<T> operator+(const Dual<T>& a, double b) { return {a.v + b, a.d}; }
template <typename T> Dual<T> operator+(double a, const Dual<T>& b) { return {a + b.v, b.d}; }
template <typename T> Dual<T> operator-(const Dual<T>& a, double b) { return {a.v - b, a.d}; }
template <typename T> Dual<T> operator-(double a, const Dual<T>& b) { return {a - b.v, -b.d}; }
template <typename T> Dual<T> operator*(const Dual<T>& a, double b) { return {a.v * b, a.d * b}; }
template <typename T> Dual<T> operator*(double a, const Dual<T>& b) { return {a * b.v, a * b.d}; }
template <typename T> Dual<T> operator/(const Dual<T>& a, double b) { return {a.v / b, a.d / b}; }
template <typename T> Dual<T> operator/(double a, const Dual<T>& b) {
  return {a / b.v, -a * b.d / (b.v * b.v)};
}

template <typename T> bool operator<(const Dual<T>& a, const Dual<T>& b) { return primal(a) < primal(b); }
template <typename T> bool operator>(const Dual<T>& a, const Dual<T>& b) { return primal(a) > primal(b); }

using std::atan2;
using std::cos;
using std::exp;
using std::log;
using std::sin;
using std::sqrt;
using std::tanh;

template <typename T> Dual<T> sin(const Dual<T>& a) { return {sin(a.v), a.d * cos(a.v)}; }
template <typename T> Dual<T> cos(const Dual<T>& a) { return {cos(a.v), -(a.d * sin(a.v))}; }
template <typename T> Dual<T> exp(const Dual<T>& a) {
  T e = exp(a.v);
  return {e, a.d * e};
}
template <typename T> Dual<T> log(const Dual<T>& a) { return {log(a.v), a.d / a.v}; }
template <typename T> Dual<T> sqrt(const Dual<T>& a) {
  T s = sqrt(a.v);
  return {s, a.d / (2.0 * s)};
}
template <typename T> Dual<T> tanh(const Dual<T>& a) {
  T t = tanh(a.v);
  return {t, a.d * (1.0 - t * t)};
}
template <typename T> Dual<T> atan2(const Dual<T>& y, const Dual<T>& x) {
  T r2 = x.v * x.v + y.v * y.v;
  return {atan2(y.v, x.v), (x.v * y.d - y.v * x.d) / r2};
}

/// Value, gradient and Laplacian of a scalar field at a point.
struct Jet2 {
  double value = 0.0;
  double dx = 0.0;
  double dy = 0.0;
  double dxx = 0.0;
  double dyy = 0.0;
  double laplacian() const { return dxx + dyy; }
};

/// Evaluates `f(x, y)` (a generic callable templated on the scalar type)
/// with nested duals to obtain exact first and pure second derivatives.
template <typename F>
Jet2 jet2(const F& f, double x, double y) {
  using D1 = Dual<double>;
  using D2 = Dual<D1>;
  Jet2 j;
  {
    D2 X{D1{x, 1.0}, D1{1.0, 0.0}};
    D2 Y{D1{y, 0.0}, D1{0.0, 0.0}};
    D2 r = f(X, Y);
    j.value = r.v.v;
    j.dx = r.v.d;
    j.dxx = r.d.d;
  }
  {
    D2 X{D1{x, 0.0}, D1{0.0, 0.0}};
    D2 Y{D1{y, 1.0}, D1{1.0, 0.0}};
    D2 r = f(X, Y);
    j.dy = r.v.d;
    j.dyy = r.d.d;
  }
  return j;
}

/// Value and gradient only (one dual pass per direction).
template <typename F>
Jet2 jet1(const F& f, double x, double y) {
  using D1 = Dual<double>;
  Jet2 j;
  D1 rx = f(D1{x, 1.0}, D1{y, 0.0});
  D1 ry = f(D1{x, 0.0}, D1{y, 1.0});
  j.value = rx.v;
  j.dx = rx.d;
  j.dy = ry.d;
  return j;
}

}  // namespace feinn
