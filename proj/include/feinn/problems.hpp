#pragma once

/// \file problems.hpp
/// Model problems (Poisson and the convection/nonlinear-reaction equation)
/// and manufactured solutions. Source and boundary data are always derived
/// from the manufactured solution by dual-number differentiation.

#include <cmath>
#include <functional>
#include <numbers>
#include <stdexcept>
#include <string>

#include "feinn/dual.hpp"
#include "feinn/mesh.hpp"

namespace feinn {

/// A smooth scalar field with exact first and second derivatives.
class ManufacturedSolution {
 public:
  ManufacturedSolution() = default;

  /// `f` is a generic callable `f(x, y)` templated on the scalar type.
  template <typename F>
  static ManufacturedSolution from(std::string name, F f) {
    ManufacturedSolution m;
    m.name_ = std::move(name);
    m.jet_ = [f](double x, double y) { return jet2(f, x, y); };
    m.value_ = [f](double x, double y) { return f(x, y); };
    return m;
  }

  const std::string& name() const { return name_; }
  double value(Point p) const { return value_(p.x, p.y); }
  Jet2 jet(Point p) const { return jet_(p.x, p.y); }
  Point gradient(Point p) const {
    Jet2 j = jet(p);
    return {j.dx, j.dy};
  }
  explicit operator bool() const { return static_cast<bool>(value_); }

 private:
  std::string name_;
  std::function<Jet2(double, double)> jet_;
  std::function<double(double, double)> value_;
};

namespace manufactured {

inline ManufacturedSolution smooth2d() {
  return ManufacturedSolution::from("smooth2d", [](auto x, auto y) {
    return sin(3.2 * x * (x - y)) * cos(x + 4.3 * y) + sin(4.6 * (x + 2.0 * y)) * cos(2.6 * (y - 2.0 * x));
  });
}

inline ManufacturedSolution sharp2d() {
  return ManufacturedSolution::from("sharp2d", [](auto x, auto y) {
    auto dx = x - 0.5;
    auto dy = y - 0.5;
    return sin(3.2 * x * (x - y)) * (5.0 * exp(-100.0 * (dx * dx + dy * dy)) + 1.0);
  });
}

inline ManufacturedSolution nonlinear2d() {
  return ManufacturedSolution::from("nonlinear2d", [](auto x, auto y) {
    auto s = x + 2.0 * y;
    return cos(std::numbers::pi * (3.0 * x + y)) / (1.0 + s * s);
  });
}

inline ManufacturedSolution invstate2d() {
  return ManufacturedSolution::from("invstate2d", [](auto x, auto y) {
    return sin(std::numbers::pi * x) * sin(std::numbers::pi * y);
  });
}

/// Reaction coefficient of the inverse benchmark, 1 + 9 exp(-5((x-1/2)^2 + (2y-1)^2)).
inline double inverse_sigma(Point p) {
  double a = p.x - 0.5, b = 2.0 * p.y - 1.0;
  return 1.0 + 9.0 * std::exp(-5.0 * (a * a + b * b));
}

/// inverse_sigma as a differentiable field, for error evaluation.
inline ManufacturedSolution inverse_coefficient() {
  return ManufacturedSolution::from("inverse_sigma", [](auto x, auto y) {
    auto a = x - 0.5;
    auto b = 2.0 * y - 1.0;
    return 1.0 + 9.0 * exp(-5.0 * (a * a + b * b));
  });
}

inline ManufacturedSolution constant(double c) {
  return ManufacturedSolution::from("constant", [c](auto x, auto) { return 0.0 * x + c; });
}

inline ManufacturedSolution by_name(const std::string& name) {
  if (name == "smooth2d") return smooth2d();
  if (name == "sharp2d") return sharp2d();
  if (name == "nonlinear2d") return nonlinear2d();
  if (name == "invstate2d") return invstate2d();
  throw std::invalid_argument("unknown manufactured solution '" + name + "'");
}

}  // namespace manufactured

enum class ProblemKind { Poisson, Nonlinear };

/// -lap u (+ beta . grad u + sigma exp(-u^2)) = f in the domain, u = g on its boundary.
struct ProblemDef {
  ProblemKind kind = ProblemKind::Poisson;
  Point beta{0.0, 0.0};
  std::function<double(Point)> sigma = [](Point) { return 0.0; };
  ManufacturedSolution exact;

  static ProblemDef poisson(ManufacturedSolution u) {
    ProblemDef p;
    p.exact = std::move(u);
    return p;
  }

  static ProblemDef nonlinear(ManufacturedSolution u, Point beta, std::function<double(Point)> sigma) {
    ProblemDef p;
    p.kind = ProblemKind::Nonlinear;
    p.exact = std::move(u);
    p.beta = beta;
    p.sigma = std::move(sigma);
    return p;
  }

  static ProblemDef nonlinear(ManufacturedSolution u, Point beta, double sigma) {
    return nonlinear(std::move(u), beta, [sigma](Point) { return sigma; });
  }

  double source(Point p) const {
    Jet2 j = exact.jet(p);
    double f = -j.laplacian();
    if (kind == ProblemKind::Nonlinear) f += beta.x * j.dx + beta.y * j.dy + sigma(p) * std::exp(-j.value * j.value);
    return f;
  }

  double dirichlet(Point p) const { return exact.value(p); }
};

}  // namespace feinn
