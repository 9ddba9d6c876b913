#pragma once

/// \file quadrature.hpp
/// Gauss-Legendre rules on intervals, tensor rules on rectangles and
/// collapsed (Duffy) rules on triangles.

#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "feinn/mesh.hpp"

namespace feinn {

struct QuadratureRule {
  std::vector<Point> points;
  std::vector<double> weights;
  /// Unit outward normals, filled only for boundary rules.
  std::vector<Point> normals;

  std::size_t size() const { return points.size(); }
  double total_weight() const {
    double s = 0.0;
    for (double w : weights) s += w;
    return s;
  }
  void append(const QuadratureRule& other) {
    points.insert(points.end(), other.points.begin(), other.points.end());
    weights.insert(weights.end(), other.weights.begin(), other.weights.end());
    normals.insert(normals.end(), other.normals.begin(), other.normals.end());
  }
};

/// n-point Gauss-Legendre nodes and weights on [0, 1].
struct GaussLegendre1D {
  std::vector<double> x;
  std::vector<double> w;
};

inline GaussLegendre1D gauss_legendre(int n) {
  if (n < 1) throw std::invalid_argument("gauss_legendre: need at least one point");
  GaussLegendre1D r;
  r.x.resize(static_cast<std::size_t>(n));
  r.w.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    // Newton iteration on P_n from the Chebyshev-like initial guess.
    double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 1.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = 0.0;
      for (int k = 1; k <= n; ++k) {
        double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p2) / k;
      }
      dp = n * (z * p0 - p1) / (z * z - 1.0);
      double dz = p0 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    // Recompute derivative at the converged root.
    double p0 = 1.0, p1 = 0.0;
    for (int k = 1; k <= n; ++k) {
      double p2 = p1;
      p1 = p0;
      p0 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p2) / k;
    }
    dp = n * (z * p0 - p1) / (z * z - 1.0);
    auto idx = static_cast<std::size_t>(n - 1 - i);
    r.x[idx] = 0.5 * (1.0 + z);
    r.w[idx] = 1.0 / ((1.0 - z * z) * dp * dp);
  }
  return r;
}

/// Number of Gauss points per direction integrating degree `degree` exactly.
inline int gauss_points_for_degree(int degree) { return degree / 2 + 1; }

inline QuadratureRule tensor_rule(Point lo, Point hi, int degree) {
  if (degree < 1) throw std::invalid_argument("tensor_rule: degree must be >= 1");
  auto g = gauss_legendre(gauss_points_for_degree(degree));
  QuadratureRule q;
  double dx = hi.x - lo.x, dy = hi.y - lo.y;
  for (std::size_t j = 0; j < g.x.size(); ++j) {
    for (std::size_t i = 0; i < g.x.size(); ++i) {
      q.points.push_back({lo.x + dx * g.x[i], lo.y + dy * g.x[j]});
      q.weights.push_back(dx * dy * g.w[i] * g.w[j]);
    }
  }
  return q;
}

inline double triangle_area(const std::array<Point, 3>& t) {
  return 0.5 * ((t[1].x - t[0].x) * (t[2].y - t[0].y) - (t[2].x - t[0].x) * (t[1].y - t[0].y));
}

/// Collapsed-coordinate rule on a triangle, exact for total degree `degree`.
inline QuadratureRule triangle_rule(const std::array<Point, 3>& t, int degree) {
  if (degree < 1) throw std::invalid_argument("triangle_rule: degree must be >= 1");
  auto g = gauss_legendre((degree + 3) / 2);
  double two_area = 2.0 * std::abs(triangle_area(t));
  Point e1 = t[1] - t[0], e2 = t[2] - t[0];
  QuadratureRule q;
  for (std::size_t i = 0; i < g.x.size(); ++i) {
    double u = g.x[i];
    for (std::size_t j = 0; j < g.x.size(); ++j) {
      double v = g.x[j] * (1.0 - u);
      q.points.push_back(t[0] + u * e1 + v * e2);
      q.weights.push_back(two_area * (1.0 - u) * g.w[i] * g.w[j]);
    }
  }
  return q;
}

/// Gauss rule on the segment a-b, exact for polynomials of degree `degree` along it.
inline QuadratureRule segment_rule(Point a, Point b, int degree, Point normal) {
  auto g = gauss_legendre(gauss_points_for_degree(degree));
  double len = norm(b - a);
  QuadratureRule q;
  for (std::size_t i = 0; i < g.x.size(); ++i) {
    q.points.push_back(a + g.x[i] * (b - a));
    q.weights.push_back(len * g.w[i]);
    q.normals.push_back(normal);
  }
  return q;
}

}  // namespace feinn
