#pragma once

/// \file geometry.hpp
/// Level-set geometries, cell classification and cut-cell decomposition.
///
/// Sign convention: the physical domain is {phi < 0} and its boundary is
/// {phi = 0}. Values exactly equal to zero count as outside, so a boundary
/// that runs along a mesh line is owned (as a cut) by the cell on the
/// inside.

#include <algorithm>
#include <functional>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "feinn/dual.hpp"
#include "feinn/mesh.hpp"
#include "feinn/quadrature.hpp"

namespace feinn {

struct LevelSet {
  std::function<double(Point)> value;
  std::function<Point(Point)> gradient;

  double operator()(Point p) const { return value(p); }
};

/// Wraps a generic callable `f(x, y)` (templated on the scalar type) into a
/// LevelSet whose gradient comes from dual-number differentiation.
template <typename F>
LevelSet make_level_set(F f) {
  LevelSet ls;
  ls.value = [f](Point p) { return f(p.x, p.y); };
  ls.gradient = [f](Point p) {
    Jet2 j = jet1(f, p.x, p.y);
    return Point{j.dx, j.dy};
  };
  return ls;
}

namespace shapes {

inline LevelSet disk(Point center, double radius) {
  LevelSet ls;
  ls.value = [=](Point p) { return norm(p - center) - radius; };
  ls.gradient = [=](Point p) {
    Point d = p - center;
    double r = norm(d);
    return r > 0.0 ? (1.0 / r) * d : Point{1.0, 0.0};
  };
  return ls;
}

/// Five-petal flower: rho - 0.12 (sin(5 theta) + 3) about `center`.
inline LevelSet flower(Point center) {
  return make_level_set([center](auto x, auto y) {
    auto dx = x - center.x;
    auto dy = y - center.y;
    auto rho = sqrt(dx * dx + dy * dy);
    auto theta = atan2(dy, dx);
    return rho - 0.12 * (sin(5.0 * theta) + 3.0);
  });
}

/// Half-plane {n . (x - p) < 0}; `n` need not be normalized.
inline LevelSet halfplane(Point p, Point n) {
  LevelSet ls;
  ls.value = [=](Point q) { return dot(n, q - p); };
  ls.gradient = [=](Point) { return n; };
  return ls;
}

inline LevelSet negate(LevelSet ls) {
  LevelSet out;
  out.value = [v = ls.value](Point p) { return -v(p); };
  out.gradient = [g = ls.gradient](Point p) { return -1.0 * g(p); };
  return out;
}

}  // namespace shapes

enum class CellClass { Exterior, Interior, Cut };

struct BoundarySegment {
  Point a;
  Point b;
  Point normal;  ///< unit, pointing out of the domain
  double length() const { return norm(b - a); }
};

struct CutCellGeometry {
  int cell = -1;
  std::vector<std::array<Point, 3>> triangles;
  std::vector<BoundarySegment> segments;
};

struct GeometryOptions {
  int n_sample = 4;        ///< interior samples per axis used by classification and edge scans
  double tol_root = 1e-10; ///< root tolerance on |phi|, relative to h
  int boundary_pieces = 4; ///< segments per boundary chord; interior points are projected onto phi = 0
};

/// Per-cell classes of `mesh` against `phi`. Corners plus an n_sample x
/// n_sample interior grid are sampled: all inside gives Interior, all outside
/// Exterior, anything else Cut. A cell where phi vanishes at every sample is Cut.
inline std::vector<CellClass> classify_cells(const BackgroundMesh& mesh, const LevelSet& phi, int n_sample = 4) {
  if (n_sample < 2) throw std::invalid_argument("classify_cells: n_sample must be >= 2");
  std::vector<CellClass> out(static_cast<std::size_t>(mesh.num_cells()));
  for (int c = 0; c < mesh.num_cells(); ++c) {
    Point lo = mesh.cell_lo(c), hi = mesh.cell_hi(c);
    int n_in = 0, n_out = 0, n_zero = 0;
    auto sample = [&](Point p) {
      double v = phi(p);
      if (v < 0.0) ++n_in;
      else ++n_out;
      if (v == 0.0) ++n_zero;
    };
    sample(lo);
    sample({hi.x, lo.y});
    sample(hi);
    sample({lo.x, hi.y});
    for (int b = 0; b < n_sample; ++b)
      for (int a = 0; a < n_sample; ++a)
        sample({lo.x + (hi.x - lo.x) * (a + 0.5) / n_sample, lo.y + (hi.y - lo.y) * (b + 0.5) / n_sample});
    int total = 4 + n_sample * n_sample;
    CellClass cls;
    if (n_zero == total) cls = CellClass::Cut;
    else if (n_in == total) cls = CellClass::Interior;
    else if (n_out == total) cls = CellClass::Exterior;
    else cls = CellClass::Cut;
    out[static_cast<std::size_t>(c)] = cls;
  }
  return out;
}

namespace detail {

/// Bisection for a zero of phi on [inside, outside]; phi(inside) < 0 <= phi(outside).
inline Point bisect_root(const LevelSet& phi, Point inside, Point outside, double tol) {
  if (std::abs(phi(outside)) <= tol) return outside;
  if (std::abs(phi(inside)) <= tol) return inside;
  for (int it = 0; it < 100; ++it) {
    Point mid = 0.5 * (inside + outside);
    double v = phi(mid);
    if (std::abs(v) <= tol) return mid;
    if (v < 0.0) inside = mid;
    else outside = mid;
  }
  throw std::runtime_error("root finding not converged in 100 iterations");
}

inline double cross(Point a, Point b) { return a.x * b.y - a.y * b.x; }

inline bool is_convex_ccw(const std::vector<Point>& poly) {
  std::size_t n = poly.size();
  for (std::size_t i = 0; i < n; ++i) {
    Point a = poly[i], b = poly[(i + 1) % n], c = poly[(i + 2) % n];
    if (cross(b - a, c - b) < -1e-14) return false;
  }
  return true;
}

inline bool point_in_triangle(Point p, Point a, Point b, Point c) {
  return cross(b - a, p - a) > 0.0 && cross(c - b, p - b) > 0.0 && cross(a - c, p - c) > 0.0;
}

/// Triangulates a simple counter-clockwise polygon: fan from vertex 0 when
/// convex, ear clipping otherwise.
inline std::vector<std::array<Point, 3>> triangulate(std::vector<Point> poly, double min_area) {
  std::vector<std::array<Point, 3>> tris;
  if (poly.size() < 3) return tris;
  auto keep = [&](const std::array<Point, 3>& t) {
    if (triangle_area(t) > min_area) tris.push_back(t);
  };
  if (is_convex_ccw(poly)) {
    for (std::size_t i = 1; i + 1 < poly.size(); ++i) keep({poly[0], poly[i], poly[i + 1]});
    return tris;
  }
  while (poly.size() > 3) {
    bool clipped = false;
    for (std::size_t i = 0; i < poly.size(); ++i) {
      std::size_t ip = (i + poly.size() - 1) % poly.size(), in = (i + 1) % poly.size();
      Point a = poly[ip], b = poly[i], c = poly[in];
      if (cross(b - a, c - b) <= 0.0) continue;
      bool ear = true;
      for (std::size_t k = 0; k < poly.size() && ear; ++k) {
        if (k == ip || k == i || k == in) continue;
        if (point_in_triangle(poly[k], a, b, c)) ear = false;
      }
      if (!ear) continue;
      keep({a, b, c});
      poly.erase(poly.begin() + static_cast<std::ptrdiff_t>(i));
      clipped = true;
      break;
    }
    if (!clipped) {
      // Degenerate (collinear) remainder: nothing left with positive area.
      return tris;
    }
  }
  keep({poly[0], poly[1], poly[2]});
  return tris;
}

}  // namespace detail

/// Marching-squares decomposition of one cell: sub-triangles covering
/// {phi < 0} within the cell and boundary segments of the zero level set
/// (each chord between edge crossings split into boundary_pieces segments
/// whose interior vertices lie on phi = 0) with outward unit normals.
inline CutCellGeometry subtriangulate_cut_cell(const BackgroundMesh& mesh, int cell, const LevelSet& phi,
                                               const GeometryOptions& opts = {}) {
  CutCellGeometry out;
  out.cell = cell;
  const double h = mesh.h();
  const double tol = opts.tol_root * h;
  Point lo = mesh.cell_lo(cell), hi = mesh.cell_hi(cell);
  const std::array<Point, 4> corners{lo, Point{hi.x, lo.y}, hi, Point{lo.x, hi.y}};

  enum class Kind { Corner, Entry, Exit };
  struct Event {
    Point p;
    Kind kind;
  };
  std::vector<Event> events;
  int n_cross = 0;
  const int ns = std::max(opts.n_sample, 1);
  for (int e = 0; e < 4; ++e) {
    Point a = corners[static_cast<std::size_t>(e)], b = corners[static_cast<std::size_t>((e + 1) % 4)];
    if (phi(a) < 0.0) events.push_back({a, Kind::Corner});
    int changes = 0;
    Point prev = a;
    bool prev_in = phi(a) < 0.0;
    for (int m = 1; m <= ns; ++m) {
      Point cur = a + (static_cast<double>(m) / ns) * (b - a);
      bool cur_in = phi(cur) < 0.0;
      if (cur_in != prev_in) {
        ++changes;
        if (prev_in) events.push_back({detail::bisect_root(phi, prev, cur, tol), Kind::Exit});
        else events.push_back({detail::bisect_root(phi, cur, prev, tol), Kind::Entry});
        ++n_cross;
      }
      prev = cur;
      prev_in = cur_in;
    }
    if (changes > 2) {
      throw std::runtime_error("subcell ambiguity in cell " + std::to_string(cell) +
                               ": more than 2 sign changes on one edge; refine the mesh");
    }
  }

  const double min_area = 1e-14 * mesh.cell_area();
  if (n_cross == 0) {
    // No crossing on the perimeter: either fully inside or nothing resolvable.
    if (events.size() == 4) {
      out.triangles = detail::triangulate({corners[0], corners[1], corners[2], corners[3]}, min_area);
    }
    return out;
  }

  // Rotate so that the list starts at an entry; inside arcs then read
  // entry, corners..., exit.
  auto first_entry = std::find_if(events.begin(), events.end(), [](const Event& ev) { return ev.kind == Kind::Entry; });
  std::rotate(events.begin(), first_entry, events.end());
  std::vector<std::vector<Point>> arcs;
  for (const Event& ev : events) {
    if (ev.kind == Kind::Entry) arcs.emplace_back();
    arcs.back().push_back(ev.p);
  }

  auto add_segment = [&](Point a, Point b) {
    double len = norm(b - a);
    if (len <= 1e-14 * h) return;
    Point n{(b.y - a.y) / len, -(b.x - a.x) / len};
    Point g = phi.gradient(0.5 * (a + b));
    if (dot(n, g) < 0.0) n = -1.0 * n;
    out.segments.push_back({a, b, n});
  };

  // Points of the zero level set strictly between chord endpoints a and b,
  // found along the chord normal and kept inside the cell.
  const int pieces = std::max(opts.boundary_pieces, 1);
  auto inner_points = [&](Point a, Point b) {
    std::vector<Point> pts;
    double len = norm(b - a);
    if (pieces == 1 || len <= 1e-14 * h) return pts;
    Point n{-(b.y - a.y) / len, (b.x - a.x) / len};
    if (dot(n, phi.gradient(0.5 * (a + b))) < 0.0) n = -1.0 * n;
    for (int m = 1; m < pieces; ++m) {
      Point p = a + (static_cast<double>(m) / pieces) * (b - a);
      double v = phi(p);
      Point q = p;
      if (std::abs(v) > tol) {
        Point dir = v < 0.0 ? n : -1.0 * n;
        const int steps = 16;
        Point prev = p;
        for (int s = 1; s <= steps; ++s) {
          double t = len * s / steps;
          // Clip the last step to the cell boundary.
          if (dir.x > 0.0) t = std::min(t, (hi.x - p.x) / dir.x);
          if (dir.x < 0.0) t = std::min(t, (lo.x - p.x) / dir.x);
          if (dir.y > 0.0) t = std::min(t, (hi.y - p.y) / dir.y);
          if (dir.y < 0.0) t = std::min(t, (lo.y - p.y) / dir.y);
          if (t <= 0.0) break;
          Point cur = p + t * dir;
          cur = {std::clamp(cur.x, lo.x, hi.x), std::clamp(cur.y, lo.y, hi.y)};
          if ((phi(cur) < 0.0) != (v < 0.0)) {
            q = v < 0.0 ? detail::bisect_root(phi, prev, cur, tol) : detail::bisect_root(phi, cur, prev, tol);
            break;
          }
          if (t < len * s / steps) break;
          prev = cur;
        }
      }
      pts.push_back(q);
    }
    return pts;
  };
  // Appends the boundary path from a to b (exclusive of both) to poly and
  // records its segments.
  auto boundary_path = [&](Point a, Point b, std::vector<Point>* poly) {
    std::vector<Point> mid = inner_points(a, b);
    Point prev = a;
    for (Point q : mid) {
      add_segment(prev, q);
      if (poly) poly->push_back(q);
      prev = q;
    }
    add_segment(prev, b);
  };

  const bool center_inside = phi(0.5 * (lo + hi)) < 0.0;
  if (arcs.size() == 1 || !center_inside) {
    // Each inside arc closed by its own boundary path.
    for (auto arc : arcs) {
      Point exit = arc.back(), entry = arc.front();
      boundary_path(exit, entry, &arc);
      auto tris = detail::triangulate(arc, min_area);
      out.triangles.insert(out.triangles.end(), tris.begin(), tris.end());
    }
  } else {
    // Arcs joined into one region; boundary paths cut off the outside pockets.
    std::vector<Point> poly;
    for (std::size_t k = 0; k < arcs.size(); ++k) {
      poly.insert(poly.end(), arcs[k].begin(), arcs[k].end());
      boundary_path(arcs[k].back(), arcs[(k + 1) % arcs.size()].front(), &poly);
    }
    out.triangles = detail::triangulate(poly, min_area);
  }
  return out;
}

/// Classification plus sub-triangulation of every cut cell of a mesh.
class CutDecomposition {
 public:
  CutDecomposition() = default;

  CutDecomposition(const BackgroundMesh& mesh, const LevelSet& phi, const GeometryOptions& opts = {})
      : mesh_(mesh), phi_(phi), opts_(opts) {
    classes_ = classify_cells(mesh, phi, opts.n_sample);
    cut_index_.assign(classes_.size(), -1);
    for (int c = 0; c < mesh.num_cells(); ++c) {
      CellClass k = classes_[static_cast<std::size_t>(c)];
      if (k == CellClass::Exterior) continue;
      active_.push_back(c);
      if (k == CellClass::Cut) {
        cut_index_[static_cast<std::size_t>(c)] = static_cast<int>(cut_.size());
        cut_.push_back(subtriangulate_cut_cell(mesh, c, phi, opts));
        cut_cells_.push_back(c);
      } else {
        interior_cells_.push_back(c);
      }
    }
  }

  const BackgroundMesh& mesh() const { return mesh_; }
  const LevelSet& level_set() const { return phi_; }
  const GeometryOptions& options() const { return opts_; }
  CellClass cell_class(int c) const { return classes_[static_cast<std::size_t>(c)]; }
  const std::vector<CellClass>& classes() const { return classes_; }
  bool is_active(int c) const { return cell_class(c) != CellClass::Exterior; }
  const std::vector<int>& active_cells() const { return active_; }
  const std::vector<int>& cut_cells() const { return cut_cells_; }
  const std::vector<int>& interior_cells() const { return interior_cells_; }

  /// Cut geometry of a Cut cell, nullptr otherwise.
  const CutCellGeometry* cut_geometry(int c) const {
    int k = cut_index_[static_cast<std::size_t>(c)];
    return k < 0 ? nullptr : &cut_[static_cast<std::size_t>(k)];
  }

 private:
  BackgroundMesh mesh_;
  LevelSet phi_;
  GeometryOptions opts_;
  std::vector<CellClass> classes_;
  std::vector<int> active_;
  std::vector<int> cut_cells_;
  std::vector<int> interior_cells_;
  std::vector<int> cut_index_;
  std::vector<CutCellGeometry> cut_;
};

/// Quadrature over (cell intersected with the domain): tensor Gauss on
/// interior cells, union of triangle rules on cut cells.
inline QuadratureRule cut_volume_quadrature(const CutDecomposition& decomp, int cell, int degree) {
  if (degree < 1) throw std::invalid_argument("cut_volume_quadrature: degree must be >= 1");
  const auto& mesh = decomp.mesh();
  switch (decomp.cell_class(cell)) {
    case CellClass::Interior:
      return tensor_rule(mesh.cell_lo(cell), mesh.cell_hi(cell), degree);
    case CellClass::Cut: {
      QuadratureRule q;
      for (const auto& t : decomp.cut_geometry(cell)->triangles) q.append(triangle_rule(t, degree));
      return q;
    }
    case CellClass::Exterior:
      break;
  }
  throw std::invalid_argument("cut_volume_quadrature: cell " + std::to_string(cell) + " is not active");
}

/// Gauss rule on the boundary segments of a cut cell; each point carries its
/// outward normal.
inline QuadratureRule boundary_quadrature(const CutDecomposition& decomp, int cell, int degree) {
  const CutCellGeometry* g = decomp.cut_geometry(cell);
  if (g == nullptr || g->segments.empty()) {
    throw std::invalid_argument("boundary_quadrature: cell " + std::to_string(cell) + " has no boundary segments");
  }
  QuadratureRule q;
  for (const auto& s : g->segments) q.append(segment_rule(s.a, s.b, degree, s.normal));
  return q;
}

inline bool has_boundary(const CutDecomposition& decomp, int cell) {
  const CutCellGeometry* g = decomp.cut_geometry(cell);
  return g != nullptr && !g->segments.empty();
}

/// Measure of the discrete domain (sum of volume quadrature weights).
inline double domain_area(const CutDecomposition& decomp) {
  double a = 0.0;
  for (int c : decomp.active_cells()) a += cut_volume_quadrature(decomp, c, 1).total_weight();
  return a;
}

}  // namespace feinn
