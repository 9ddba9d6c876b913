#pragma once

/// \file fespace.hpp
/// Scalar continuous Lagrange spaces on the active cells of a Cartesian
/// mesh, the linearized (order one, refined mesh) test space, cell
/// aggregation for the test space and the nodal interpolation operator.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "feinn/geometry.hpp"
#include "feinn/linalg.hpp"
#include "feinn/mesh.hpp"

namespace feinn {

/// Equispaced 1D Lagrange basis of order k on [0, 1].
class Lagrange1D {
 public:
  explicit Lagrange1D(int k = 1) : k_(k) {
    if (k < 1) throw std::invalid_argument("Lagrange1D: order must be >= 1");
    nodes_.resize(static_cast<std::size_t>(k) + 1);
    for (int i = 0; i <= k; ++i) nodes_[static_cast<std::size_t>(i)] = static_cast<double>(i) / k;
    denom_.resize(nodes_.size());
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
      double d = 1.0;
      for (std::size_t j = 0; j < nodes_.size(); ++j)
        if (j != i) d *= nodes_[i] - nodes_[j];
      denom_[i] = d;
    }
  }

  int order() const { return k_; }
  int size() const { return k_ + 1; }
  const std::vector<double>& nodes() const { return nodes_; }

  /// Values and derivatives of all k+1 basis functions at t (any real t).
  void eval(double t, double* val, double* der) const {
    const std::size_t n = nodes_.size();
    for (std::size_t i = 0; i < n; ++i) {
      double p = 1.0, dp = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        if (j == i) continue;
        double f = t - nodes_[j];
        dp = dp * f + p;
        p *= f;
      }
      val[i] = p / denom_[i];
      der[i] = dp / denom_[i];
    }
  }

 private:
  int k_;
  std::vector<double> nodes_;
  std::vector<double> denom_;
};

/// Shape function values and physical gradients at one point.
struct ShapeEval {
  std::vector<double> value;
  std::vector<double> dx;
  std::vector<double> dy;
};

/// Order-k Lagrange space on a set of active cells. All nodes are free
/// (Dirichlet data is imposed weakly). Global nodes are numbered in the
/// order of the (k*nx+1) x (k*ny+1) node lattice, x fastest.
class FeSpace {
 public:
  FeSpace() = default;

  FeSpace(const BackgroundMesh& mesh, std::vector<int> active_cells, int order)
      : mesh_(mesh), order_(order), basis_(order), active_(std::move(active_cells)) {
    if (order < 1 || order > 15) throw std::invalid_argument("FeSpace: order must be in [1, 15]");
    if (active_.empty()) throw std::invalid_argument("FeSpace: empty active cell set");
    std::sort(active_.begin(), active_.end());
    active_index_.assign(static_cast<std::size_t>(mesh.num_cells()), -1);
    for (std::size_t a = 0; a < active_.size(); ++a) active_index_[static_cast<std::size_t>(active_[a])] = static_cast<int>(a);

    const long lx = static_cast<long>(order) * mesh.nx() + 1;
    const long ly = static_cast<long>(order) * mesh.ny() + 1;
    std::vector<int> lattice_to_dof(static_cast<std::size_t>(lx * ly), -1);
    for (int c : active_) {
      auto [i, j] = mesh.cell_ij(c);
      for (int b = 0; b <= order; ++b)
        for (int a = 0; a <= order; ++a)
          lattice_to_dof[static_cast<std::size_t>((static_cast<long>(order) * j + b) * lx + static_cast<long>(order) * i + a)] = 0;
    }
    int next = 0;
    for (long idx = 0; idx < lx * ly; ++idx) {
      if (lattice_to_dof[static_cast<std::size_t>(idx)] < 0) continue;
      lattice_to_dof[static_cast<std::size_t>(idx)] = next++;
      long I = idx % lx, J = idx / lx;
      nodes_.push_back({mesh.box().lo.x + mesh.box().width() * (static_cast<double>(I) / (lx - 1)),
                        mesh.box().lo.y + mesh.box().height() * (static_cast<double>(J) / (ly - 1))});
    }
    const int nloc = (order + 1) * (order + 1);
    cell_dofs_.resize(active_.size() * static_cast<std::size_t>(nloc));
    for (std::size_t a = 0; a < active_.size(); ++a) {
      auto [i, j] = mesh.cell_ij(active_[a]);
      for (int b = 0; b <= order; ++b)
        for (int l = 0; l <= order; ++l)
          cell_dofs_[a * static_cast<std::size_t>(nloc) + static_cast<std::size_t>(b * (order + 1) + l)] =
              lattice_to_dof[static_cast<std::size_t>((static_cast<long>(order) * j + b) * lx + static_cast<long>(order) * i + l)];
    }
  }

  const BackgroundMesh& mesh() const { return mesh_; }
  int order() const { return order_; }
  int num_dofs() const { return static_cast<int>(nodes_.size()); }
  int dofs_per_cell() const { return (order_ + 1) * (order_ + 1); }
  const std::vector<int>& active_cells() const { return active_; }
  bool is_active(int cell) const { return active_index_[static_cast<std::size_t>(cell)] >= 0; }
  const std::vector<Point>& node_coords() const { return nodes_; }

  /// Global dofs of an active cell, local index b*(k+1)+a for node (a, b).
  std::span<const int> cell_dofs(int cell) const {
    int a = active_index_[static_cast<std::size_t>(cell)];
    if (a < 0) throw std::invalid_argument("FeSpace::cell_dofs: cell " + std::to_string(cell) + " is not active");
    return {cell_dofs_.data() + static_cast<std::size_t>(a) * static_cast<std::size_t>(dofs_per_cell()),
            static_cast<std::size_t>(dofs_per_cell())};
  }

  /// Shape functions of `cell` at `p`; `p` may lie outside the cell, in
  /// which case the cell polynomials are extrapolated.
  void shape(int cell, Point p, ShapeEval& out) const {
    const int n = order_ + 1;
    Point lo = mesh_.cell_lo(cell);
    double tx = (p.x - lo.x) / mesh_.hx(), ty = (p.y - lo.y) / mesh_.hy();
    double vx[16], dxv[16], vy[16], dyv[16];
    basis_.eval(tx, vx, dxv);
    basis_.eval(ty, vy, dyv);
    const auto nl = static_cast<std::size_t>(n * n);
    out.value.resize(nl);
    out.dx.resize(nl);
    out.dy.resize(nl);
    for (int b = 0; b < n; ++b)
      for (int a = 0; a < n; ++a) {
        auto l = static_cast<std::size_t>(b * n + a);
        out.value[l] = vx[a] * vy[b];
        out.dx[l] = dxv[a] * vy[b] / mesh_.hx();
        out.dy[l] = vx[a] * dyv[b] / mesh_.hy();
      }
  }

  /// An active cell whose closure contains `p`, or -1.
  int find_active_cell(Point p) const {
    const double eps = 1e-12;
    double tx = (p.x - mesh_.box().lo.x) / mesh_.hx(), ty = (p.y - mesh_.box().lo.y) / mesh_.hy();
    int i0 = static_cast<int>(std::floor(tx - eps)), i1 = static_cast<int>(std::floor(tx + eps));
    int j0 = static_cast<int>(std::floor(ty - eps)), j1 = static_cast<int>(std::floor(ty + eps));
    for (int j = j0; j <= j1; ++j)
      for (int i = i0; i <= i1; ++i) {
        if (i < 0 || j < 0 || i >= mesh_.nx() || j >= mesh_.ny()) continue;
        int c = mesh_.cell_id(i, j);
        if (is_active(c)) return c;
      }
    return -1;
  }

 private:
  BackgroundMesh mesh_;
  int order_ = 1;
  Lagrange1D basis_{1};
  std::vector<int> active_;
  std::vector<int> active_index_;
  std::vector<Point> nodes_;
  std::vector<int> cell_dofs_;
};

inline FeSpace build_trial_space(const BackgroundMesh& mesh, const std::vector<int>& active_cells, int k) {
  return FeSpace(mesh, active_cells, k);
}

inline FeSpace build_trial_space(const CutDecomposition& decomp, int k) {
  if (decomp.active_cells().empty()) throw std::invalid_argument("build_trial_space: empty active set");
  return FeSpace(decomp.mesh(), decomp.active_cells(), k);
}

enum class RefinementRule {
  Pow2,  ///< factor 2^(k-1)
  Iso,   ///< factor k
};

inline int refinement_factor(int k, RefinementRule rule) {
  if (k < 1) throw std::invalid_argument("refinement_factor: order must be >= 1");
  return rule == RefinementRule::Pow2 ? (1 << (k - 1)) : k;
}

/// Test space on the refined mesh plus the coarse active set derived from it.
struct LinearizedTestSpace {
  RefinedMesh refined;
  CutDecomposition decomp;  ///< geometry on the refined mesh; used for all integration
  FeSpace test;             ///< order 1 on refined active cells
  std::vector<int> coarse_active;
  std::vector<int> parent;  ///< parent coarse cell of every refined cell
};

/// Refines the coarse mesh, cuts the refined mesh against `phi`, builds the
/// linear test space on the refined active cells and marks a coarse cell
/// active iff it has at least one active child.
inline LinearizedTestSpace build_linearized_test_space(const BackgroundMesh& coarse, const LevelSet& phi, int k,
                                                       RefinementRule rule = RefinementRule::Pow2,
                                                       const GeometryOptions& opts = {}) {
  LinearizedTestSpace out;
  out.refined = refine_uniform(coarse, refinement_factor(k, rule));
  out.decomp = CutDecomposition(out.refined.fine, phi, opts);
  out.test = FeSpace(out.refined.fine, out.decomp.active_cells(), 1);
  std::vector<char> active(static_cast<std::size_t>(coarse.num_cells()), 0);
  out.parent.resize(static_cast<std::size_t>(out.refined.fine.num_cells()));
  for (int c = 0; c < out.refined.fine.num_cells(); ++c) out.parent[static_cast<std::size_t>(c)] = out.refined.parent(c);
  for (int c : out.decomp.active_cells()) active[static_cast<std::size_t>(out.refined.parent(c))] = 1;
  for (int c = 0; c < coarse.num_cells(); ++c)
    if (active[static_cast<std::size_t>(c)]) out.coarse_active.push_back(c);
  return out;
}

/// Aggregation of ill-posed (cut) cells to well-posed (interior) root cells
/// and the induced linear constraints on the order-1 test space.
struct AggregationMap {
  std::vector<int> root;      ///< root cell per mesh cell; -1 for exterior cells
  std::vector<int> distance;  ///< BFS hops to the root; -1 for exterior cells
  std::vector<int> free_index;  ///< per test dof: index among free dofs, or -1 if constrained
  int num_free = 0;
  /// Constraint rows for constrained dofs: dof -> (free index, coefficient).
  std::map<int, std::vector<std::pair<int, double>>> constraints;
  /// Extension matrix: (all test dofs) x (free dofs).
  SparseMatrix extension;
};

/// Multi-source BFS from all interior cells across facets shared by active
/// cells; ties between roots at equal distance go to the lower root id.
/// Dofs touched only by cut cells are constrained to the root cell's Q1
/// polynomials, owner being the lowest-id cut cell containing the dof.
inline AggregationMap aggregate(const CutDecomposition& decomp, const FeSpace& test) {
  if (test.order() != 1) throw std::invalid_argument("aggregate: test space must be of order 1");
  const auto& mesh = decomp.mesh();
  if (decomp.interior_cells().empty()) throw std::runtime_error("aggregate: no interior cell to serve as a root");
  AggregationMap agg;
  const auto ncell = static_cast<std::size_t>(mesh.num_cells());
  agg.root.assign(ncell, -1);
  agg.distance.assign(ncell, -1);
  std::vector<int> frontier;
  for (int c : decomp.interior_cells()) {
    agg.root[static_cast<std::size_t>(c)] = c;
    agg.distance[static_cast<std::size_t>(c)] = 0;
    frontier.push_back(c);
  }
  for (int level = 1; !frontier.empty(); ++level) {
    std::vector<int> next;
    for (int c : frontier) {
      for (int nb : mesh.neighbors(c)) {
        if (!decomp.is_active(nb)) continue;
        int& d = agg.distance[static_cast<std::size_t>(nb)];
        int& r = agg.root[static_cast<std::size_t>(nb)];
        if (d < 0) {
          d = level;
          r = agg.root[static_cast<std::size_t>(c)];
          next.push_back(nb);
        } else if (d == level) {
          r = std::min(r, agg.root[static_cast<std::size_t>(c)]);
        }
      }
    }
    std::sort(next.begin(), next.end());
    frontier = std::move(next);
  }
  for (int c : decomp.cut_cells()) {
    if (agg.root[static_cast<std::size_t>(c)] < 0) {
      throw std::runtime_error("aggregate: isolated cut island at cell " + std::to_string(c));
    }
  }

  // A dof is free iff it belongs to some interior cell.
  const int ndof = test.num_dofs();
  std::vector<char> on_interior(static_cast<std::size_t>(ndof), 0);
  for (int c : decomp.interior_cells())
    for (int d : test.cell_dofs(c)) on_interior[static_cast<std::size_t>(d)] = 1;
  agg.free_index.assign(static_cast<std::size_t>(ndof), -1);
  for (int d = 0; d < ndof; ++d)
    if (on_interior[static_cast<std::size_t>(d)]) agg.free_index[static_cast<std::size_t>(d)] = agg.num_free++;

  std::vector<int> owner(static_cast<std::size_t>(ndof), -1);
  for (int c : decomp.cut_cells())  // ascending ids
    for (int d : test.cell_dofs(c))
      if (!on_interior[static_cast<std::size_t>(d)] && owner[static_cast<std::size_t>(d)] < 0) owner[static_cast<std::size_t>(d)] = c;

  ShapeEval se;
  std::vector<Triplet> trip;
  for (int d = 0; d < ndof; ++d) {
    if (on_interior[static_cast<std::size_t>(d)]) {
      trip.push_back({d, agg.free_index[static_cast<std::size_t>(d)], 1.0});
      continue;
    }
    int rootc = agg.root[static_cast<std::size_t>(owner[static_cast<std::size_t>(d)])];
    test.shape(rootc, test.node_coords()[static_cast<std::size_t>(d)], se);
    auto rdofs = test.cell_dofs(rootc);
    auto& row = agg.constraints[d];
    for (std::size_t l = 0; l < rdofs.size(); ++l) {
      int fi = agg.free_index[static_cast<std::size_t>(rdofs[l])];
      row.emplace_back(fi, se.value[l]);
      trip.push_back({d, fi, se.value[l]});
    }
  }
  agg.extension = SparseMatrix::from_triplets(ndof, agg.num_free, std::move(trip));
  return agg;
}

/// Ordered (dof, coordinate) pairs: the points where a network is sampled
/// to build its interpolant in the trial space.
struct InterpolationNodes {
  std::vector<int> dofs;
  std::vector<Point> points;
  std::size_t size() const { return points.size(); }
};

inline InterpolationNodes interpolation_nodes(const FeSpace& trial) {
  InterpolationNodes n;
  n.points = trial.node_coords();
  n.dofs.resize(n.points.size());
  for (std::size_t i = 0; i < n.dofs.size(); ++i) n.dofs[i] = static_cast<int>(i);
  return n;
}

/// Nodal interpolant of a function.
inline Vector interpolate(const FeSpace& space, const std::function<double(Point)>& f) {
  Vector u(static_cast<std::size_t>(space.num_dofs()));
  for (std::size_t i = 0; i < u.size(); ++i) u[i] = f(space.node_coords()[i]);
  return u;
}

struct FeValues {
  std::vector<double> value;
  std::vector<Point> gradient;
};

inline FeValues evaluate_fe_function(const FeSpace& space, std::span<const double> coeffs, std::span<const Point> points) {
  if (static_cast<int>(coeffs.size()) != space.num_dofs()) {
    throw std::invalid_argument("evaluate_fe_function: coefficient vector has wrong length");
  }
  FeValues out;
  out.value.resize(points.size());
  out.gradient.resize(points.size());
  ShapeEval se;
  for (std::size_t q = 0; q < points.size(); ++q) {
    int c = space.find_active_cell(points[q]);
    if (c < 0) throw std::out_of_range("evaluate_fe_function: point outside all active cells");
    space.shape(c, points[q], se);
    auto dofs = space.cell_dofs(c);
    double v = 0.0, gx = 0.0, gy = 0.0;
    for (std::size_t l = 0; l < dofs.size(); ++l) {
      double u = coeffs[static_cast<std::size_t>(dofs[l])];
      v += u * se.value[l];
      gx += u * se.dx[l];
      gy += u * se.dy[l];
    }
    out.value[q] = v;
    out.gradient[q] = {gx, gy};
  }
  return out;
}

}  // namespace feinn
