#pragma once

/// \file weakforms.hpp
/// Nitsche residuals and Jacobians on unfitted meshes, ghost penalty and
/// Gram (H1 Riesz) operators of the linear test space, and error norms.
///
/// Integration always runs over the refined-mesh decomposition; the trial
/// basis of a refined cell is the one of its coarse parent.

#include <array>
#include <cmath>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "feinn/fespace.hpp"
#include "feinn/geometry.hpp"
#include "feinn/linalg.hpp"
#include "feinn/problems.hpp"

namespace feinn {

enum class NitscheScale {
  Global,  ///< h is one global length (NitscheParams::h, else the coarse mesh size)
  Cell,    ///< h_K = sqrt(|K cap Omega|) of the coarse parent cell K
};

struct NitscheParams {
  double gamma = 1e-2;
  double h = 0.0;  ///< mesh size in gamma/h; the coarse (trial) mesh size by default
  NitscheScale scale = NitscheScale::Global;
};

/// Trial space, test space and the integration geometry of one discrete problem.
struct DiscreteSetup {
  FeSpace trial;
  FeSpace test;
  CutDecomposition decomp;  ///< on the test-space mesh
  std::vector<int> parent;  ///< test-mesh cell -> trial-mesh cell
  double coarse_h = 0.0;
};

/// Builds trial and linearized test spaces for order `k` on `coarse`.
inline DiscreteSetup make_setup(const BackgroundMesh& coarse, const LevelSet& phi, int k,
                                RefinementRule rule = RefinementRule::Pow2, const GeometryOptions& opts = {}) {
  auto lin = build_linearized_test_space(coarse, phi, k, rule, opts);
  DiscreteSetup s;
  s.trial = build_trial_space(coarse, lin.coarse_active, k);
  s.test = std::move(lin.test);
  s.decomp = std::move(lin.decomp);
  s.parent = std::move(lin.parent);
  s.coarse_h = coarse.h();
  return s;
}

/// Precomputed quadrature data and sparsity for the Nitsche residual of a
/// problem on a setup. Residual rows index test dofs, Jacobian columns index
/// trial dofs.
class NitscheAssembler {
 public:
  NitscheAssembler(ProblemDef problem, const DiscreteSetup& setup, NitscheParams nitsche, int degree = -1)
      : problem_(std::move(problem)), nitsche_(nitsche) {
    const FeSpace& trial = setup.trial;
    const FeSpace& test = setup.test;
    if (nitsche_.h <= 0.0) nitsche_.h = setup.coarse_h > 0.0 ? setup.coarse_h : trial.mesh().h();
    if (nitsche_.gamma <= 0.0) throw std::invalid_argument("NitscheAssembler: gamma must be positive");
    if (degree < 0) degree = 2 * trial.order() + 1;
    if (degree < 2 * trial.order() + 1) throw std::invalid_argument("NitscheAssembler: quadrature degree below 2k+1");
    if (test.order() != 1) throw std::invalid_argument("NitscheAssembler: test space must be linear");
    if (setup.parent.size() != static_cast<std::size_t>(test.mesh().num_cells())) {
      throw std::invalid_argument("NitscheAssembler: missing refined-to-coarse cell map");
    }
    n_test_ = test.num_dofs();
    n_trial_ = trial.num_dofs();
    nt_ = trial.dofs_per_cell();

    ShapeEval st, su;
    std::vector<Triplet> pattern;
    for (int c : setup.decomp.active_cells()) {
      if (!test.is_active(c)) throw std::invalid_argument("NitscheAssembler: decomposition and test space disagree");
      int pc = setup.parent[static_cast<std::size_t>(c)];
      if (!trial.is_active(pc)) {
        throw std::invalid_argument("NitscheAssembler: parent cell " + std::to_string(pc) + " not active in trial space");
      }
      CellBlock blk;
      auto td = test.cell_dofs(c);
      auto ud = trial.cell_dofs(pc);
      std::copy(td.begin(), td.end(), blk.test_dofs.begin());
      blk.trial_dofs.assign(ud.begin(), ud.end());
      auto add_points = [&](const QuadratureRule& q, bool boundary) {
        for (std::size_t k = 0; k < q.size(); ++k) {
          Point p = q.points[k];
          test.shape(c, p, st);
          trial.shape(pc, p, su);
          QPoint qp;
          qp.w = q.weights[k];
          qp.p = p;
          qp.offset = trial_data_.size();
          for (int a = 0; a < 4; ++a) {
            qp.tv[a] = st.value[static_cast<std::size_t>(a)];
            qp.tdx[a] = st.dx[static_cast<std::size_t>(a)];
            qp.tdy[a] = st.dy[static_cast<std::size_t>(a)];
          }
          for (int b = 0; b < nt_; ++b) {
            trial_data_.push_back(su.value[static_cast<std::size_t>(b)]);
            trial_data_.push_back(su.dx[static_cast<std::size_t>(b)]);
            trial_data_.push_back(su.dy[static_cast<std::size_t>(b)]);
          }
          if (boundary) {
            qp.n = q.normals[k];
            qp.data = problem_.dirichlet(p);
            blk.bnd.push_back(qp);
          } else {
            qp.data = problem_.source(p);
            qp.sigma = problem_.sigma(p);
            blk.vol.push_back(qp);
          }
        }
      };
      add_points(cut_volume_quadrature(setup.decomp, c, degree), false);
      if (has_boundary(setup.decomp, c)) add_points(boundary_quadrature(setup.decomp, c, degree), true);
      for (int a = 0; a < 4; ++a)
        for (int b = 0; b < nt_; ++b) pattern.push_back({blk.test_dofs[static_cast<std::size_t>(a)], blk.trial_dofs[static_cast<std::size_t>(b)], 0.0});
      blk.parent = pc;
      blocks_.push_back(std::move(blk));
    }
    std::vector<double> parent_area(static_cast<std::size_t>(trial.mesh().num_cells()), 0.0);
    for (const auto& blk : blocks_)
      for (const auto& q : blk.vol) parent_area[static_cast<std::size_t>(blk.parent)] += q.w;
    for (auto& blk : blocks_) {
      double h = nitsche_.h, area = parent_area[static_cast<std::size_t>(blk.parent)];
      if (nitsche_.scale == NitscheScale::Cell && area > 0.0) h = std::sqrt(area);
      blk.penalty = nitsche_.gamma / h;
    }
    pattern_ = SparseMatrix::from_triplets(n_test_, n_trial_, std::move(pattern));
    for (auto& blk : blocks_) {
      blk.slots.resize(static_cast<std::size_t>(4 * nt_));
      for (int a = 0; a < 4; ++a)
        for (int b = 0; b < nt_; ++b)
          blk.slots[static_cast<std::size_t>(a * nt_ + b)] = pattern_.find(blk.test_dofs[static_cast<std::size_t>(a)], blk.trial_dofs[static_cast<std::size_t>(b)]);
    }
    default_sigma_ = interpolate(trial, problem_.sigma);
  }

  const ProblemDef& problem() const { return problem_; }
  const NitscheParams& nitsche() const { return nitsche_; }
  int num_test() const { return n_test_; }
  int num_trial() const { return n_trial_; }
  bool is_linear() const { return problem_.kind == ProblemKind::Poisson; }
  /// Trial-space interpolant of the problem's reaction coefficient.
  const Vector& default_sigma() const { return default_sigma_; }

  /// Residual vector r(u). `sigma` holds trial-space coefficients of the
  /// reaction field (nonlinear problems); the interpolated problem
  /// coefficient is used when empty.
  Vector residual(std::span<const double> u, std::span<const double> sigma = {}) const {
    check(u, sigma);
    if (sigma.empty()) sigma = default_sigma_;
    Vector r(static_cast<std::size_t>(n_test_), 0.0);
    const bool nl = !is_linear();
    for (const auto& blk : blocks_) {
      double loc[4] = {0, 0, 0, 0};
      for (const auto& q : blk.vol) {
        Local L = at(blk, q, u, sigma, nl);
        double reaction = 0.0;
        if (nl) reaction = problem_.beta.x * L.ux + problem_.beta.y * L.uy + L.sig * std::exp(-L.u * L.u);
        for (int a = 0; a < 4; ++a)
          loc[a] += q.w * (L.ux * q.tdx[a] + L.uy * q.tdy[a] + (reaction - q.data) * q.tv[a]);
      }
      const double pen = blk.penalty;
      for (const auto& q : blk.bnd) {
        Local L = at(blk, q, u, sigma, false);
        double jump = L.u - q.data;
        double dun = L.ux * q.n.x + L.uy * q.n.y;
        for (int a = 0; a < 4; ++a) {
          double dvn = q.tdx[a] * q.n.x + q.tdy[a] * q.n.y;
          loc[a] += q.w * (pen * jump * q.tv[a] - jump * dvn - dun * q.tv[a]);
        }
      }
      for (int a = 0; a < 4; ++a) r[static_cast<std::size_t>(blk.test_dofs[static_cast<std::size_t>(a)])] += loc[a];
    }
    return r;
  }

  /// Jacobian dr/du at u (independent of u for Poisson).
  SparseMatrix jacobian(std::span<const double> u, std::span<const double> sigma = {}) const {
    check(u, sigma);
    if (sigma.empty()) sigma = default_sigma_;
    SparseMatrix a = pattern_;
    auto& val = a.values();
    const bool nl = !is_linear();
    for (const auto& blk : blocks_) {
      for (const auto& q : blk.vol) {
        const double* td = &trial_data_[q.offset];
        double dreact = 0.0;
        if (nl) {
          Local L = at(blk, q, u, sigma, true);
          dreact = -2.0 * L.u * L.sig * std::exp(-L.u * L.u);
        }
        for (int b = 0; b < nt_; ++b) {
          double pv = td[3 * b], px = td[3 * b + 1], py = td[3 * b + 2];
          double conv = nl ? problem_.beta.x * px + problem_.beta.y * py + dreact * pv : 0.0;
          for (int a = 0; a < 4; ++a)
            val[static_cast<std::size_t>(blk.slots[static_cast<std::size_t>(a * nt_ + b)])] += q.w * (px * q.tdx[a] + py * q.tdy[a] + conv * q.tv[a]);
        }
      }
      const double pen = blk.penalty;
      for (const auto& q : blk.bnd) {
        const double* td = &trial_data_[q.offset];
        for (int b = 0; b < nt_; ++b) {
          double pv = td[3 * b], pn = td[3 * b + 1] * q.n.x + td[3 * b + 2] * q.n.y;
          for (int a = 0; a < 4; ++a) {
            double dvn = q.tdx[a] * q.n.x + q.tdy[a] * q.n.y;
            val[static_cast<std::size_t>(blk.slots[static_cast<std::size_t>(a * nt_ + b)])] += q.w * (pen * pv * q.tv[a] - pv * dvn - pn * q.tv[a]);
          }
        }
      }
    }
    return a;
  }

  /// Jacobian of the residual with respect to the trial-space coefficients
  /// of the reaction field: d r_i / d s_j = int psi_j exp(-u^2) phi_i.
  SparseMatrix jacobian_sigma(std::span<const double> u) const {
    check(u, {});
    SparseMatrix a = pattern_;
    auto& val = a.values();
    for (const auto& blk : blocks_) {
      for (const auto& q : blk.vol) {
        const double* td = &trial_data_[q.offset];
        double uq = 0.0;
        for (int b = 0; b < nt_; ++b) uq += td[3 * b] * u[static_cast<std::size_t>(blk.trial_dofs[static_cast<std::size_t>(b)])];
        double e = std::exp(-uq * uq);
        for (int b = 0; b < nt_; ++b)
          for (int a2 = 0; a2 < 4; ++a2)
            val[static_cast<std::size_t>(blk.slots[static_cast<std::size_t>(a2 * nt_ + b)])] += q.w * td[3 * b] * e * q.tv[a2];
      }
    }
    return a;
  }

  /// For Poisson: r(u) = A u - b with b = -r(0).
  Vector load_vector() const {
    Vector zero(static_cast<std::size_t>(n_trial_), 0.0);
    Vector b = residual(zero);
    for (double& v : b) v = -v;
    return b;
  }

 private:
  struct QPoint {
    Point p;
    double w = 0.0;
    double tv[4]{}, tdx[4]{}, tdy[4]{};
    std::size_t offset = 0;  // into trial_data_: (value, dx, dy) per trial basis function
    Point n;
    double data = 0.0;   // f on volume points, g on boundary points
    double sigma = 0.0;  // problem coefficient at the point
  };
  struct CellBlock {
    std::array<int, 4> test_dofs{};
    std::vector<int> trial_dofs;
    std::vector<QPoint> vol;
    std::vector<QPoint> bnd;
    std::vector<int> slots;
    int parent = -1;
    double penalty = 0.0;  // gamma / h for this block
  };
  struct Local {
    double u = 0.0, ux = 0.0, uy = 0.0, sig = 0.0;
  };

  Local at(const CellBlock& blk, const QPoint& q, std::span<const double> u, std::span<const double> sigma, bool with_sigma) const {
    Local L;
    const double* td = &trial_data_[q.offset];
    for (int b = 0; b < nt_; ++b) {
      auto d = static_cast<std::size_t>(blk.trial_dofs[static_cast<std::size_t>(b)]);
      double ub = u[d];
      L.u += ub * td[3 * b];
      L.ux += ub * td[3 * b + 1];
      L.uy += ub * td[3 * b + 2];
      if (with_sigma) L.sig += sigma[d] * td[3 * b];
    }
    return L;
  }

  void check(std::span<const double> u, std::span<const double> sigma) const {
    if (static_cast<int>(u.size()) != n_trial_) {
      throw std::invalid_argument("NitscheAssembler: trial vector has length " + std::to_string(u.size()) +
                                  ", expected " + std::to_string(n_trial_));
    }
    if (!sigma.empty() && static_cast<int>(sigma.size()) != n_trial_) {
      throw std::invalid_argument("NitscheAssembler: coefficient vector has wrong length");
    }
  }

  ProblemDef problem_;
  NitscheParams nitsche_;
  int n_test_ = 0;
  int n_trial_ = 0;
  int nt_ = 0;
  std::vector<CellBlock> blocks_;
  std::vector<double> trial_data_;
  SparseMatrix pattern_;
  Vector default_sigma_;
};

inline Vector assemble_residual(const NitscheAssembler& a, std::span<const double> u) { return a.residual(u); }
inline SparseMatrix assemble_jacobian(const NitscheAssembler& a, std::span<const double> u) { return a.jacobian(u); }

/// First-order ghost penalty sum_F gamma_g h ([dv/dn_F], [dw/dn_F])_F on a
/// linear space. Every facet must join two active cells.
inline SparseMatrix assemble_ghost_penalty(const FeSpace& test, const std::vector<Facet>& facets, double gamma_g, double h) {
  if (test.order() != 1) throw std::invalid_argument("assemble_ghost_penalty: test space must be linear");
  const auto& mesh = test.mesh();
  auto g = gauss_legendre(2);
  std::vector<Triplet> t;
  ShapeEval sm, sp;
  for (const Facet& f : facets) {
    if (!test.is_active(f.minus) || !test.is_active(f.plus)) {
      throw std::invalid_argument("assemble_ghost_penalty: facet not shared by two active cells");
    }
    Point a = mesh.cell_lo(f.plus);
    Point b = f.normal_axis == 0 ? Point{a.x, mesh.cell_hi(f.plus).y} : Point{mesh.cell_hi(f.plus).x, a.y};
    double len = norm(b - a);
    Point n = f.normal();
    auto dm = test.cell_dofs(f.minus);
    auto dp = test.cell_dofs(f.plus);
    for (std::size_t q = 0; q < g.x.size(); ++q) {
      Point p = a + g.x[q] * (b - a);
      test.shape(f.minus, p, sm);
      test.shape(f.plus, p, sp);
      std::array<int, 8> dofs{};
      std::array<double, 8> jump{};
      for (std::size_t l = 0; l < 4; ++l) {
        dofs[l] = dm[l];
        jump[l] = -(sm.dx[l] * n.x + sm.dy[l] * n.y);
        dofs[l + 4] = dp[l];
        jump[l + 4] = sp.dx[l] * n.x + sp.dy[l] * n.y;
      }
      double w = gamma_g * h * len * g.w[q];
      for (std::size_t i = 0; i < 8; ++i)
        for (std::size_t j = 0; j < 8; ++j) t.push_back({dofs[i], dofs[j], w * jump[i] * jump[j]});
    }
  }
  return SparseMatrix::from_triplets(test.num_dofs(), test.num_dofs(), std::move(t));
}

/// H1 mass-plus-stiffness matrix of a linear space over the cut domain.
inline SparseMatrix assemble_h1_gram(const FeSpace& test, const CutDecomposition& decomp, int degree = 3) {
  std::vector<Triplet> t;
  ShapeEval s;
  for (int c : decomp.active_cells()) {
    auto dofs = test.cell_dofs(c);
    double loc[16] = {};
    auto q = cut_volume_quadrature(decomp, c, degree);
    for (std::size_t k = 0; k < q.size(); ++k) {
      test.shape(c, q.points[k], s);
      for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = 0; j < 4; ++j)
          loc[i * 4 + j] += q.weights[k] * (s.dx[i] * s.dx[j] + s.dy[i] * s.dy[j] + s.value[i] * s.value[j]);
    }
    for (std::size_t i = 0; i < 4; ++i)
      for (std::size_t j = 0; j < 4; ++j) t.push_back({dofs[i], dofs[j], loc[i * 4 + j]});
  }
  return SparseMatrix::from_triplets(test.num_dofs(), test.num_dofs(), std::move(t));
}

enum class Stabilization { Ghost, Aggregated };

/// Gram operator of the test space with its cached Cholesky factor. With
/// aggregation the operator acts on the free (root) dofs only and residuals
/// must first be reduced by the extension transpose.
struct GramOperator {
  Stabilization kind = Stabilization::Ghost;
  double gamma_g = 0.0;
  SparseMatrix matrix;
  CholeskyFactor factor;
  std::optional<SparseMatrix> extension;  ///< aggregated only: all test dofs x free dofs

  int size() const { return matrix.rows(); }

  /// Maps a residual on all test dofs to the space the operator acts on.
  Vector reduce(std::span<const double> r) const {
    if (!extension) return Vector(r.begin(), r.end());
    return spmv_transpose(*extension, r);
  }
  /// Inverse of reduce's adjoint: lifts a reduced vector back to all test dofs.
  Vector lift(std::span<const double> z) const {
    if (!extension) return Vector(z.begin(), z.end());
    return spmv(*extension, z);
  }
};

struct GhostStabilization {
  double gamma_g = 0.1;
};

inline GramOperator assemble_gram(const FeSpace& test, const CutDecomposition& decomp, GhostStabilization ghost) {
  GramOperator g;
  g.kind = Stabilization::Ghost;
  g.gamma_g = ghost.gamma_g;
  SparseMatrix m = assemble_h1_gram(test, decomp);
  std::vector<Facet> facets;
  for (const Facet& f : skeleton_faces_near_boundary(decomp.mesh(), decomp.cut_cells()))
    if (decomp.is_active(f.minus) && decomp.is_active(f.plus)) facets.push_back(f);
  if (!facets.empty()) m = add(m, assemble_ghost_penalty(test, facets, ghost.gamma_g, decomp.mesh().h()));
  g.matrix = std::move(m);
  try {
    g.factor = cholesky(g.matrix);
  } catch (const std::runtime_error& e) {
    throw std::runtime_error(std::string("Gram not SPD: ") + e.what());
  }
  return g;
}

inline GramOperator assemble_gram(const FeSpace& test, const CutDecomposition& decomp, const AggregationMap& agg) {
  GramOperator g;
  g.kind = Stabilization::Aggregated;
  g.extension = agg.extension;
  g.matrix = congruence(agg.extension, assemble_h1_gram(test, decomp));
  try {
    g.factor = cholesky(g.matrix);
  } catch (const std::runtime_error& e) {
    throw std::runtime_error(std::string("Gram not SPD: ") + e.what());
  }
  return g;
}

struct RieszResult {
  Vector z;
  double dual_norm = 0.0;
};

/// z = B^{-1} r through the cached factor and sqrt(r . z).
inline RieszResult apply_riesz(const GramOperator& gram, std::span<const double> r) {
  if (static_cast<int>(r.size()) != gram.size()) throw std::invalid_argument("apply_riesz: dimension mismatch");
  RieszResult out;
  out.z = gram.factor.solve(r);
  out.dual_norm = std::sqrt(std::max(0.0, dot(r, std::span<const double>(out.z))));
  return out;
}

struct ErrorNorms {
  double l2 = 0.0;
  double h1 = 0.0;
};

/// Quadrature over the cut domain with cached exact data, for repeated
/// error evaluation of trial-space functions and of arbitrary fields.
class ErrorIntegrator {
 public:
  ErrorIntegrator(const CutDecomposition& decomp, const ManufacturedSolution& exact, int degree) {
    for (int c : decomp.active_cells()) {
      auto q = cut_volume_quadrature(decomp, c, degree);
      for (std::size_t k = 0; k < q.size(); ++k) {
        points_.push_back(q.points[k]);
        weights_.push_back(q.weights[k]);
        Jet2 j = exact.jet(q.points[k]);
        exact_.push_back({j.value, j.dx, j.dy});
      }
    }
    for (std::size_t k = 0; k < weights_.size(); ++k) {
      norm_l2_ += weights_[k] * exact_[k][0] * exact_[k][0];
      norm_h1_ += weights_[k] * (exact_[k][1] * exact_[k][1] + exact_[k][2] * exact_[k][2]);
    }
    norm_h1_ = std::sqrt(norm_l2_ + norm_h1_);
    norm_l2_ = std::sqrt(norm_l2_);
  }

  const std::vector<Point>& points() const { return points_; }
  /// L2 and H1 norms of the exact field itself.
  ErrorNorms exact_norms() const { return {norm_l2_, norm_h1_}; }

  /// Caches trial-space shape data at the integration points.
  void bind_space(const FeSpace& space) {
    nt_ = space.dofs_per_cell();
    dofs_.clear();
    shape_.clear();
    ShapeEval s;
    for (Point p : points_) {
      int c = space.find_active_cell(p);
      if (c < 0) throw std::out_of_range("ErrorIntegrator: integration point outside the trial space");
      space.shape(c, p, s);
      auto d = space.cell_dofs(c);
      dofs_.insert(dofs_.end(), d.begin(), d.end());
      for (int b = 0; b < nt_; ++b) {
        shape_.push_back(s.value[static_cast<std::size_t>(b)]);
        shape_.push_back(s.dx[static_cast<std::size_t>(b)]);
        shape_.push_back(s.dy[static_cast<std::size_t>(b)]);
      }
    }
    bound_ = true;
  }

  ErrorNorms fe_errors(std::span<const double> coeffs) const {
    if (!bound_) throw std::logic_error("ErrorIntegrator: no space bound");
    double l2 = 0.0, semi = 0.0;
    for (std::size_t k = 0; k < points_.size(); ++k) {
      double v = 0.0, gx = 0.0, gy = 0.0;
      const double* s = &shape_[k * static_cast<std::size_t>(3 * nt_)];
      const int* d = &dofs_[k * static_cast<std::size_t>(nt_)];
      for (int b = 0; b < nt_; ++b) {
        double c = coeffs[static_cast<std::size_t>(d[b])];
        v += c * s[3 * b];
        gx += c * s[3 * b + 1];
        gy += c * s[3 * b + 2];
      }
      accumulate(k, v, gx, gy, l2, semi);
    }
    return {std::sqrt(l2), std::sqrt(l2 + semi)};
  }

  /// Errors of a field given by its values and gradients at points().
  ErrorNorms field_errors(std::span<const double> values, std::span<const Point> grads) const {
    double l2 = 0.0, semi = 0.0;
    for (std::size_t k = 0; k < points_.size(); ++k) accumulate(k, values[k], grads[k].x, grads[k].y, l2, semi);
    return {std::sqrt(l2), std::sqrt(l2 + semi)};
  }

 private:
  void accumulate(std::size_t k, double v, double gx, double gy, double& l2, double& semi) const {
    double e = exact_[k][0] - v, ex = exact_[k][1] - gx, ey = exact_[k][2] - gy;
    l2 += weights_[k] * e * e;
    semi += weights_[k] * (ex * ex + ey * ey);
  }

  std::vector<Point> points_;
  std::vector<double> weights_;
  std::vector<std::array<double, 3>> exact_;
  double norm_l2_ = 0.0;
  double norm_h1_ = 0.0;
  int nt_ = 0;
  std::vector<int> dofs_;
  std::vector<double> shape_;
  bool bound_ = false;
};

/// One-shot L2/H1 errors of a field `u_id(p) -> (value, gradient)` against `exact`.
template <typename F>
ErrorNorms error_norms(const F& u_id, const ManufacturedSolution& exact, const CutDecomposition& decomp, int degree) {
  ErrorIntegrator integ(decomp, exact, degree);
  std::vector<double> v;
  std::vector<Point> g;
  for (Point p : integ.points()) {
    auto [val, grad] = u_id(p);
    v.push_back(val);
    g.push_back(grad);
  }
  return integ.field_errors(v, g);
}

}  // namespace feinn
