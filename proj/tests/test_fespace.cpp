#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <set>

#include "feinn/fespace.hpp"

using namespace feinn;

namespace {

const BoundingBox kUnit{{0.0, 0.0}, {1.0, 1.0}};

LevelSet unit_disk() { return shapes::disk({0.5, 0.5}, 0.4); }

// Node lattice indices of every active cell, enumerated independently of FeSpace.
std::set<std::pair<long, long>> lattice_nodes(const BackgroundMesh& m, const std::vector<int>& cells, int k) {
  std::set<std::pair<long, long>> s;
  for (int c : cells) {
    auto [i, j] = m.cell_ij(c);
    for (int b = 0; b <= k; ++b)
      for (int a = 0; a <= k; ++a) s.insert({static_cast<long>(k) * i + a, static_cast<long>(k) * j + b});
  }
  return s;
}

// Random points inside active cells.
std::vector<Point> sample_points(const FeSpace& s, int n, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> pick(0, s.active_cells().size() - 1);
  std::vector<Point> pts;
  for (int i = 0; i < n; ++i) {
    int c = s.active_cells()[pick(rng)];
    Point lo = s.mesh().cell_lo(c), hi = s.mesh().cell_hi(c);
    double a = u(rng), b = u(rng);
    pts.push_back({lo.x + a * (hi.x - lo.x), lo.y + b * (hi.y - lo.y)});
  }
  return pts;
}

}  // namespace

TEST(TrialSpace, PaperNodeCounts) {
  // 25x25 disk, k = 4: 5881 nodes of which 5013 are strictly inside.
  auto m = build_mesh(kUnit, 25, 25);
  CutDecomposition d(m, unit_disk());
  auto s = build_trial_space(d, 4);
  EXPECT_EQ(s.num_dofs(), 5881);
  // Nodes sit on the 1/100 lattice; decide "strictly inside" in exact integer
  // arithmetic so that the 12 lattice points on the circle count as boundary.
  int inside = 0;
  for (Point p : s.node_coords()) {
    long a = std::lround(100.0 * p.x) - 50, b = std::lround(100.0 * p.y) - 50;
    if (a * a + b * b < 40 * 40) ++inside;
  }
  EXPECT_EQ(inside, 5013);
  EXPECT_EQ(s.num_dofs() - inside, 868);
}

TEST(TrialSpace, SingleInteriorCell) {
  auto m = build_mesh(kUnit, 1, 1);
  auto s = build_trial_space(m, {0}, 2);
  EXPECT_EQ(s.num_dofs(), 9);
  EXPECT_EQ(s.dofs_per_cell(), 9);
}

TEST(TrialSpace, NodeCountMatchesIndependentEnumeration) {
  auto m = build_mesh(kUnit, 50, 50);
  auto phi = unit_disk();
  CutDecomposition d(m, phi);
  auto s = build_trial_space(d, 3);
  auto lat = lattice_nodes(m, d.active_cells(), 3);
  ASSERT_EQ(static_cast<std::size_t>(s.num_dofs()), lat.size());
  int in_ours = 0, in_scan = 0;
  for (Point p : s.node_coords())
    if (phi(p) < 0.0) ++in_ours;
  for (auto [I, J] : lat)
    if (phi(Point{static_cast<double>(I) / 150.0, static_cast<double>(J) / 150.0}) < 0.0) ++in_scan;
  EXPECT_EQ(in_ours, in_scan);
  EXPECT_GT(s.num_dofs() - in_ours, 0);
}

TEST(TrialSpace, SharedNodesHaveOneId) {
  auto m = build_mesh(kUnit, 6, 6);
  CutDecomposition d(m, unit_disk());
  auto s = build_trial_space(d, 3);
  for (int c : s.active_cells()) {
    auto dofs = s.cell_dofs(c);
    Point lo = m.cell_lo(c);
    for (int b = 0; b <= 3; ++b)
      for (int a = 0; a <= 3; ++a) {
        Point p = s.node_coords()[static_cast<std::size_t>(dofs[static_cast<std::size_t>(b * 4 + a)])];
        EXPECT_NEAR(p.x, lo.x + a * m.hx() / 3, 1e-14);
        EXPECT_NEAR(p.y, lo.y + b * m.hy() / 3, 1e-14);
      }
  }
  std::set<std::pair<double, double>> uniq;
  for (Point p : s.node_coords()) uniq.insert({p.x, p.y});
  EXPECT_EQ(uniq.size(), static_cast<std::size_t>(s.num_dofs()));
}

TEST(TrialSpace, RejectsEmptyAndBadOrder) {
  auto m = build_mesh(kUnit, 4, 4);
  EXPECT_THROW(build_trial_space(m, {}, 2), std::invalid_argument);
  EXPECT_THROW(build_trial_space(m, {0}, 0), std::invalid_argument);
}

TEST(LinearizedTestSpace, FigureTwoScenario) {
  auto coarse = build_mesh({{0.0, 0.0}, {1.25, 1.0}}, 5, 4);
  auto phi = shapes::disk({0.625, 0.5}, 0.55);
  auto t = build_linearized_test_space(coarse, phi, 2, RefinementRule::Pow2);
  EXPECT_EQ(t.refined.fine.nx(), 10);
  EXPECT_EQ(t.refined.fine.ny(), 8);
  // Every coarse cell has an active child here, so the trial nodes are the
  // full Q2 lattice.
  EXPECT_EQ(t.coarse_active.size(), 20u);
  auto trial = build_trial_space(coarse, t.coarse_active, 2);
  EXPECT_EQ(trial.num_dofs(), 11 * 9);
  auto nodes = interpolation_nodes(trial);
  EXPECT_EQ(nodes.size(), static_cast<std::size_t>(trial.num_dofs()));
  // Test dofs: vertices of the refined active cells.
  EXPECT_EQ(static_cast<std::size_t>(t.test.num_dofs()), lattice_nodes(t.refined.fine, t.decomp.active_cells(), 1).size());
  EXPECT_LT(t.decomp.active_cells().size(), 80u);
}

TEST(LinearizedTestSpace, OrderOneHasIdenticalNodes) {
  auto coarse = build_mesh(kUnit, 12, 12);
  auto phi = unit_disk();
  auto t = build_linearized_test_space(coarse, phi, 1);
  auto trial = build_trial_space(coarse, t.coarse_active, 1);
  ASSERT_EQ(trial.num_dofs(), t.test.num_dofs());
  for (int i = 0; i < trial.num_dofs(); ++i) {
    EXPECT_EQ(trial.node_coords()[static_cast<std::size_t>(i)].x, t.test.node_coords()[static_cast<std::size_t>(i)].x);
    EXPECT_EQ(trial.node_coords()[static_cast<std::size_t>(i)].y, t.test.node_coords()[static_cast<std::size_t>(i)].y);
  }
}

TEST(LinearizedTestSpace, DimensionsMatchEnumeration) {
  auto coarse = build_mesh(kUnit, 20, 20);
  for (auto rule : {RefinementRule::Pow2, RefinementRule::Iso})
    for (int k : {2, 3, 4}) {
      for (const auto& phi : {unit_disk(), shapes::flower({0.5, 0.5})}) {
        auto t = build_linearized_test_space(coarse, phi, k, rule);
        auto trial = build_trial_space(coarse, t.coarse_active, k);
        // Independent enumeration of both node sets.
        std::set<int> coarse_active;
        for (int c : t.decomp.active_cells()) coarse_active.insert(t.refined.parent(c));
        std::vector<int> ca(coarse_active.begin(), coarse_active.end());
        EXPECT_EQ(ca, t.coarse_active);
        EXPECT_EQ(static_cast<std::size_t>(trial.num_dofs()), lattice_nodes(coarse, ca, k).size());
        EXPECT_EQ(static_cast<std::size_t>(t.test.num_dofs()), lattice_nodes(t.refined.fine, t.decomp.active_cells(), 1).size());
        // Refinement by k keeps dim(test) <= dim(trial); the pow2 factor
        // 2^(k-1) exceeds k from k = 3 on and the Q1 lattice outgrows Q_k.
        if (refinement_factor(k, rule) <= k) {
          EXPECT_LE(t.test.num_dofs(), trial.num_dofs()) << "k = " << k;
        } else {
          EXPECT_GT(t.test.num_dofs(), trial.num_dofs()) << "k = " << k;
        }
      }
    }
}

TEST(LinearizedTestSpace, RefinementFactors) {
  EXPECT_EQ(refinement_factor(1, RefinementRule::Pow2), 1);
  EXPECT_EQ(refinement_factor(3, RefinementRule::Pow2), 4);
  EXPECT_EQ(refinement_factor(3, RefinementRule::Iso), 3);
  EXPECT_THROW(refinement_factor(0, RefinementRule::Iso), std::invalid_argument);
}

TEST(Aggregation, AllInteriorHasNoConstraints) {
  auto m = build_mesh(kUnit, 5, 5);
  LevelSet everywhere{[](Point) { return -1.0; }, [](Point) { return Point{0.0, 0.0}; }};
  CutDecomposition d(m, everywhere);
  auto s = build_trial_space(d, 1);
  auto agg = aggregate(d, s);
  EXPECT_TRUE(agg.constraints.empty());
  EXPECT_EQ(agg.num_free, s.num_dofs());
}

TEST(Aggregation, StripExtrapolationWeights) {
  // Interior cell [0,h]^2, cut cell [h,2h]^2 (domain x < 1.5h).
  const double h = 0.5;
  auto m = build_mesh({{0.0, 0.0}, {2 * h, h}}, 2, 1);
  CutDecomposition d(m, shapes::halfplane({1.5 * h, 0.0}, {1.0, 0.0}));
  ASSERT_EQ(d.cell_class(0), CellClass::Interior);
  ASSERT_EQ(d.cell_class(1), CellClass::Cut);
  auto s = build_trial_space(d, 1);
  auto agg = aggregate(d, s);
  EXPECT_EQ(agg.root[1], 0);
  EXPECT_EQ(agg.distance[1], 1);
  ASSERT_EQ(agg.constraints.size(), 2u);
  for (const auto& [dof, row] : agg.constraints) {
    Point p = s.node_coords()[static_cast<std::size_t>(dof)];
    EXPECT_NEAR(p.x, 2 * h, 1e-15);
    // Same-height root nodes at x = 0 and x = h get -1 and 2.
    for (auto [fi, w] : row) {
      int root_dof = -1;
      for (int dd = 0; dd < s.num_dofs(); ++dd)
        if (agg.free_index[static_cast<std::size_t>(dd)] == fi) root_dof = dd;
      Point q = s.node_coords()[static_cast<std::size_t>(root_dof)];
      double expect = q.y != p.y ? 0.0 : (q.x == 0.0 ? -1.0 : 2.0);
      EXPECT_NEAR(w, expect, 1e-14);
    }
  }
}

TEST(Aggregation, DiskRowsSumToOneAndReproduceLinears) {
  auto t = build_linearized_test_space(build_mesh(kUnit, 20, 20), unit_disk(), 2);
  ASSERT_EQ(t.refined.fine.nx(), 40);
  auto agg = aggregate(t.decomp, t.test);
  ASSERT_FALSE(agg.constraints.empty());
  for (const auto& [dof, row] : agg.constraints) {
    double s = 0.0;
    for (auto [fi, w] : row) s += w;
    EXPECT_NEAR(s, 1.0, 1e-12) << "dof " << dof;
  }
  auto lin = [](Point p) { return 0.3 - 1.7 * p.x + 2.9 * p.y; };
  Vector free(static_cast<std::size_t>(agg.num_free));
  for (int d = 0; d < t.test.num_dofs(); ++d) {
    int fi = agg.free_index[static_cast<std::size_t>(d)];
    if (fi >= 0) free[static_cast<std::size_t>(fi)] = lin(t.test.node_coords()[static_cast<std::size_t>(d)]);
  }
  Vector full = spmv(agg.extension, free);
  for (int d = 0; d < t.test.num_dofs(); ++d) EXPECT_NEAR(full[static_cast<std::size_t>(d)], lin(t.test.node_coords()[static_cast<std::size_t>(d)]), 1e-12);
}

TEST(Aggregation, RootsAreInteriorAndPathsStayActive) {
  auto t = build_linearized_test_space(build_mesh(kUnit, 16, 16), shapes::flower({0.5, 0.5}), 2);
  auto agg = aggregate(t.decomp, t.test);
  const auto& m = t.refined.fine;
  for (int c : t.decomp.active_cells()) {
    int r = agg.root[static_cast<std::size_t>(c)];
    ASSERT_GE(r, 0);
    EXPECT_EQ(t.decomp.cell_class(r), CellClass::Interior);
    int dist = agg.distance[static_cast<std::size_t>(c)];
    if (t.decomp.cell_class(c) == CellClass::Interior) {
      EXPECT_EQ(r, c);
      EXPECT_EQ(dist, 0);
      continue;
    }
    EXPECT_GT(dist, 0);
    // Some active neighbour is one hop closer to the same root.
    bool step = false;
    for (int nb : m.neighbors(c))
      if (t.decomp.is_active(nb) && agg.distance[static_cast<std::size_t>(nb)] == dist - 1) step = true;
    EXPECT_TRUE(step);
  }
}

TEST(Aggregation, IsolatedIslandThrows) {
  // Two disks: a large one with interior cells and a tiny one that only cuts cells.
  auto m = build_mesh(kUnit, 20, 20);
  auto big = shapes::disk({0.3, 0.3}, 0.2), tiny = shapes::disk({0.825, 0.825}, 0.02);
  LevelSet both{[=](Point p) { return std::min(big(p), tiny(p)); },
                [=](Point p) { return big(p) < tiny(p) ? big.gradient(p) : tiny.gradient(p); }};
  CutDecomposition d(m, both);
  auto s = build_trial_space(d, 1);
  EXPECT_THROW(aggregate(d, s), std::runtime_error);
}

TEST(InterpolationNodes, SingleCellCorners) {
  auto m = build_mesh(kUnit, 1, 1);
  auto n = interpolation_nodes(build_trial_space(m, {0}, 1));
  ASSERT_EQ(n.size(), 4u);
  std::set<std::pair<double, double>> got;
  for (Point p : n.points) got.insert({p.x, p.y});
  EXPECT_EQ(got, (std::set<std::pair<double, double>>{{0, 0}, {1, 0}, {0, 1}, {1, 1}}));
  for (std::size_t i = 0; i < n.size(); ++i) EXPECT_EQ(n.dofs[i], static_cast<int>(i));
}

TEST(Evaluate, ReproducesLinearAndQ2) {
  auto m = build_mesh(kUnit, 9, 9);
  CutDecomposition d(m, unit_disk());
  auto lin = [](Point p) { return 3 * p.x + 2 * p.y - 1; };
  auto q2 = [](Point p) { return p.x * p.x * p.y * p.y; };
  for (int k : {1, 2, 3}) {
    auto s = build_trial_space(d, k);
    auto pts = sample_points(s, 200, 7u + static_cast<unsigned>(k));
    auto vl = evaluate_fe_function(s, interpolate(s, lin), pts);
    for (std::size_t i = 0; i < pts.size(); ++i) {
      EXPECT_NEAR(vl.value[i], lin(pts[i]), 1e-13);
      EXPECT_NEAR(vl.gradient[i].x, 3.0, 1e-11);
      EXPECT_NEAR(vl.gradient[i].y, 2.0, 1e-11);
    }
    if (k >= 2) {
      auto vq = evaluate_fe_function(s, interpolate(s, q2), pts);
      for (std::size_t i = 0; i < pts.size(); ++i) EXPECT_NEAR(vq.value[i], q2(pts[i]), 1e-13);
    }
  }
}

TEST(Evaluate, GradientMatchesFiniteDifferences) {
  auto m = build_mesh(kUnit, 7, 7);
  CutDecomposition d(m, unit_disk());
  auto s = build_trial_space(d, 3);
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g;
  Vector u(static_cast<std::size_t>(s.num_dofs()));
  for (double& x : u) x = g(rng);
  const double eps = 1e-6;
  for (Point p : sample_points(s, 50, 11)) {
    // Keep the stencil inside the same cell.
    int c = s.find_active_cell(p);
    Point lo = m.cell_lo(c), hi = m.cell_hi(c);
    p.x = std::clamp(p.x, lo.x + 2 * eps, hi.x - 2 * eps);
    p.y = std::clamp(p.y, lo.y + 2 * eps, hi.y - 2 * eps);
    std::vector<Point> st{p, {p.x + eps, p.y}, {p.x - eps, p.y}, {p.x, p.y + eps}, {p.x, p.y - eps}};
    auto v = evaluate_fe_function(s, u, st);
    double fx = (v.value[1] - v.value[2]) / (2 * eps), fy = (v.value[3] - v.value[4]) / (2 * eps);
    double scale = std::max(1.0, std::hypot(v.gradient[0].x, v.gradient[0].y));
    EXPECT_NEAR(fx, v.gradient[0].x, 1e-6 * scale);
    EXPECT_NEAR(fy, v.gradient[0].y, 1e-6 * scale);
  }
}

TEST(Evaluate, PartitionOfUnity) {
  auto m = build_mesh(kUnit, 5, 5);
  CutDecomposition d(m, shapes::flower({0.5, 0.5}));
  for (int k : {1, 2, 4}) {
    auto s = build_trial_space(d, k);
    ShapeEval se;
    for (Point p : sample_points(s, 100, 5)) {
      s.shape(s.find_active_cell(p), p, se);
      double sum = 0.0, sx = 0.0, sy = 0.0;
      for (std::size_t l = 0; l < se.value.size(); ++l) {
        sum += se.value[l];
        sx += se.dx[l];
        sy += se.dy[l];
      }
      EXPECT_NEAR(sum, 1.0, 1e-12);
      EXPECT_NEAR(sx, 0.0, 1e-9);
      EXPECT_NEAR(sy, 0.0, 1e-9);
    }
  }
}

TEST(Evaluate, RejectsBadInput) {
  auto m = build_mesh(kUnit, 10, 10);
  CutDecomposition d(m, unit_disk());
  auto s = build_trial_space(d, 1);
  Vector u(static_cast<std::size_t>(s.num_dofs()), 0.0);
  std::vector<Point> far{{0.01, 0.01}};
  EXPECT_THROW(evaluate_fe_function(s, u, far), std::out_of_range);
  Vector short_u(3, 0.0);
  std::vector<Point> mid{{0.5, 0.5}};
  EXPECT_THROW(evaluate_fe_function(s, short_u, mid), std::invalid_argument);
}
