#include <gtest/gtest.h>

#include <set>
#include <utility>

#include "feinn/geometry.hpp"
#include "feinn/mesh.hpp"

using namespace feinn;

namespace {
const BoundingBox kUnit{{0.0, 0.0}, {1.0, 1.0}};
}

TEST(BuildMesh, FiftyByFifty) {
  auto m = build_mesh(kUnit, 50, 50);
  EXPECT_EQ(m.num_cells(), 2500);
  EXPECT_DOUBLE_EQ(m.h(), 1.0 / 50);
}

TEST(BuildMesh, FiveByFour) {
  auto m = build_mesh(kUnit, 5, 4);
  EXPECT_EQ(m.num_cells(), 20);
  EXPECT_EQ(m.num_vertices(), 30);
  EXPECT_DOUBLE_EQ(m.h(), 0.25);
}

TEST(BuildMesh, SingleCellHasNoInteriorFacets) {
  auto m = build_mesh(kUnit, 1, 1);
  EXPECT_EQ(m.num_cells(), 1);
  EXPECT_TRUE(m.interior_facets().empty());
}

TEST(BuildMesh, RejectsBadInput) {
  EXPECT_THROW(build_mesh(kUnit, 0, 3), std::invalid_argument);
  EXPECT_THROW(build_mesh(kUnit, 3, -1), std::invalid_argument);
  EXPECT_THROW(build_mesh({{0, 0}, {0, 1}}, 3, 3), std::invalid_argument);
  EXPECT_THROW(build_mesh({{1, 0}, {0, 1}}, 3, 3), std::invalid_argument);
}

TEST(BuildMesh, CellAreasSumToBox) {
  BoundingBox box{{-0.3, 0.1}, {1.7, 0.9}};
  auto m = build_mesh(box, 13, 7);
  double s = 0.0;
  for (int c = 0; c < m.num_cells(); ++c) {
    Point lo = m.cell_lo(c), hi = m.cell_hi(c);
    s += (hi.x - lo.x) * (hi.y - lo.y);
  }
  EXPECT_NEAR(s, box.area(), 1e-12 * box.area());
}

TEST(BuildMesh, FacetsSharedByExactlyTwoCells) {
  auto m = build_mesh(kUnit, 6, 4);
  auto facets = m.interior_facets();
  EXPECT_EQ(facets.size(), static_cast<std::size_t>(5 * 4 + 6 * 3));
  std::set<std::pair<int, int>> seen;
  for (const auto& f : facets) {
    EXPECT_LT(f.minus, f.plus);
    EXPECT_TRUE(seen.insert({f.minus, f.plus}).second);
    // the two cells share an edge
    Point a = m.cell_lo(f.minus), b = m.cell_lo(f.plus);
    if (f.normal_axis == 0) {
      EXPECT_DOUBLE_EQ(b.x - a.x, m.hx());
      EXPECT_DOUBLE_EQ(b.y, a.y);
    } else {
      EXPECT_DOUBLE_EQ(b.y - a.y, m.hy());
      EXPECT_DOUBLE_EQ(b.x, a.x);
    }
  }
}

TEST(RefineUniform, FiveByFourByTwo) {
  auto r = refine_uniform(build_mesh(kUnit, 5, 4), 2);
  EXPECT_EQ(r.fine.nx(), 10);
  EXPECT_EQ(r.fine.ny(), 8);
}

TEST(RefineUniform, FactorOneIsIdentity) {
  auto m = build_mesh(kUnit, 7, 3);
  auto r = refine_uniform(m, 1);
  EXPECT_EQ(r.fine.nx(), 7);
  EXPECT_EQ(r.fine.ny(), 3);
  for (int c = 0; c < m.num_cells(); ++c) EXPECT_EQ(r.parent(c), c);
}

TEST(RefineUniform, ParentByFloorDivision) {
  auto r = refine_uniform(build_mesh(kUnit, 3, 3), 3);
  EXPECT_EQ(r.fine.nx(), 9);
  EXPECT_EQ(r.parent(r.fine.cell_id(7, 2)), r.coarse.cell_id(2, 0));
}

TEST(RefineUniform, RejectsFactorBelowOne) {
  EXPECT_THROW(refine_uniform(build_mesh(kUnit, 2, 2), 0), std::invalid_argument);
}

TEST(RefineUniform, ComposesExactly) {
  BoundingBox box{{0.1, -0.2}, {0.8, 1.3}};
  auto m = build_mesh(box, 3, 5);
  auto ab = refine_uniform(refine_uniform(m, 2).fine, 3).fine;
  auto direct = refine_uniform(m, 6).fine;
  ASSERT_EQ(ab.num_vertices(), direct.num_vertices());
  for (int v = 0; v < ab.num_vertices(); ++v) {
    EXPECT_EQ(ab.vertex(v).x, direct.vertex(v).x);
    EXPECT_EQ(ab.vertex(v).y, direct.vertex(v).y);
  }
}

TEST(Skeleton, EmptyCutSet) {
  EXPECT_TRUE(skeleton_faces_near_boundary(build_mesh(kUnit, 4, 4), {}).empty());
}

TEST(Skeleton, CentreCellHasFourFacets) {
  auto m = build_mesh(kUnit, 3, 3);
  auto f = skeleton_faces_near_boundary(m, {4});
  EXPECT_EQ(f.size(), 4u);
  for (const auto& x : f) EXPECT_TRUE(x.minus == 4 || x.plus == 4);
}

TEST(Skeleton, DiskMatchesBruteForceScan) {
  auto m = build_mesh(kUnit, 50, 50);
  CutDecomposition d(m, shapes::disk({0.5, 0.5}, 0.4));
  auto f = skeleton_faces_near_boundary(m, d.cut_cells());
  std::set<int> cut(d.cut_cells().begin(), d.cut_cells().end());
  // Oracle: scan every cell pair that shares an edge.
  std::size_t count = 0;
  for (int j = 0; j < 50; ++j)
    for (int i = 0; i < 50; ++i) {
      int c = m.cell_id(i, j);
      if (i + 1 < 50 && (cut.count(c) || cut.count(m.cell_id(i + 1, j)))) ++count;
      if (j + 1 < 50 && (cut.count(c) || cut.count(m.cell_id(i, j + 1)))) ++count;
    }
  EXPECT_EQ(f.size(), count);
  std::set<std::pair<int, int>> uniq;
  for (const auto& x : f) uniq.insert({x.minus, x.plus});
  EXPECT_EQ(uniq.size(), f.size());
  // Orientation is deterministic.
  auto again = skeleton_faces_near_boundary(m, d.cut_cells());
  EXPECT_EQ(f, again);
}
