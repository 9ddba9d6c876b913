#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <cmath>
#include <random>

#include "feinn/linalg.hpp"
#include "feinn/weakforms.hpp"

using namespace feinn;

namespace {

Eigen::MatrixXd dense(const SparseMatrix& a) {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(a.rows(), a.cols());
  for (const auto& t : a.triplets()) m(t.row, t.col) += t.value;
  return m;
}

Vector random_vector(std::size_t n, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  Vector v(n);
  for (double& x : v) x = g(rng);
  return v;
}

// Small random SPD matrix with a banded pattern.
SparseMatrix random_spd(int n, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<Triplet> t;
  for (int i = 0; i < n; ++i) {
    t.push_back({i, i, 6.0});
    for (int j : {i + 1, i + 3})
      if (j < n) {
        double v = u(rng);
        t.push_back({i, j, v});
        t.push_back({j, i, v});
      }
  }
  return SparseMatrix::from_triplets(n, n, t);
}

GramOperator disk_gram() {
  auto setup = make_setup(build_mesh({{0, 0}, {1, 1}}, 6, 6), shapes::disk({0.5, 0.5}, 0.4), 1);
  return assemble_gram(setup.test, setup.decomp, GhostStabilization{});
}

}  // namespace

TEST(Sparse, FromTripletsSumsDuplicatesAndSortsColumns) {
  auto a = SparseMatrix::from_triplets(2, 3, {{1, 2, 1.0}, {0, 1, 2.0}, {1, 0, 3.0}, {1, 2, 4.0}});
  EXPECT_EQ(a.nnz(), 3u);
  EXPECT_EQ(a.coeff(1, 2), 5.0);
  EXPECT_EQ(a.coeff(0, 0), 0.0);
  for (int r = 0; r < a.rows(); ++r)
    for (int k = a.row_ptr()[static_cast<std::size_t>(r)] + 1; k < a.row_ptr()[static_cast<std::size_t>(r) + 1]; ++k)
      EXPECT_LT(a.col_idx()[static_cast<std::size_t>(k) - 1], a.col_idx()[static_cast<std::size_t>(k)]);
  EXPECT_THROW(SparseMatrix::from_triplets(2, 2, {{2, 0, 1.0}}), std::out_of_range);
}

TEST(Sparse, SpmvThreeByThree) {
  auto a = SparseMatrix::from_triplets(3, 3, {{0, 0, 1}, {0, 2, 2}, {1, 1, -1}, {2, 0, 4}, {2, 1, 5}});
  Vector x{1, 2, 3};
  auto y = spmv(a, x);
  EXPECT_EQ(y, (Vector{7, -2, 14}));
  auto z = spmv_transpose(a, x);
  EXPECT_EQ(z, (Vector{13, 13, 2}));
  Vector bad{1, 2};
  EXPECT_THROW(spmv(a, bad), std::invalid_argument);
  EXPECT_THROW(spmv_transpose(a, bad), std::invalid_argument);
}

TEST(Sparse, AdjointIdentity) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<Triplet> t;
  for (int k = 0; k < 200; ++k) t.push_back({static_cast<int>(rng() % 30), static_cast<int>(rng() % 45), u(rng)});
  auto a = SparseMatrix::from_triplets(30, 45, t);
  for (unsigned s = 0; s < 5; ++s) {
    auto x = random_vector(30, 10 + s), y = random_vector(45, 20 + s);
    double lhs = dot(spmv_transpose(a, x), y), rhs = dot(x, spmv(a, y));
    EXPECT_NEAR(lhs, rhs, 1e-12 * (1.0 + std::abs(lhs)));
  }
}

TEST(Sparse, CongruenceMatchesDense) {
  auto m = random_spd(12, 4);
  std::vector<Triplet> t;
  for (int i = 0; i < 12; ++i) t.push_back({i, i % 5, 1.0 + 0.1 * i});
  auto c = SparseMatrix::from_triplets(12, 5, t);
  auto ctmc = congruence(c, m);
  Eigen::MatrixXd ref = dense(c).transpose() * dense(m) * dense(c);
  EXPECT_LT((dense(ctmc) - ref).norm(), 1e-12 * ref.norm());
}

TEST(Cholesky, Identity) {
  std::vector<Triplet> t;
  for (int i = 0; i < 5; ++i) t.push_back({i, i, 1.0});
  auto f = cholesky(SparseMatrix::from_triplets(5, 5, t));
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j <= i; ++j) EXPECT_EQ(f.l(i, j), i == j ? 1.0 : 0.0);
  auto r = random_vector(5, 2);
  EXPECT_EQ(f.solve(r), r);
}

TEST(Cholesky, TwoByTwo) {
  auto f = cholesky(SparseMatrix::from_triplets(2, 2, {{0, 0, 4}, {0, 1, 2}, {1, 0, 2}, {1, 1, 3}}));
  // The ordering of a 2x2 pattern is the identity or the swap; check in the
  // permuted frame when swapped.
  if (f.permutation()[0] == 0) {
    EXPECT_NEAR(f.l(0, 0), 2.0, 1e-15);
    EXPECT_NEAR(f.l(1, 0), 1.0, 1e-15);
    EXPECT_NEAR(f.l(1, 1), std::sqrt(2.0), 1e-15);
  } else {
    EXPECT_NEAR(f.l(0, 0), std::sqrt(3.0), 1e-15);
    EXPECT_NEAR(f.l(1, 0), 2.0 / std::sqrt(3.0), 1e-15);
    EXPECT_NEAR(f.l(1, 1), std::sqrt(4.0 - 4.0 / 3.0), 1e-15);
  }
}

TEST(Cholesky, ReconstructsPermutedMatrix) {
  auto b = random_spd(40, 9);
  auto f = cholesky(b);
  Eigen::MatrixXd bd = dense(b), l = Eigen::MatrixXd::Zero(40, 40), pb(40, 40);
  for (int i = 0; i < 40; ++i)
    for (int j = 0; j <= i; ++j) l(i, j) = f.l(i, j);
  for (int i = 0; i < 40; ++i)
    for (int j = 0; j < 40; ++j) pb(i, j) = bd(f.permutation()[static_cast<std::size_t>(i)], f.permutation()[static_cast<std::size_t>(j)]);
  EXPECT_LT((l * l.transpose() - pb).norm(), 1e-10 * pb.norm());
}

TEST(Cholesky, NotSpdThrows) {
  auto b = SparseMatrix::from_triplets(2, 2, {{0, 0, 1}, {0, 1, 2}, {1, 0, 2}, {1, 1, 1}});
  try {
    cholesky(b);
    FAIL() << "expected an exception";
  } catch (const std::runtime_error& e) {
    EXPECT_NE(std::string(e.what()).find("not SPD"), std::string::npos);
  }
  EXPECT_THROW(cholesky(SparseMatrix::from_triplets(2, 3, {})), std::invalid_argument);
}

TEST(Cholesky, DiskGramMatchesDenseSolve) {
  auto gram = disk_gram();
  Eigen::MatrixXd bd = dense(gram.matrix);
  auto r = random_vector(static_cast<std::size_t>(gram.size()), 5);
  auto x = gram.factor.solve(r);
  Eigen::VectorXd ref = bd.ldlt().solve(Eigen::Map<const Eigen::VectorXd>(r.data(), static_cast<Eigen::Index>(r.size())));
  for (int i = 0; i < gram.size(); ++i) EXPECT_NEAR(x[static_cast<std::size_t>(i)], ref(i), 1e-10 * (1.0 + ref.cwiseAbs().maxCoeff()));
}

TEST(Cholesky, SolveInvertsProduct) {
  for (unsigned s = 0; s < 3; ++s) {
    auto b = random_spd(60, 30 + s);
    auto f = cholesky(b);
    auto x = random_vector(60, 40 + s);
    auto y = f.solve(spmv(b, x));
    double err = 0.0, nx = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      err = std::max(err, std::abs(y[i] - x[i]));
      nx = std::max(nx, std::abs(x[i]));
    }
    EXPECT_LE(err, 1e-9 * nx);
  }
}

TEST(Cholesky, FactorReusedAcrossManySolves) {
  auto b = random_spd(50, 3);
  long before = cholesky_factorization_count();
  auto f = cholesky(b);
  auto r = random_vector(50, 8);
  for (int i = 0; i < 1000; ++i) r = f.solve(r);
  EXPECT_EQ(f.solve_count(), 1000);
  EXPECT_EQ(cholesky_factorization_count() - before, 1);
  Vector bad(49);
  EXPECT_THROW(f.solve(bad), std::invalid_argument);
}

TEST(Ordering, RcmIsAPermutation) {
  auto b = random_spd(35, 12);
  auto p = reverse_cuthill_mckee(b);
  std::vector<int> sorted = p;
  std::sort(sorted.begin(), sorted.end());
  for (int i = 0; i < 35; ++i) EXPECT_EQ(sorted[static_cast<std::size_t>(i)], i);
}
