#include <algorithm>
#include <random>

#include "doctest.h"
#include "regmod/numerics.hpp"
#include "support.hpp"

using namespace regmod;
using regmod::test::vec;

namespace {

Mat mat(std::initializer_list<std::initializer_list<double>> rows) {
  Mat m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.begin()->size()));
  Eigen::Index i = 0;
  for (auto r : rows) {
    Eigen::Index j = 0;
    for (double d : r) m(i, j++) = d;
    ++i;
  }
  return m;
}

}  // namespace

TEST_SUITE("numerics") {

TEST_CASE("rank examples") {
  CHECK(numerical_rank(Mat::Identity(2, 2)).rank == 2);
  CHECK(numerical_rank(mat({{1, 0}, {1, 0}})).rank == 1);
  auto r = numerical_rank(mat({{1, 0}, {1, 1e-12}}), 1e-7);
  CHECK(r.rank == 1);
  // Exact singular values of [[1,0],[1,e]]: sigma1 sigma2 = e, sigma1^2 + sigma2^2 = 2 + e^2.
  const double e = 1e-12;
  const double s1 = std::sqrt((2 + e * e + std::sqrt((2 + e * e) * (2 + e * e) - 4 * e * e)) / 2);
  CHECK(r.singular_values[0] == doctest::Approx(s1));
  CHECK(r.singular_values[1] == doctest::Approx(e / s1).epsilon(1e-3));
  CHECK(r.threshold_used == doctest::Approx(1e-7 * s1));
}

TEST_CASE("rank of zero and empty matrices") {
  auto z = numerical_rank(Mat::Zero(3, 2));
  CHECK(z.rank == 0);
  CHECK(z.threshold_used == doctest::Approx(1e-7));
  CHECK(numerical_rank(Mat(0, 2)).rank == 0);
}

TEST_CASE("rank rejects non-finite entries") {
  Mat m = Mat::Identity(2, 2);
  m(0, 1) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(numerical_rank(m), Error);
}

TEST_CASE("rank is invariant under row scaling and permutation") {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-1, 1);
  std::uniform_real_distribution<double> scale(0.1, 10);
  for (int trial = 0; trial < 100; ++trial) {
    const int rows = 2 + trial % 4;
    const int cols = 3;
    const int true_rank = 1 + trial % std::min(rows, cols);
    Mat A = Mat::NullaryExpr(rows, true_rank, [&] { return u(rng); }) *
            Mat::NullaryExpr(true_rank, cols, [&] { return u(rng); });
    const int r0 = numerical_rank(A).rank;
    CHECK(r0 == true_rank);
    Mat B = A;
    for (int i = 0; i < rows; ++i) B.row(i) *= (trial % 2 ? -1 : 1) * scale(rng);
    std::vector<int> perm(rows);
    for (int i = 0; i < rows; ++i) perm[i] = i;
    std::shuffle(perm.begin(), perm.end(), rng);
    Mat C(rows, cols);
    for (int i = 0; i < rows; ++i) C.row(i) = B.row(perm[i]);
    CHECK(numerical_rank(C).rank == r0);
    CHECK(numerical_rank(C.topRows(rows - 1)).rank <= r0);
  }
}

TEST_CASE("max_li_subset examples") {
  CHECK(max_li_subset(std::vector<Vec>{vec({0, 1}), vec({0, -1})}) == IndexSet{1});
  CHECK(max_li_subset(std::vector<Vec>{vec({1, 0}), vec({0, 1}), vec({1, 1})}) == IndexSet{1, 2});
  CHECK(max_li_subset(std::vector<Vec>{vec({0, 0}), vec({1, 0})}) == IndexSet{2});
  CHECK(max_li_subset(std::vector<Vec>{}).empty());
  CHECK(max_li_subset(mat({{1, 1}, {2, 2}, {0, 1}})) == IndexSet{1, 3});
}

TEST_CASE("max_li_subset size equals the rank") {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int trial = 0; trial < 50; ++trial) {
    Mat A = Mat::NullaryExpr(5, 2, [&] { return u(rng); }) * Mat::NullaryExpr(2, 4, [&] { return u(rng); });
    IndexSet s = max_li_subset(A);
    CHECK(static_cast<int>(s.size()) == numerical_rank(A).rank);
  }
}

TEST_CASE("nnls examples") {
  auto a = nnls_minnorm(mat({{2}, {0}}), vec({1, 0}));
  CHECK(a.lambda[0] == doctest::Approx(0.5));
  CHECK(a.residual == doctest::Approx(0.0));

  auto b = nnls_minnorm(mat({{1, 0, -0.1}, {0, -1, 1}}), vec({-0.9, 0}));
  CHECK(b.lambda[0] == doctest::Approx(0.0));
  CHECK(b.lambda[1] == doctest::Approx(9.0));
  CHECK(b.lambda[2] == doctest::Approx(9.0));
  CHECK(b.residual < 1e-10);

  auto c = nnls_minnorm(mat({{1}, {0}}), vec({-1, 0}));
  CHECK(c.lambda[0] == 0.0);
  CHECK(c.residual == doctest::Approx(1.0));
}

TEST_CASE("nnls sign-free columns") {
  auto r = nnls_minnorm(mat({{1}, {0}}), vec({-1, 0}), {true});
  CHECK(r.lambda[0] == doctest::Approx(-1.0));
  CHECK(r.residual < 1e-10);
}

TEST_CASE("nnls minimum norm among minimizers") {
  // Two identical columns: every split of 2 is optimal, the min-norm one is (1, 1).
  auto r = nnls_minnorm(mat({{1, 1}, {0, 0}}), vec({2, 0}));
  CHECK(r.lambda[0] == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(r.lambda[1] == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("nnls residual beats random candidates") {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(-1, 1);
  std::uniform_real_distribution<double> pos(0, 3);
  for (int trial = 0; trial < 100; ++trial) {
    const int m = 2 + trial % 3;
    const int k = 1 + trial % 5;
    Mat A = Mat::NullaryExpr(m, k, [&] { return u(rng); });
    Vec b = Vec::NullaryExpr(m, [&] { return 2 * u(rng); });
    std::vector<bool> free(k, false);
    if (trial % 4 == 0) free[0] = true;
    auto r = nnls_minnorm(A, b, free);
    for (int i = 0; i < k; ++i)
      if (!free[i]) CHECK(r.lambda[i] >= 0.0);
    CHECK(r.residual == doctest::Approx((A * r.lambda - b).norm()).epsilon(1e-12));
    for (int c = 0; c < 50; ++c) {
      Vec cand(k);
      for (int i = 0; i < k; ++i) cand[i] = free[i] ? 3 * u(rng) : pos(rng);
      CHECK(r.residual <= (A * cand - b).norm() + 1e-10);
    }
  }
}

TEST_CASE("bounded_qp") {
  // min 1/2 |z|^2 - z1 + z2 with z >= 0: z = (1, 0).
  Vec z = bounded_qp(Mat::Identity(2, 2), vec({-1, 1}), {true, true});
  CHECK(z[0] == doctest::Approx(1.0));
  CHECK(z[1] == doctest::Approx(0.0));
  Vec w = bounded_qp(Mat::Identity(2, 2), vec({-1, 1}), {true, false});
  CHECK(w[1] == doctest::Approx(-1.0));
}

TEST_CASE("grid distance examples") {
  auto ball = test::sys("SYS-BALL");
  Box b15{vec({-1.5, -1.5}), vec({1.5, 1.5})};
  auto r = grid_distance(ball, vec({0}), vec({2, 0}), b15, 201);
  CHECK(r.upper >= 1.0);
  CHECK(r.upper <= 1.022);
  CHECK(r.lower <= 1.0);

  auto ex1 = test::sys("SYS-EX1");
  Box b1{vec({-1, -1}), vec({1, 1})};
  auto e = grid_distance(ex1, vec({0.1}), vec({0.1, -1}), b1, 201);
  const double diag = std::sqrt(2.0) * 0.01;
  CHECK(std::abs(e.upper - 0.9) <= diag);
  CHECK(e.nearest[0] == doctest::Approx(1.0));
  CHECK(e.nearest[1] == doctest::Approx(-1.0));

  auto f = grid_distance(ball, vec({0}), vec({0.1, 0.2}), b15, 201);
  CHECK(f.lower <= 0.0);
  CHECK(f.upper >= 0.0);
  CHECK(f.upper <= 0.022);
}

TEST_CASE("grid distance errors") {
  auto ex1 = test::sys("SYS-EX1");
  Box tiny{vec({0.2, 0.2}), vec({0.3, 0.3})};
  CHECK_THROWS_AS(grid_distance(ex1, vec({0.1}), vec({0, 0}), tiny, 11), NumericalFailure);
  Box b1{vec({-1, -1}), vec({1, 1})};
  CHECK_THROWS(grid_distance(ex1, vec({0.1}), vec({0, 0}), b1, 402));
}

}
