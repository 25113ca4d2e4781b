#include <random>

#include "doctest.h"
#include "regmod/numerics.hpp"
#include "regmod/projection.hpp"
#include "support.hpp"

using namespace regmod;
using regmod::test::vec;

TEST_SUITE("projection") {

TEST_CASE("disk") {
  auto r = project(test::sys("SYS-BALL"), vec({0}), vec({2, 0}));
  REQUIRE(r.converged());
  CHECK(r.x_star[0] == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(std::abs(r.x_star[1]) < 1e-9);
  CHECK(r.distance == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(r.multipliers_hat[0] == doctest::Approx(0.5).epsilon(1e-7));
  REQUIRE(r.multipliers);
  CHECK((*r.multipliers)[0] == doctest::Approx(0.5).epsilon(1e-7));
  CHECK(r.active.indices == IndexSet{1});
  CHECK(r.kkt_residual <= 1e-7);
}

TEST_CASE("example system singleton slice") {
  auto r = project(test::sys("SYS-EX1"), vec({0.1}), vec({0.1, -1}));
  REQUIRE(r.converged());
  CHECK(r.x_star[0] == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(r.x_star[1] == doctest::Approx(-1.0).epsilon(1e-9));
  CHECK(r.distance == doctest::Approx(0.9).epsilon(1e-9));
  CHECK(r.kkt_residual <= 1e-7);
  CHECK(r.feas_residual <= 1e-8);
}

TEST_CASE("example system at p = 0 keeps a feasible v") {
  auto r = project(test::sys("SYS-EX1"), vec({0}), vec({0, -1}));
  REQUIRE(r.converged());
  CHECK(r.distance < 1e-9);
  CHECK(r.x_star[1] == doctest::Approx(-1.0));
  CHECK_FALSE(r.multipliers);
}

TEST_CASE("empty slice is reported as not detected") {
  ParametricSystem s("empty", 1, 1, {Expr::parse("x1 - p1", 1, 1), Expr::parse("-1 - x1", 1, 1)});
  auto r = project(s, vec({-2}), vec({0}));
  CHECK(r.status == ProjectionStatus::infeasible_system);
  CHECK_FALSE(r.converged());
}

TEST_CASE("result invariants") {
  auto ex1 = test::sys("SYS-EX1");
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(-2, 2);
  for (int i = 0; i < 20; ++i) {
    Vec p = vec({u(rng) / 2});
    Vec v = vec({u(rng), u(rng)});
    auto r = project(ex1, p, v);
    REQUIRE(r.converged());
    CHECK(r.feas_residual == residual(ex1, p, r.x_star));
    CHECK(r.distance == doctest::Approx((r.x_star - v).norm()).epsilon(1e-14));
    Vec stat = r.x_star - v;
    for (int k = 1; k <= ex1.num_constraints(); ++k) {
      const double l = r.multipliers_hat[k - 1];
      CHECK(l >= 0.0);
      bool active = std::find(r.active.indices.begin(), r.active.indices.end(), k) != r.active.indices.end();
      if (!active) CHECK(l == 0.0);
      stat += l * ex1.constraint(k).grad_x(p, r.x_star);
    }
    CHECK(stat.norm() == doctest::Approx(r.kkt_residual).epsilon(1e-6));
  }
}

TEST_CASE("distance within the grid bracket") {
  struct Case {
    const char* fixture;
    double lo, hi;
  };
  for (Case c : {Case{"SYS-BALL", -1.5, 1.5}, Case{"SYS-EX1", -1, 1}, Case{"SYS-RANKDROP", -6, 6}}) {
    auto s = test::sys(c.fixture);
    Box box{Vec::Constant(2, c.lo), Vec::Constant(2, c.hi)};
    std::mt19937_64 rng(33);
    std::uniform_real_distribution<double> u(-1, 1);
    for (int i = 0; i < 10; ++i) {
      Vec p = vec({u(rng)});
      Vec v = vec({2 * u(rng), 2 * u(rng)});
      auto r = project(s, p, v);
      REQUIRE(r.converged());
      auto g = grid_distance(s, p, v, box, 201);
      CHECK_MESSAGE(r.distance >= g.lower - 1e-9, c.fixture);
      CHECK_MESSAGE(r.distance <= g.upper + 1e-9, c.fixture);
    }
  }
}

TEST_CASE("projection is idempotent") {
  for (const char* name : {"SYS-BALL", "SYS-EX1", "SYS-LIN", "SYS-RANKDROP", "SYS-DEGEN"}) {
    auto s = test::sys(name);
    std::mt19937_64 rng(44);
    std::uniform_real_distribution<double> u(-1, 1);
    for (int i = 0; i < 10; ++i) {
      Vec p = vec({u(rng)});
      Vec v = Vec::NullaryExpr(s.dx(), [&] { return 2 * u(rng); });
      auto r = project(s, p, v);
      REQUIRE(r.converged());
      auto again = project(s, p, r.x_star);
      CHECK(again.distance <= 1e-8);
    }
  }
}

TEST_CASE("projection onto convex sets is nonexpansive") {
  ParametricSystem box("box", 0, 2,
                       {Expr::parse("x1 - 1", 0, 2), Expr::parse("-x1 - 1", 0, 2), Expr::parse("x2 - 1", 0, 2),
                        Expr::parse("-x2 - 1", 0, 2)});
  std::mt19937_64 rng(55);
  std::uniform_real_distribution<double> u(-3, 3);
  for (const ParametricSystem& s : {test::sys("SYS-BALL"), test::sys("SYS-LIN"), box}) {
    Vec p = Vec::Constant(s.dp(), 0.2);
    for (int i = 0; i < 15; ++i) {
      Vec v1 = Vec::NullaryExpr(s.dx(), [&] { return u(rng); });
      Vec v2 = Vec::NullaryExpr(s.dx(), [&] { return u(rng); });
      auto a = project(s, p, v1);
      auto b = project(s, p, v2);
      CHECK((a.x_star - b.x_star).norm() <= (v1 - v2).norm() + 1e-6);
    }
  }
}

TEST_CASE("nonconvex ties break lexicographically") {
  // |x1| >= 1: both ends are nearest to 0.
  ParametricSystem ring("ring", 0, 1, {Expr::parse("1 - x1^2", 0, 1)});
  auto r = project(ring, Vec(0), vec({0}));
  REQUIRE(r.converged());
  CHECK(r.x_star[0] == doctest::Approx(-1.0));
  CHECK(r.distance == doctest::Approx(1.0));
}

TEST_CASE("multipliers examples") {
  auto a = multipliers(test::sys("SYS-BALL"), vec({0}), vec({1, 0}), vec({2, 0}));
  CHECK(a.lambda[0] == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(a.stationarity_residual < 1e-9);
  CHECK_FALSE(a.empty);

  auto b = multipliers(test::sys("SYS-EX1"), vec({0.1}), vec({1, -1}), vec({0.1, -1}));
  CHECK(b.lambda.size() == 5);
  CHECK(std::abs(b.lambda[0]) < 1e-7);
  CHECK(std::abs(b.lambda[1]) < 1e-12);
  CHECK(std::abs(b.lambda[2]) < 1e-12);
  CHECK(b.lambda[3] == doctest::Approx(10).epsilon(1e-7));
  CHECK(b.lambda[4] == doctest::Approx(10).epsilon(1e-7));
  CHECK(b.stationarity_residual < 1e-9);

  auto c = multipliers(test::sys("SYS-LIN"), vec({0}), vec({0}), vec({1}));
  CHECK(c.lambda[0] == doctest::Approx(1.0));
  CHECK(c.stationarity_residual < 1e-12);
}

TEST_CASE("multipliers preconditions") {
  CHECK_THROWS_AS(multipliers(test::sys("SYS-BALL"), vec({0}), vec({1, 0}), vec({1, 0})), Error);
  CHECK_THROWS_AS(multipliers(test::sys("SYS-BALL"), vec({0}), vec({2, 0}), vec({3, 0})), Error);
}

TEST_CASE("empty multiplier set") {
  // v on the wrong side: x - v points into the set, no nonnegative multiplier exists.
  auto r = multipliers(test::sys("SYS-LIN"), vec({0}), vec({0}), vec({-1}));
  CHECK(r.empty);
  CHECK(r.stationarity_residual == doctest::Approx(1.0));
}

TEST_CASE("minimum multiplier norm") {
  auto a = min_multiplier_norm(test::sys("SYS-BALL"), vec({0}), vec({1, 0}), vec({2, 0}));
  CHECK(a.l1 == doctest::Approx(0.5));
  auto b = min_multiplier_norm(test::sys("SYS-EX1"), vec({0.1}), vec({1, -1}), vec({0.1, -1}));
  CHECK(b.l1 == doctest::Approx(20).epsilon(1e-7));
  REQUIRE(b.min_l1);
  CHECK(*b.min_l1 == doctest::Approx(20).epsilon(1e-7));
  auto c = min_multiplier_norm(test::sys("SYS-EX1"), vec({0.01}), vec({1, -1}), vec({0.01, -1}));
  CHECK(c.l1 == doctest::Approx(200).epsilon(1e-7));
}

TEST_CASE("min 1-norm with redundant gradients") {
  // Gradients (1,0), (1,1), (1,-1): every multiplier has 1-norm at least 1.
  ParametricSystem s("fan", 0, 2, {Expr::parse("x1", 0, 2), Expr::parse("x1 + x2", 0, 2), Expr::parse("x1 - x2", 0, 2)});
  auto r = min_multiplier_norm(s, Vec(0), vec({0, 0}), vec({1, 0}));
  REQUIRE(r.min_l1);
  CHECK(*r.min_l1 == doctest::Approx(1.0));
  CHECK(r.l1 >= *r.min_l1 - 1e-12);
}

TEST_CASE("determinism") {
  auto s = test::sys("SYS-EX1");
  auto a = project(s, vec({0.37}), vec({-0.2, 0.8}));
  auto b = project(s, vec({0.37}), vec({-0.2, 0.8}));
  CHECK(a.x_star == b.x_star);
  CHECK(a.multipliers_hat == b.multipliers_hat);
}

}
