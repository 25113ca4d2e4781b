#include <algorithm>
#include <random>

#include "doctest.h"
#include "regmod/problem_file.hpp"
#include "regmod/system.hpp"
#include "support.hpp"

using namespace regmod;
using regmod::test::vec;

TEST_SUITE("system") {

TEST_CASE("residual") {
  auto ex1 = test::sys("SYS-EX1");
  CHECK(residual(ex1, vec({0.1}), vec({1, -1})) == 0.0);
  CHECK(residual(ex1, vec({0.1}), vec({0.1, -1})) == doctest::Approx(0.09).epsilon(1e-12));
  auto ball = test::sys("SYS-BALL");
  CHECK(residual(ball, vec({0}), vec({0, 0})) == 0.0);
  CHECK(residual(ball, vec({0}), vec({2, 0})) == 3.0);
}

TEST_CASE("equalities contribute their absolute value") {
  ParametricSystem s("eq", 0, 2, {Expr::parse("x1 - 1", 0, 2)}, {Expr::parse("x2 - 2", 0, 2)});
  CHECK(s.num_ineq() == 1);
  CHECK(s.num_eq() == 1);
  CHECK(s.is_equality(2));
  CHECK(s.equality_indices() == IndexSet{2});
  CHECK(residual(s, Vec(0), vec({0, 0})) == 2.0);
  CHECK(residual(s, Vec(0), vec({0, 5})) == 3.0);
  CHECK(residual(s, Vec(0), vec({0, 2})) == 0.0);
}

TEST_CASE("is_feasible") {
  CHECK(is_feasible(test::sys("SYS-BALL"), vec({0}), vec({1, 0}), 1e-8));
  CHECK_FALSE(is_feasible(test::sys("SYS-EX1"), vec({0.1}), vec({0.1, -1}), 1e-8));
  CHECK(is_feasible(test::sys("SYS-DEGEN"), vec({0.3}), vec({5, 0.3}), 1e-8));
  CHECK_FALSE(is_feasible(test::sys("SYS-DEGEN"), vec({0.3}), vec({5, 0.31}), 1e-8));
}

TEST_CASE("residual zero iff feasible with zero tolerance") {
  auto ex1 = test::sys("SYS-EX1");
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1.2, 1.2);
  for (int i = 0; i < 500; ++i) {
    Vec p = vec({i % 7 == 0 ? 0.0 : u(rng)});
    Vec x = i % 3 == 0 ? vec({std::round(u(rng)), -1}) : vec({u(rng), u(rng)});
    CHECK((residual(ex1, p, x) == 0.0) == is_feasible(ex1, p, x, 0.0));
  }
}

TEST_CASE("active_set") {
  auto ball = test::sys("SYS-BALL");
  CHECK(active_set(ball, vec({0}), vec({1, 0}), 1e-6).indices == IndexSet{1});
  CHECK(active_set(ball, vec({0}), vec({0, 0}), 1e-6).indices.empty());
  CHECK(active_set(test::sys("SYS-EX1"), vec({0}), vec({0, -1}), 1e-6).indices == IndexSet{4, 5});
}

TEST_CASE("active_set is monotone in eta") {
  auto ex1 = test::sys("SYS-EX1");
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int i = 0; i < 200; ++i) {
    Vec p = vec({u(rng)});
    Vec x = vec({u(rng), u(rng)});
    IndexSet prev;
    for (double eta : {0.0, 1e-3, 1e-2, 0.1, 0.5, 1.0, 3.0}) {
      IndexSet cur = active_set(ex1, p, x, eta).indices;
      CHECK(std::includes(cur.begin(), cur.end(), prev.begin(), prev.end()));
      prev = cur;
    }
  }
}

TEST_CASE("default eta scales with the constraint values") {
  auto ball = test::sys("SYS-BALL");
  CHECK(default_eta(ball, vec({0}), vec({0, 0})) == doctest::Approx(2e-6));
  CHECK(active_set(ball, vec({0}), vec({1 + 1e-7, 0})).indices == IndexSet{1});
}

TEST_CASE("jacobian") {
  Mat jd = jacobian(test::sys("SYS-DEGEN"), vec({0.7}), vec({-3, 2}), {1, 2});
  CHECK(jd.rows() == 2);
  CHECK(jd(0, 0) == 0);
  CHECK(jd(0, 1) == 1);
  CHECK(jd(1, 0) == 0);
  CHECK(jd(1, 1) == -1);
  Mat jr = jacobian(test::sys("SYS-RANKDROP"), vec({0.5}), vec({0, 0}), {1, 2});
  CHECK(jr(0, 0) == 1);
  CHECK(jr(0, 1) == 0);
  CHECK(jr(1, 0) == 1);
  CHECK(jr(1, 1) == 0.5);
  Mat jb = jacobian(test::sys("SYS-BALL"), vec({0}), vec({1, 0}), {1});
  CHECK(jb(0, 0) == 2);
  CHECK(jb(0, 1) == 0);
}

TEST_CASE("jacobian rows form submatrices") {
  auto ex1 = test::sys("SYS-EX1");
  Vec p = vec({0.3});
  Vec x = vec({0.2, -0.4});
  Mat full = full_jacobian(ex1, p, x);
  CHECK(full.rows() == 5);
  IndexSet rows{2, 5};
  Mat sub = jacobian(ex1, p, x, rows);
  for (std::size_t k = 0; k < rows.size(); ++k) CHECK(sub.row(k) == full.row(rows[k] - 1));
  CHECK_THROWS_AS(jacobian(ex1, p, x, {6}), DimensionError);
}

TEST_CASE("with_inequality appends before equalities") {
  ParametricSystem s("s", 0, 1, {Expr::parse("x1 - 1", 0, 1)}, {Expr::parse("x1", 0, 1)});
  auto t = s.with_inequality(Expr::parse("-x1 - 5", 0, 1));
  CHECK(t.num_ineq() == 2);
  CHECK(t.equality_indices() == IndexSet{3});
  CHECK(t.constraint(2).eval(Vec(0), vec({0})) == -5);
}

TEST_CASE("dimension checks") {
  auto ball = test::sys("SYS-BALL");
  CHECK_THROWS_AS(residual(ball, vec({0}), vec({1})), DimensionError);
  CHECK_THROWS_AS(ParametricSystem("bad", 1, 2, {Expr::parse("x1", 1, 1)}), DimensionError);
}

}

TEST_SUITE("problem_file") {

TEST_CASE("parses sections") {
  auto pf = parse_problem(R"(# comment
[problem] name=demo dp=1 dx=2

[ineq]
h1 = x1^2 + x2^2 - 1
h2 = x1 - p1
[eq]
e1 = x2
)");
  CHECK(pf.system.name() == "demo");
  CHECK(pf.system.dp() == 1);
  CHECK(pf.system.dx() == 2);
  CHECK(pf.system.num_ineq() == 2);
  CHECK(pf.system.num_eq() == 1);
  CHECK_FALSE(pf.is_bilevel());
  CHECK(pf.warnings.empty());
}

TEST_CASE("bilevel sections") {
  auto pf = parse_problem(R"([problem] name=b dp=1 dx=1
[ineq]
h1 = x1 - p1
[upper]
G = x1^2
[lower]
f = -x1
[pcons]
g1 = p1 - 3
)");
  CHECK(pf.is_bilevel());
  CHECK(pf.pcons.size() == 1);
}

TEST_CASE("abs on x warns") {
  auto pf = parse_problem("[problem] name=a dp=0 dx=1\n[ineq]\nh1 = abs(x1) - 1\n");
  CHECK(pf.warnings.size() == 1);
}

TEST_CASE("errors") {
  CHECK_THROWS_AS(parse_problem("[ineq]\nh1 = x1\n"), ParseError);
  CHECK_THROWS_AS(parse_problem("[problem] name=a dp=0 dx=1\nh1 = x1\n"), ParseError);
  CHECK_THROWS_AS(parse_problem("[problem] name=a dp=0 dx=1\n[ineq]\nh2 = x1\n"), ParseError);
  CHECK_THROWS_AS(parse_problem("[problem] name=a dp=0 dx=1\n[ineq]\nh1 = x2\n"), ParseError);
  CHECK_THROWS_AS(parse_problem("[problem] name=a dp=0 dx=1\n[foo]\n"), ParseError);
  CHECK_THROWS_AS(parse_problem("[problem] name=a dp=x dx=1\n"), ParseError);
  CHECK_THROWS_AS(parse_problem("[problem] name=a dp=1 dx=1\n[ineq]\nh1 = x1\n[upper]\nG = x1\n"), ParseError);
  CHECK_THROWS_AS(parse_problem("[problem] name=a dp=1 dx=1\n[ineq]\nh1 = x1\n[pcons]\ng1 = x1\n"), ParseError);
  CHECK_THROWS_AS(load_problem("/nonexistent/file.prob"), Error);
}

TEST_CASE("normalized text ignores cosmetic whitespace") {
  std::string a = "[problem] name=a dp=0 dx=1\n[ineq]\nh1 = x1 - 1\n";
  std::string b = "\n  [problem]   name=a dp=0\tdx=1  \n\n[ineq]\nh1  =  x1 - 1   \n\n";
  CHECK(normalize_problem_text(a) == normalize_problem_text(b));
  CHECK(normalize_problem_text(a) != normalize_problem_text("[problem] name=a dp=0 dx=1\n[ineq]\nh1 = x1 - 2\n"));
}

}
