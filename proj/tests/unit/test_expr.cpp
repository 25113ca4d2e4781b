#include <cmath>
#include <set>

#include "doctest.h"
#include "random_expr.hpp"
#include "regmod/expr.hpp"
#include "support.hpp"

using namespace regmod;
using regmod::test::vec;

TEST_SUITE("expr") {

TEST_CASE("ball constraint parses and evaluates") {
  Expr h = Expr::parse("x1^2 + x2^2 - 1", 0, 2);
  Vec p(0);
  CHECK(h.eval(p, vec({1, 0})) == 0.0);
  CHECK(h.eval(p, vec({2, 0})) == 3.0);
  Vec g = h.grad_x(p, vec({1, 0}));
  CHECK(g[0] == 2.0);
  CHECK(g[1] == 0.0);
  CHECK(h.depends_on_x());
  CHECK_FALSE(h.depends_on_p());
}

TEST_CASE("ex1 cut constraint") {
  Expr h5 = Expr::parse("x2 - p1*x1 + abs(p1) + 1", 1, 2);
  CHECK_FALSE(h5.abs_on_x());
  CHECK(h5.eval(vec({0.1}), vec({0.1, -1})) == doctest::Approx(-1 - 0.01 + 0.1 + 1).epsilon(1e-15));
  Vec gx = h5.grad_x(vec({0.1}), vec({1, -1}));
  CHECK(gx[0] == doctest::Approx(-0.1));
  CHECK(gx[1] == 1.0);
  Vec gp = h5.grad_p(vec({0.1}), vec({1, -1}));
  CHECK(std::abs(gp[0]) < 1e-15);
}

TEST_CASE("abs of x is flagged") {
  CHECK(Expr::parse("abs(x1) - 1", 0, 1).abs_on_x());
  CHECK(Expr::parse("abs(p1 + x1)", 1, 1).abs_on_x());
  CHECK_FALSE(Expr::parse("abs(p1)*x1", 1, 1).abs_on_x());
}

TEST_CASE("abs derivative at zero is zero") {
  Expr e = Expr::parse("abs(x1)", 0, 1);
  CHECK(e.grad_x(Vec(0), vec({0.0}))[0] == 0.0);
  CHECK(e.grad_x(Vec(0), vec({-2.0}))[0] == -1.0);
}

TEST_CASE("grad_p of linear and constant expressions") {
  Expr lin = Expr::parse("x1 + p1", 1, 1);
  CHECK(lin.grad_p(vec({2}), vec({0}))[0] == 1.0);
  Expr c = Expr::parse("3.5", 2, 2);
  Vec gp = c.grad_p(vec({1, 2}), vec({3, 4}));
  CHECK(gp.size() == 2);
  CHECK(gp.isZero(0.0));
  CHECK(c.grad_x(vec({1, 2}), vec({3, 4})).isZero(0.0));
}

TEST_CASE("parse errors") {
  CHECK_THROWS_AS(Expr::parse("x3", 0, 2), ParseError);
  CHECK_THROWS_AS(Expr::parse("p1", 0, 2), ParseError);
  CHECK_THROWS_AS(Expr::parse("x0", 0, 2), ParseError);
  CHECK_THROWS_AS(Expr::parse("x1 +", 0, 2), ParseError);
  CHECK_THROWS_AS(Expr::parse("(x1", 0, 2), ParseError);
  CHECK_THROWS_AS(Expr::parse("tan(x1)", 0, 2), ParseError);
  CHECK_THROWS_AS(Expr::parse("x1^0.5", 0, 2), ParseError);
  CHECK_THROWS_AS(Expr::parse("x1 x2", 0, 2), ParseError);
  CHECK_THROWS_AS(Expr::parse("", 0, 2), ParseError);
}

TEST_CASE("parse error offset points into the text") {
  try {
    Expr::parse("x1 + x9", 0, 2);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.offset() == 5);
  }
}

TEST_CASE("domain errors") {
  CHECK_THROWS_AS(Expr::parse("log(x1)", 0, 1).eval(Vec(0), vec({0.0})), DomainError);
  CHECK_THROWS_AS(Expr::parse("log(x1)", 0, 1).eval(Vec(0), vec({-1.0})), DomainError);
  CHECK_THROWS_AS(Expr::parse("1/x1", 0, 1).eval(Vec(0), vec({0.0})), DomainError);
}

TEST_CASE("dimension mismatch") {
  Expr e = Expr::parse("x1 + p1", 1, 1);
  CHECK_THROWS_AS(e.eval(vec({1, 2}), vec({1})), DimensionError);
  CHECK_THROWS_AS(e.eval(vec({1}), Vec(0)), DimensionError);
}

TEST_CASE("precedence and unary minus") {
  Vec p(0);
  auto ev = [&](const char* s) { return Expr::parse(s, 0, 2).eval(p, vec({2, 3})); };
  CHECK(ev("1 + 2*3") == 7);
  CHECK(ev("-x1^2") == -4);
  CHECK(ev("x1 - x2 - 1") == -2);
  CHECK(ev("x2 / x1 / 3") == doctest::Approx(0.5));
  CHECK(ev("--x1") == 2);
  CHECK(ev("2e-1 * 10") == doctest::Approx(2));
  CHECK(ev("  x1*x2\t+1 ") == 7);
  CHECK(ev("exp(0) + cos(0) + sin(0) + log(1)") == 2);
}

TEST_CASE("printing round-trips structurally") {
  for (const char* s : {"x1^2 + x2^2 - 1", "x2 - p1*x1 + abs(p1) + 1", "-(x1 - -x2)/3", "exp(sin(p1))^3*log(x2)",
                        "1e-300 + 2.5E+10*x1", "0.1 + 0.2"}) {
    Expr e = Expr::parse(s, 1, 2);
    Expr back = Expr::parse(e.to_string(), 1, 2);
    CHECK_MESSAGE(structurally_equal(e, back), s);
  }
}

TEST_CASE("printing round-trips on random trees") {
  test::RandomExprGen gen(2, 3, 7);
  for (int i = 0; i < 300; ++i) {
    auto tree = gen.make(5);
    Expr e = Expr::parse(test::print(*tree), 2, 3);
    Expr back = Expr::parse(e.to_string(), 2, 3);
    REQUIRE(structurally_equal(e, back));
    CHECK(back.to_string() == e.to_string());
  }
}

TEST_CASE("evaluation agrees with an independent evaluator") {
  test::RandomExprGen gen(2, 2, 11);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  int compared = 0;
  for (int i = 0; i < 500; ++i) {
    auto tree = gen.make(4);
    Expr e = Expr::parse(test::print(*tree), 2, 2);
    std::vector<double> p{u(rng), u(rng)}, x{u(rng), u(rng)};
    double margin = 1.0;
    double want = test::eval(*tree, p, x, margin);
    if (!(margin > 1e-9) || !std::isfinite(want)) continue;
    double got = e.eval(vec({p[0], p[1]}), vec({x[0], x[1]}));
    CHECK(test::rel_err(got, want) <= 1e-12);
    ++compared;
  }
  CHECK(compared > 300);
}

TEST_CASE("gradients agree with finite differences away from kinks") {
  test::RandomExprGen gen(2, 2, 19);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1.5, 1.5);
  int checked = 0;
  double worst = 0.0;
  for (int i = 0; i < 600; ++i) {
    auto tree = gen.make(4);
    Expr e = Expr::parse(test::print(*tree), 2, 2);
    std::vector<double> p{u(rng), u(rng)}, x{u(rng), u(rng)};
    auto r = test::check_gradient(*tree, e, p, x);
    if (!r.usable) continue;
    ++checked;
    worst = std::max(worst, r.rel_err);
    CHECK_MESSAGE(r.rel_err <= 1e-6, e.to_string());
  }
  CHECK(checked > 300);
  MESSAGE("worst relative gradient error " << worst << " over " << checked);
}

TEST_CASE("eval_with_grad stacks p then x") {
  Expr e = Expr::parse("p1*x2 + p2^2 + 3*x1", 2, 2);
  Vec g;
  double v = e.eval_with_grad(vec({2, 5}), vec({7, 11}), g);
  CHECK(v == 22 + 25 + 21);
  CHECK(g[0] == 11);
  CHECK(g[1] == 10);
  CHECK(g[2] == 3);
  CHECK(g[3] == 2);
}

TEST_CASE("evaluation is repeatable") {
  Expr e = Expr::parse("sin(x1)*exp(p1) / (1 + x2^2)", 1, 2);
  double a = e.eval(vec({0.3}), vec({0.7, -0.2}));
  double b = e.eval(vec({0.3}), vec({0.7, -0.2}));
  CHECK(a == b);
}

TEST_CASE("operator builders") {
  Expr x1 = Expr::var_x(1, 1, 2);
  Expr p1 = Expr::var_p(1, 1, 2);
  Expr e = 2.0 * x1 * p1 - Expr::constant(1.0, 1, 2) + x1;
  CHECK(e.eval(vec({3}), vec({2, 0})) == 2 * 2 * 3 - 1 + 2);
  CHECK(structurally_equal(Expr::parse(e.to_string(), 1, 2), e));
}

}
