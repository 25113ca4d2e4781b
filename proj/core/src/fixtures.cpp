#include "regmod/fixtures.hpp"

namespace regmod {

const std::vector<Fixture>& builtin_fixtures() {
  static const std::vector<Fixture> all = {
      {"SYS-BALL", "sys_ball.prob", R"(# Closed unit disk; the map is constant in p.
[problem] name=SYS-BALL dp=1 dx=2
[ineq]
h1 = x1^2 + x2^2 - 1
)"},
      {"SYS-EX1", "sys_ex1.prob", R"(# Box [-1,1]^2 cut by a parameter-dependent halfplane.
# F(p) = {(1,-1)} for p > 0, {(-1,-1)} for p < 0, the bottom edge at p = 0.
[problem] name=SYS-EX1 dp=1 dx=2
[ineq]
h1 = x1 - 1
h2 = -x1 - 1
h3 = x2 - 1
h4 = -x2 - 1
h5 = x2 - p1*x1 + abs(p1) + 1
)"},
      {"SYS-LIN", "sys_lin.prob", R"([problem] name=SYS-LIN dp=1 dx=1
[ineq]
h1 = x1 + p1
)"},
      {"SYS-RANKDROP", "sys_rankdrop.prob", R"(# Gradients (1,0) and (1,p1): rank 1 at p1 = 0, rank 2 elsewhere.
[problem] name=SYS-RANKDROP dp=1 dx=2
[ineq]
h1 = x1
h2 = x1 + p1*x2
)"},
      {"SYS-DEGEN", "sys_degen.prob", R"(# The line x2 = p1 written as two opposite inequalities.
[problem] name=SYS-DEGEN dp=1 dx=2
[ineq]
h1 = x2 - p1
h2 = p1 - x2
)"},
      {"BLPP-1", "blpp1.prob", R"(# phi(p) = -p1 for p1 >= -1, S(p) = {p1}.
[problem] name=BLPP-1 dp=1 dx=1
[ineq]
h1 = x1 - p1
h2 = -1 - x1
[upper]
G = x1^2 + (p1 - 0.5)^2
[lower]
f = -x1
)"},
      {"BLPP-BOX", "blpp_box.prob", R"(# Linear lower level over [-1,1]^2: phi(p) = -|p1| - 1.
[problem] name=BLPP-BOX dp=1 dx=2
[ineq]
h1 = x1 - 1
h2 = -x1 - 1
h3 = x2 - 1
h4 = -x2 - 1
[upper]
G = x1^2 + x2^2
[lower]
f = p1*x1 + x2
)"},
  };
  return all;
}

const Fixture& fixture(std::string_view name) {
  for (const Fixture& f : builtin_fixtures()) {
    if (f.name == name) return f;
  }
  throw Error("unknown fixture '" + std::string(name) + "'");
}

ProblemFile load_fixture(std::string_view name) { return parse_problem(fixture(name).text); }

}  // namespace regmod
