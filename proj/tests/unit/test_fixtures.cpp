#include <string>

#include "doctest.h"
#include "regmod/bilevel.hpp"
#include "regmod/fixtures.hpp"
#include "regmod/problem_file.hpp"

using namespace regmod;

TEST_SUITE("fixtures") {

TEST_CASE("embedded texts match the shipped files") {
  const auto& all = builtin_fixtures();
  CHECK(all.size() == 7);
  for (const auto& f : all) {
    std::string path = std::string(REGMOD_FIXTURE_DIR) + "/" + f.file_name;
    CHECK_MESSAGE(read_text_file(path) == f.text, f.name);
    auto pf = load_fixture(f.name);
    CHECK(pf.system.name() == f.name);
    CHECK(pf.warnings.empty());
  }
}

TEST_CASE("catalog") {
  CHECK(fixture("SYS-EX1").file_name == "sys_ex1.prob");
  CHECK(load_fixture("SYS-EX1").system.num_ineq() == 5);
  CHECK(load_fixture("BLPP-1").is_bilevel());
  CHECK(load_fixture("BLPP-BOX").is_bilevel());
  CHECK_FALSE(load_fixture("SYS-LIN").is_bilevel());
  CHECK_THROWS_AS(fixture("SYS-NOPE"), Error);
  BilevelProblem::from_file(load_fixture("BLPP-1")).validate();
}

}
