#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "regmod/problem_file.hpp"

namespace regmod {

struct Fixture {
  std::string name;       // e.g. "SYS-EX1"
  std::string file_name;  // e.g. "sys_ex1.prob"
  std::string text;
};

// Built-in problems; the same texts ship as files under fixtures/.
const std::vector<Fixture>& builtin_fixtures();

// Throws Error for unknown names.
const Fixture& fixture(std::string_view name);
ProblemFile load_fixture(std::string_view name);

}  // namespace regmod
