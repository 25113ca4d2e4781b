#pragma once

#include <cmath>
#include <initializer_list>
#include <string>

#include "regmod/fixtures.hpp"
#include "regmod/types.hpp"

namespace regmod::test {

inline Vec vec(std::initializer_list<double> v) {
  Vec out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double d : v) out[i++] = d;
  return out;
}

inline ParametricSystem sys(const char* fixture_name) { return load_fixture(fixture_name).system; }

inline double rel_err(double a, double b) { return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)}); }

}  // namespace regmod::test
