#pragma once

#include <cstdint>
#include <vector>

#include "regmod/types.hpp"

namespace regmod {

/// Halton sequence with a seeded Cranley-Patterson rotation. Points lie in
/// [0,1)^dim; consecutive draws with one seed form a fixed stream, so a
/// longer draw always extends a shorter one.
class HaltonSequence {
 public:
  HaltonSequence(int dim, std::uint64_t seed);

  Vec next();
  int dim() const noexcept { return dim_; }

 private:
  int dim_;
  std::uint64_t index_ = 1;
  std::vector<double> shift_;
};

// Uniform double in [0,1) from the top 53 bits; identical on every platform.
double unit_double(std::uint64_t bits);

/// `count` points of the closed unit ball in R^dim (rejection from the cube).
std::vector<Vec> unit_ball_points(int dim, int count, std::uint64_t seed);

struct BallPair {
  Vec u;  // unit ball of R^dim_a
  Vec w;  // unit ball of R^dim_b
};

/// Joint draws in B^dim_a x B^dim_b from one Halton stream of dim_a + dim_b.
std::vector<BallPair> unit_ball_pairs(int dim_a, int dim_b, int count, std::uint64_t seed);

/// Unit vectors in R^dim (normalized ball points).
std::vector<Vec> unit_directions(int dim, int count, std::uint64_t seed);

}  // namespace regmod
