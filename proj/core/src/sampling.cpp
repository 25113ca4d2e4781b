#include "regmod/sampling.hpp"

#include <random>

namespace regmod {
namespace {

constexpr int kPrimes[] = {2,  3,  5,  7,  11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53,
                           59, 61, 67, 71, 73, 79, 83, 89, 97, 101, 103, 107, 109, 113, 127, 131};

double radical_inverse(std::uint64_t i, int base) {
  double inv = 1.0 / base;
  double f = inv;
  double r = 0.0;
  while (i > 0) {
    r += f * static_cast<double>(i % static_cast<std::uint64_t>(base));
    i /= static_cast<std::uint64_t>(base);
    f *= inv;
  }
  return r;
}

}  // namespace

double unit_double(std::uint64_t bits) { return static_cast<double>(bits >> 11) * 0x1.0p-53; }

HaltonSequence::HaltonSequence(int dim, std::uint64_t seed) : dim_(dim) {
  if (dim < 0 || dim > static_cast<int>(std::size(kPrimes))) throw Error("HaltonSequence: unsupported dimension");
  std::mt19937_64 rng(seed);
  shift_.resize(static_cast<std::size_t>(dim));
  for (double& s : shift_) s = unit_double(rng());
}

Vec HaltonSequence::next() {
  Vec out(dim_);
  for (int k = 0; k < dim_; ++k) {
    double v = radical_inverse(index_, kPrimes[k]) + shift_[static_cast<std::size_t>(k)];
    if (v >= 1.0) v -= 1.0;
    out[k] = v;
  }
  ++index_;
  return out;
}

std::vector<BallPair> unit_ball_pairs(int dim_a, int dim_b, int count, std::uint64_t seed) {
  std::vector<BallPair> out;
  if (count <= 0) return out;
  out.reserve(static_cast<std::size_t>(count));
  HaltonSequence seq(dim_a + dim_b, seed);
  const long max_attempts = 1000L * count + 1000;
  for (long attempt = 0; attempt < max_attempts && static_cast<int>(out.size()) < count; ++attempt) {
    const Vec h = 2.0 * seq.next().array() - 1.0;
    Vec u = h.head(dim_a);
    Vec w = h.tail(dim_b);
    if (u.squaredNorm() <= 1.0 && w.squaredNorm() <= 1.0) out.push_back({std::move(u), std::move(w)});
  }
  return out;
}

std::vector<Vec> unit_ball_points(int dim, int count, std::uint64_t seed) {
  std::vector<Vec> out;
  for (auto& pr : unit_ball_pairs(dim, 0, count, seed)) out.push_back(std::move(pr.u));
  return out;
}

std::vector<Vec> unit_directions(int dim, int count, std::uint64_t seed) {
  std::vector<Vec> out;
  HaltonSequence seq(dim, seed);
  const long max_attempts = 1000L * count + 1000;
  for (long attempt = 0; attempt < max_attempts && static_cast<int>(out.size()) < count; ++attempt) {
    const Vec h = 2.0 * seq.next().array() - 1.0;
    const double n = h.norm();
    if (n <= 1.0 && n > 1e-3) out.push_back(h / n);
  }
  return out;
}

}  // namespace regmod
