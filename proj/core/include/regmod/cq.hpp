#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "regmod/numerics.hpp"
#include "regmod/system.hpp"

namespace regmod {

inline constexpr int kMaxActiveForSubsets = 12;

struct RcrcqOptions {
  double radius = 1e-2;
  int n_samples = 256;
  double rank_tol = kDefaultRankTol;
  std::optional<double> eta;  // default_eta at the base point when unset
  std::uint64_t seed = 0;
};

struct SamplePoint {
  Vec p;
  Vec x;
};

struct SubsetRank {
  IndexSet K;  // active inequalities; the equality block is always included
  int base_rank = 0;
  int sampled_rank_min = 0;
  int sampled_rank_max = 0;
  std::optional<SamplePoint> witness;
};

enum class RcrcqVerdict { verified_on_samples, violated };

const char* to_string(RcrcqVerdict v);

struct RcrcqReport {
  Vec p0;
  Vec x0;
  ActiveSet active_at_base;
  std::vector<SubsetRank> per_subset;  // K in binary-counter order over the active set
  RcrcqVerdict verdict = RcrcqVerdict::verified_on_samples;
  RcrcqOptions sampling;
  int samples_evaluated = 0;
  int samples_skipped = 0;  // evaluation domain errors
};

/// Rank constancy of {grad h_i : i in I0 u K} for every K within the active
/// set, at stencil and low-discrepancy points of the (p, x) ball. Throws
/// NumericalFailure if x0 is infeasible or more than 12 inequalities are active.
RcrcqReport check_rcrcq(const ParametricSystem& sys, const Vec& p0, const Vec& x0, const RcrcqOptions& opts = {});

/// Sample points used by check_rcrcq, in evaluation order.
std::vector<SamplePoint> rcrcq_sample_points(const Vec& p0, const Vec& x0, double radius, int n_samples,
                                             std::uint64_t seed);

/// Maximal linearly independent subset of the equality gradients at (p0, x0),
/// as 1-based constraint indices.
IndexSet select_i0_prime(const ParametricSystem& sys, const Vec& p0, const Vec& x0,
                         double rank_tol = kDefaultRankTol);

}  // namespace regmod
