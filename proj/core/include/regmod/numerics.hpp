#pragma once

#include <optional>
#include <vector>

#include "regmod/system.hpp"
#include "regmod/types.hpp"

namespace regmod {

inline constexpr double kDefaultRankTol = 1e-7;

struct RankResult {
  int rank = 0;
  std::vector<double> singular_values;  // descending
  double threshold_used = 0.0;          // rank_tol * max(sigma_max, 1)
};

/// Rank from the singular values of A. Throws Error on non-finite entries.
RankResult numerical_rank(const Mat& A, double rank_tol = kDefaultRankTol);

/// Greedy-by-order maximal linearly independent subset of rows (1-based
/// positions in `rows`). Earliest rows win.
IndexSet max_li_subset(const std::vector<Vec>& rows, double rank_tol = kDefaultRankTol);
IndexSet max_li_subset(const Mat& rows, double rank_tol = kDefaultRankTol);

struct NnlsResult {
  Vec lambda;
  double residual = 0.0;  // ||A lambda - b||
};

/// Minimum-norm minimizer of ||A lambda - b|| subject to lambda_i >= 0 for
/// columns not flagged in `sign_free`.
///
/// Solved along a vanishing Tikhonov sequence (three decades, Richardson
/// extrapolated), then refined by a pseudo-inverse solve on the detected
/// support when that is sign-feasible and no worse.
NnlsResult nnls_minnorm(const Mat& A, const Vec& b, const std::vector<bool>& sign_free = {});

/// min 1/2 z'Hz + c'z  s.t. z_i >= 0 where bounded[i]. H must be SPD.
/// Primal active-set method.
Vec bounded_qp(const Mat& H, const Vec& c, const std::vector<bool>& bounded);

struct Box {
  Vec lo;
  Vec hi;
};

struct DistanceBracket {
  double lower = 0.0;
  double upper = 0.0;
  Vec nearest;  // feasible grid point attaining `upper`
};

/// Brute-force bracket of dist(v, F(p) ∩ box) from a regular grid with
/// n_per_axis points per axis. Requires dx <= 3 and n_per_axis <= 401.
/// Throws NumericalFailure when no grid point is feasible.
DistanceBracket grid_distance(const ParametricSystem& sys, const Vec& p, const Vec& v, const Box& box, int n_per_axis,
                              double tol_feas = kDefaultTolFeas);

}  // namespace regmod
