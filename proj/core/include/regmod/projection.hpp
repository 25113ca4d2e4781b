#pragma once

#include <cstdint>
#include <optional>

#include "regmod/numerics.hpp"
#include "regmod/system.hpp"

namespace regmod {

struct ProjectionOptions {
  double tol_feas = kDefaultTolFeas;
  double tol_kkt = 1e-7;
  int n_starts = 8;
  int max_iter = 200;   // outer
  int max_inner = 500;
  std::optional<Box> box;  // default: cube around v of half-width 10 (1 + |v|)
  std::uint64_t seed = 0;
};

enum class ProjectionStatus { converged, max_iter, infeasible_system };

const char* to_string(ProjectionStatus s);

struct ProjectionResult {
  Vec x_star;
  double distance = 0.0;
  double kkt_residual = 0.0;
  double feas_residual = 0.0;
  Vec multipliers_hat;                // over I then I0
  std::optional<Vec> multipliers;     // multipliers_hat / distance, distance > 0 only
  ActiveSet active;
  ProjectionStatus status = ProjectionStatus::infeasible_system;

  bool converged() const { return status == ProjectionStatus::converged; }
};

/// Local metric projection of v onto F(p) by multi-start constrained
/// least-distance solves. The closest feasible local solution wins; ties go
/// to the lexicographically smallest point.
ProjectionResult project(const ParametricSystem& sys, const Vec& p, const Vec& v, const ProjectionOptions& opts = {});

struct MultiplierResult {
  Vec lambda;  // over I then I0, zero off the active set
  double stationarity_residual = 0.0;
  bool empty = false;  // residual above tol
};

/// Normalized multipliers: (x - v)/|x - v| + sum lambda_i grad h_i = 0.
/// Throws Error if v == x or x is not feasible within tol_feas.
MultiplierResult multipliers(const ParametricSystem& sys, const Vec& p, const Vec& x, const Vec& v,
                             double tol = 1e-7, double tol_feas = kDefaultTolFeas);

struct MultiplierNorm {
  double l1 = 0.0;                   // sum |lambda_i| of the min 2-norm element
  std::optional<double> min_l1;      // exact least 1-norm over the multiplier set
  double stationarity_residual = 0.0;
  bool empty = false;
};

MultiplierNorm min_multiplier_norm(const ParametricSystem& sys, const Vec& p, const Vec& x, const Vec& v,
                                   double tol = 1e-7, double tol_feas = kDefaultTolFeas);

}  // namespace regmod
