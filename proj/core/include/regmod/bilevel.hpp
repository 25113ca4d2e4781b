#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "regmod/problem_file.hpp"
#include "regmod/projection.hpp"
#include "regmod/regularity.hpp"

namespace regmod {

/// min G(p,x) over p in P, x in S(p) = argmin { f(p,x) : x in F(p) },
/// P = { p : g_j(p) <= 0 }.
struct BilevelProblem {
  Expr G;
  Expr f;
  ParametricSystem sys;
  std::vector<Expr> g;

  static BilevelProblem from_file(const ProblemFile& pf);
  void validate() const;  // throws DimensionError / Error
  bool in_P(const Vec& p, double tol = kDefaultTolFeas) const;
};

struct LowerOptions {
  double tol_feas = kDefaultTolFeas;
  double value_tol = 1e-8;
  int n_starts = 8;
  int max_iter = 200;
  int max_inner = 500;
  std::optional<Box> box;  // default: cube of half-width 10 around the origin
  std::uint64_t seed = 0;
};

struct LowerSolution {
  double phi = 0.0;
  std::vector<Vec> x_solutions;  // lexicographic order
  ProjectionStatus status = ProjectionStatus::infeasible_system;

  bool converged() const { return status == ProjectionStatus::converged; }
};

/// phi(p) = inf { f(p,x) : x in F(p) } by multi-start local minimization.
/// x_solutions collects the distinct local minimizers within value_tol of
/// the best value.
LowerSolution solve_lower(const ParametricSystem& sys, const Expr& f, const Vec& p, const LowerOptions& opts = {});
LowerSolution solve_lower(const BilevelProblem& blp, const Vec& p, const LowerOptions& opts = {});

struct LipschitzEstimate {
  double value = 0.0;
  int pairs_used = 0;
  int skipped_domain = 0;
};

/// Largest difference quotient of e over the ball of the stacked (p, x)
/// space: all sample pairs plus short probes along the gradient.
LipschitzEstimate estimate_lipschitz_constant(const Expr& e, const Vec& center, double radius, int n = 256,
                                              std::uint64_t seed = 0);

struct PhiLipOptions {
  double delta = 0.2;
  int n = 32;
  double factor = 0.5;
  int steps = 4;
  std::uint64_t seed = 0;
  LowerOptions lower;
};

struct PhiLipschitzReport {
  RegularityReport report;  // kind lower_level_value
  double phi_at_p0 = 0.0;
  Vec x_at_p0;
  // Predicted bound l0 + alpha M max_i l_i with alpha = l0 (1 + 1e-3).
  double l0 = 0.0;
  std::optional<double> m_hat;
  double max_li = 0.0;
  std::optional<double> predicted_bound;
  int skipped_outside_P = 0;
};

PhiLipschitzReport phi_lipschitz_estimate(const BilevelProblem& blp, const Vec& p0, const PhiLipOptions& opts = {});

/// G(p,x) + mu (f(p,x) - phi(p)). Throws Error when (p, x) is infeasible and
/// NumericalFailure when the lower level cannot be solved.
double penalized_objective(const BilevelProblem& blp, double mu, const Vec& p, const Vec& x,
                           const LowerOptions& opts = {});

struct PenaltyOptions {
  std::vector<double> mu_grid;  // default 2^-4 ... 2^8
  double radius = 0.05;
  int n = 2000;
  int n_modulus = 128;
  std::uint64_t seed = 0;
  double pass_tol = 1e-9;
  LowerOptions lower;
};

std::vector<double> default_mu_grid();

struct PenaltyRow {
  double mu = 0.0;
  bool passes = false;
  double min_margin = 0.0;  // min over samples of pen(sample) - pen(anchor)
  std::optional<Vec> witness_p;
  std::optional<Vec> witness_x;
};

struct PenaltyReport {
  std::optional<double> mu0_empirical;
  std::optional<double> mu0_formula;
  double l0 = 0.0;
  std::optional<double> m_hat;
  std::vector<PenaltyRow> per_mu;  // grid order
  bool monotone = true;
  int samples_used = 0;
  int skipped_lower_failures = 0;
  int skipped_outside_D = 0;
  double phi_star = 0.0;
  PenaltyOptions params;
  std::vector<std::string> notes;
};

/// Local-minimality test of the penalized objective at (p*, x*) over
/// sampled points of D near the anchor, per mu, with the modulus formula
/// l0 * M for comparison.
PenaltyReport find_penalty_threshold(const BilevelProblem& blp, const Vec& p_star, const Vec& x_star,
                                     const PenaltyOptions& opts = {});

/// |phi(p) - phi(p_from)| / |p - p_from| recomputed for one sample.
double replay_phi_ratio(const BilevelProblem& blp, const RatioSample& s, const LowerOptions& opts = {});

}  // namespace regmod
