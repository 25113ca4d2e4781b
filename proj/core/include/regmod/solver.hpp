#pragma once

#include <cstdint>
#include <vector>

#include "regmod/system.hpp"
#include "regmod/types.hpp"

namespace regmod {

/// Twice-differentiable objective in x for a fixed parameter.
class SmoothObjective {
 public:
  virtual ~SmoothObjective() = default;
  virtual double value(const Vec& x) const = 0;
  virtual Vec gradient(const Vec& x) const = 0;
  virtual Mat hessian(const Vec& x) const = 0;
};

// 1/2 ||x - v||^2
class DistanceObjective final : public SmoothObjective {
 public:
  explicit DistanceObjective(Vec v) : v_(std::move(v)) {}
  double value(const Vec& x) const override { return 0.5 * (x - v_).squaredNorm(); }
  Vec gradient(const Vec& x) const override { return x - v_; }
  Mat hessian(const Vec& x) const override { return Mat::Identity(x.size(), x.size()); }

 private:
  Vec v_;
};

// f(p, .) with exact gradient and a central-difference Hessian of the gradient.
class ExprObjective final : public SmoothObjective {
 public:
  ExprObjective(Expr f, Vec p) : f_(std::move(f)), p_(std::move(p)) {}
  double value(const Vec& x) const override { return f_.eval(p_, x); }
  Vec gradient(const Vec& x) const override { return f_.grad_x(p_, x); }
  Mat hessian(const Vec& x) const override;

 private:
  Expr f_;
  Vec p_;
};

// Central differences of grad_x, symmetrized.
Mat fd_hessian_x(const Expr& e, const Vec& p, const Vec& x);

struct SolverOptions {
  double tol_feas = kDefaultTolFeas;
  int max_outer = 200;
  int max_inner = 500;
  double rho0 = 10.0;
  double rho_factor = 10.0;
  double rho_max = 1e10;
};

enum class SolveStatus { converged, max_iter, infeasible };

struct LocalSolution {
  Vec x;
  double objective = 0.0;
  double feas_residual = 0.0;
  Vec ineq_multipliers;
  Vec eq_multipliers;
  SolveStatus status = SolveStatus::infeasible;
  int outer_iterations = 0;
  bool polished = false;
};

/// Local minimization of obj over F(p) from one start: augmented-Lagrangian
/// outer loop (penalty x rho_factor per step, first-order multiplier updates)
/// with damped Newton inner solves, then an active-set Newton-KKT polish.
LocalSolution solve_local(const SmoothObjective& obj, const ParametricSystem& sys, const Vec& p, const Vec& start,
                          const SolverOptions& opts = {});

/// solve_local from every start; results in start order.
std::vector<LocalSolution> solve_multistart(const SmoothObjective& obj, const ParametricSystem& sys, const Vec& p,
                                            const std::vector<Vec>& starts, const SolverOptions& opts = {});

/// `start` followed by (count - 1) seeded low-discrepancy points of the box
/// [center - radius, center + radius].
std::vector<Vec> multistart_points(const Vec& center, double radius, int count, std::uint64_t seed);
std::vector<Vec> multistart_points(const Vec& first, const Vec& lo, const Vec& hi, int count, std::uint64_t seed);

}  // namespace regmod
