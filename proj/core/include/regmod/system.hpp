#pragma once

#include <string>
#include <vector>

#include "regmod/expr.hpp"
#include "regmod/types.hpp"

namespace regmod {

inline constexpr double kDefaultTolFeas = 1e-8;

/// Parametric constraint system
///   F(p) = { x : h_i(p,x) <= 0, i in I;  h_i(p,x) = 0, i in I0 }.
///
/// Inequalities carry indices 1..m, equalities m+1..n, in declaration order.
class ParametricSystem {
 public:
  ParametricSystem() = default;
  ParametricSystem(std::string name, int dp, int dx, std::vector<Expr> ineq, std::vector<Expr> eq = {});

  const std::string& name() const noexcept { return name_; }
  int dp() const noexcept { return dp_; }
  int dx() const noexcept { return dx_; }
  int num_ineq() const noexcept { return static_cast<int>(ineq_.size()); }
  int num_eq() const noexcept { return static_cast<int>(eq_.size()); }
  int num_constraints() const noexcept { return num_ineq() + num_eq(); }
  const std::vector<Expr>& ineq() const noexcept { return ineq_; }
  const std::vector<Expr>& eq() const noexcept { return eq_; }

  bool is_equality(int index1) const { return index1 > num_ineq(); }
  // 1-based over I then I0.
  const Expr& constraint(int index1) const;
  IndexSet equality_indices() const;

  // A copy with one more inequality appended (index m+1; equalities shift up).
  ParametricSystem with_inequality(Expr h) const;

  void check_point(const Vec& p, const Vec& x) const;

 private:
  std::string name_;
  int dp_ = 0;
  int dx_ = 0;
  std::vector<Expr> ineq_;
  std::vector<Expr> eq_;
};

struct ActiveSet {
  IndexSet indices;  // subset of I
  double eta = 0.0;
};

// All constraint values, inequalities first.
Vec constraint_values(const ParametricSystem& sys, const Vec& p, const Vec& x);

/// max{0, h_i (i in I), |h_i| (i in I0)}.
double residual(const ParametricSystem& sys, const Vec& p, const Vec& x);
double residual_from_values(const ParametricSystem& sys, const Vec& values);

bool is_feasible(const ParametricSystem& sys, const Vec& p, const Vec& x, double tol_feas = kDefaultTolFeas);

// 1e-6 * (1 + max_i |h_i(p,x)|).
double default_eta(const ParametricSystem& sys, const Vec& p, const Vec& x);

/// Inequalities with |h_i(p,x)| <= eta.
ActiveSet active_set(const ParametricSystem& sys, const Vec& p, const Vec& x, double eta);
ActiveSet active_set(const ParametricSystem& sys, const Vec& p, const Vec& x);

/// Rows grad_x h_i(p,x) for i in rows (1-based), ascending.
Mat jacobian(const ParametricSystem& sys, const Vec& p, const Vec& x, const IndexSet& rows);
Mat full_jacobian(const ParametricSystem& sys, const Vec& p, const Vec& x);

IndexSet all_indices(const ParametricSystem& sys);

}  // namespace regmod
