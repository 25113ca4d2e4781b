#include "regmod/system.hpp"

#include <algorithm>
#include <cmath>

namespace regmod {

ParametricSystem::ParametricSystem(std::string name, int dp, int dx, std::vector<Expr> ineq, std::vector<Expr> eq)
    : name_(std::move(name)), dp_(dp), dx_(dx), ineq_(std::move(ineq)), eq_(std::move(eq)) {
  if (dp < 0 || dx < 1) throw DimensionError("system needs dp >= 0 and dx >= 1");
  for (const auto* list : {&ineq_, &eq_}) {
    for (const Expr& e : *list) {
      if (e.dp() != dp || e.dx() != dx) throw DimensionError("constraint declared with mismatched dimensions");
    }
  }
}

const Expr& ParametricSystem::constraint(int index1) const {
  if (index1 < 1 || index1 > num_constraints()) throw DimensionError("constraint index out of range");
  return index1 <= num_ineq() ? ineq_[index1 - 1] : eq_[index1 - num_ineq() - 1];
}

IndexSet ParametricSystem::equality_indices() const {
  IndexSet out;
  for (int i = num_ineq() + 1; i <= num_constraints(); ++i) out.push_back(i);
  return out;
}

ParametricSystem ParametricSystem::with_inequality(Expr h) const {
  auto ineq = ineq_;
  ineq.push_back(std::move(h));
  return ParametricSystem(name_, dp_, dx_, std::move(ineq), eq_);
}

void ParametricSystem::check_point(const Vec& p, const Vec& x) const {
  if (p.size() != dp_ || x.size() != dx_) {
    throw DimensionError("point dimensions (" + std::to_string(p.size()) + ", " + std::to_string(x.size()) +
                         ") do not match system (" + std::to_string(dp_) + ", " + std::to_string(dx_) + ")");
  }
}

Vec constraint_values(const ParametricSystem& sys, const Vec& p, const Vec& x) {
  sys.check_point(p, x);
  Vec v(sys.num_constraints());
  for (int i = 0; i < sys.num_ineq(); ++i) v[i] = sys.ineq()[i].eval(p, x);
  for (int j = 0; j < sys.num_eq(); ++j) v[sys.num_ineq() + j] = sys.eq()[j].eval(p, x);
  return v;
}

double residual_from_values(const ParametricSystem& sys, const Vec& values) {
  double r = 0.0;
  for (int i = 0; i < sys.num_ineq(); ++i) r = std::max(r, values[i]);
  for (int j = sys.num_ineq(); j < sys.num_constraints(); ++j) r = std::max(r, std::abs(values[j]));
  return r;
}

double residual(const ParametricSystem& sys, const Vec& p, const Vec& x) {
  return residual_from_values(sys, constraint_values(sys, p, x));
}

bool is_feasible(const ParametricSystem& sys, const Vec& p, const Vec& x, double tol_feas) {
  return residual(sys, p, x) <= tol_feas;
}

double default_eta(const ParametricSystem& sys, const Vec& p, const Vec& x) {
  const Vec v = constraint_values(sys, p, x);
  const double scale = v.size() ? v.cwiseAbs().maxCoeff() : 0.0;
  return 1e-6 * (1.0 + scale);
}

ActiveSet active_set(const ParametricSystem& sys, const Vec& p, const Vec& x, double eta) {
  sys.check_point(p, x);
  ActiveSet out;
  out.eta = eta;
  for (int i = 0; i < sys.num_ineq(); ++i) {
    if (std::abs(sys.ineq()[i].eval(p, x)) <= eta) out.indices.push_back(i + 1);
  }
  return out;
}

ActiveSet active_set(const ParametricSystem& sys, const Vec& p, const Vec& x) {
  return active_set(sys, p, x, default_eta(sys, p, x));
}

Mat jacobian(const ParametricSystem& sys, const Vec& p, const Vec& x, const IndexSet& rows) {
  sys.check_point(p, x);
  IndexSet sorted = rows;
  std::sort(sorted.begin(), sorted.end());
  Mat J(static_cast<Eigen::Index>(sorted.size()), sys.dx());
  for (std::size_t r = 0; r < sorted.size(); ++r) {
    J.row(static_cast<Eigen::Index>(r)) = sys.constraint(sorted[r]).grad_x(p, x).transpose();
  }
  return J;
}

Mat full_jacobian(const ParametricSystem& sys, const Vec& p, const Vec& x) {
  return jacobian(sys, p, x, all_indices(sys));
}

IndexSet all_indices(const ParametricSystem& sys) {
  IndexSet out(static_cast<std::size_t>(sys.num_constraints()));
  for (int i = 0; i < sys.num_constraints(); ++i) out[i] = i + 1;
  return out;
}

}  // namespace regmod
