#include "regmod/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

#include "regmod/numerics.hpp"
#include "regmod/parallel.hpp"
#include "regmod/sampling.hpp"

namespace regmod {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

bool has_x(const Node& n) {
  if (n.op == Op::VarX) return true;
  return (n.lhs && has_x(*n.lhs)) || (n.rhs && has_x(*n.rhs));
}

// Syntactic check; false negatives only cost a finite-difference Hessian.
bool affine_in_x(const Node& n) {
  if (!has_x(n)) return true;
  switch (n.op) {
    case Op::VarX: return true;
    case Op::Neg: return affine_in_x(*n.lhs);
    case Op::Add:
    case Op::Sub: return affine_in_x(*n.lhs) && affine_in_x(*n.rhs);
    case Op::Mul:
      return (!has_x(*n.lhs) && affine_in_x(*n.rhs)) || (!has_x(*n.rhs) && affine_in_x(*n.lhs));
    case Op::Div: return !has_x(*n.rhs) && affine_in_x(*n.lhs);
    case Op::Pow: return n.index <= 1 && affine_in_x(*n.lhs);
    default: return false;
  }
}

struct ConstraintEval {
  Vec h;
  Mat J;
};

ConstraintEval eval_constraints(const ParametricSystem& sys, const Vec& p, const Vec& x) {
  const int n = sys.num_constraints();
  ConstraintEval ce{Vec(n), Mat(n, sys.dx())};
  Vec g;
  for (int i = 0; i < n; ++i) {
    ce.h[i] = sys.constraint(i + 1).eval_grad_x(p, x, g);
    ce.J.row(i) = g.transpose();
  }
  return ce;
}

class Lagrangian {
 public:
  Lagrangian(const SmoothObjective& obj, const ParametricSystem& sys, const Vec& p)
      : obj_(obj), sys_(sys), p_(p), m_(sys.num_ineq()), n_(sys.num_constraints()) {
    nonlinear_.resize(static_cast<std::size_t>(n_));
    for (int i = 0; i < n_; ++i) nonlinear_[i] = !affine_in_x(*sys.constraint(i + 1).root());
    mu = Vec::Zero(m_);
    nu = Vec::Zero(n_ - m_);
  }

  // Augmented-Lagrangian merit; +inf outside the evaluation domain.
  double merit(const Vec& x) const {
    try {
      double f = obj_.value(x);
      for (int i = 0; i < n_; ++i) {
        const double h = sys_.constraint(i + 1).eval(p_, x);
        f += penalty_term(i, h);
      }
      return std::isfinite(f) ? f : kInf;
    } catch (const DomainError&) {
      return kInf;
    }
  }

  void derivatives(const Vec& x, double& phi, Vec& grad, Mat& hess) const {
    const ConstraintEval ce = eval_constraints(sys_, p_, x);
    phi = obj_.value(x);
    grad = obj_.gradient(x);
    hess = obj_.hessian(x);
    for (int i = 0; i < n_; ++i) {
      const double h = ce.h[i];
      phi += penalty_term(i, h);
      const double w = i < m_ ? std::max(0.0, mu[i] + rho * h) : nu[i - m_] + rho * h;
      if (i < m_ && w <= 0.0) continue;
      const Vec gi = ce.J.row(i).transpose();
      grad += w * gi;
      hess += rho * gi * gi.transpose();
      if (nonlinear_[i] && w != 0.0) hess += w * fd_hessian_x(sys_.constraint(i + 1), p_, x);
    }
  }

  bool nonlinear(int i0) const { return nonlinear_[static_cast<std::size_t>(i0)]; }

  Vec mu;
  Vec nu;
  double rho = 10.0;

 private:
  double penalty_term(int i, double h) const {
    if (i < m_) {
      const double t = std::max(0.0, mu[i] + rho * h);
      return (t * t - mu[i] * mu[i]) / (2.0 * rho);
    }
    return nu[i - m_] * h + 0.5 * rho * h * h;
  }

  const SmoothObjective& obj_;
  const ParametricSystem& sys_;
  const Vec& p_;
  int m_;
  int n_;
  std::vector<bool> nonlinear_;
};

// Damped Newton with a Levenberg shift when the Hessian is not positive definite.
void inner_minimize(const Lagrangian& L, Vec& x, double tol, int max_inner) {
  double phi = 0.0;
  Vec g;
  Mat H;
  for (int it = 0; it < max_inner; ++it) {
    L.derivatives(x, phi, g, H);
    if (!std::isfinite(phi) || g.lpNorm<Eigen::Infinity>() <= tol) return;

    const Eigen::Index n = x.size();
    Vec d;
    double tau = 0.0;
    bool found = false;
    const double hscale = 1.0 + H.diagonal().cwiseAbs().maxCoeff();
    for (int attempt = 0; attempt < 40 && !found; ++attempt) {
      Eigen::LLT<Mat> llt(H + tau * Mat::Identity(n, n));
      if (llt.info() == Eigen::Success) {
        d = llt.solve(-g);
        found = d.allFinite() && g.dot(d) < 0.0;
      }
      tau = tau == 0.0 ? 1e-8 * hscale : tau * 10.0;
    }
    if (!found) d = -g;

    const double slope = g.dot(d);
    double alpha = 1.0;
    double trial = L.merit(x + d);
    while (trial > phi + 1e-4 * alpha * slope) {
      alpha *= 0.5;
      if (alpha < 1e-20) return;
      trial = L.merit(x + alpha * d);
    }
    x += alpha * d;
    if (alpha * d.norm() <= 1e-16 * (1.0 + x.norm())) return;
  }
}

// Newton iterations on the KKT system of the equality-constrained problem
// given by the active rows. Rank-deficient systems are solved in the
// minimum-norm least-squares sense.
std::optional<Vec> newton_kkt(const SmoothObjective& obj, const ParametricSystem& sys, const Vec& p,
                              const Lagrangian& L, const std::vector<int>& rows0, Vec x, Vec y) {
  const Eigen::Index dx = x.size();
  const auto k = static_cast<Eigen::Index>(rows0.size());
  const double limit = 0.1 * (1.0 + x.norm());
  for (int it = 0; it < 50; ++it) {
    Vec h(k);
    Mat J(k, dx);
    Vec gi;
    for (Eigen::Index r = 0; r < k; ++r) {
      h[r] = sys.constraint(rows0[r] + 1).eval_grad_x(p, x, gi);
      J.row(r) = gi.transpose();
    }
    const Vec g = obj.gradient(x);
    Mat H = obj.hessian(x);
    for (Eigen::Index r = 0; r < k; ++r) {
      if (y[r] != 0.0 && L.nonlinear(rows0[r])) H += y[r] * fd_hessian_x(sys.constraint(rows0[r] + 1), p, x);
    }
    Mat K = Mat::Zero(dx + k, dx + k);
    K.topLeftCorner(dx, dx) = H;
    K.topRightCorner(dx, k) = J.transpose();
    K.bottomLeftCorner(k, dx) = J;
    Vec rhs(dx + k);
    rhs << -g, -h;
    const Vec sol = K.completeOrthogonalDecomposition().solve(rhs);
    if (!sol.allFinite()) return std::nullopt;
    const Vec d = sol.head(dx);
    y = sol.tail(k);
    x += d;
    if (d.norm() > limit) return std::nullopt;
    if (d.norm() <= 1e-15 * (1.0 + x.norm())) break;
  }
  return x;
}

struct Polished {
  Vec x;
  Vec mult;  // over all constraints, zero off the active set
};

std::optional<Polished> polish(const SmoothObjective& obj, const ParametricSystem& sys, const Vec& p,
                               const Lagrangian& L, const Vec& x_al, double tol_feas) {
  const int m = sys.num_ineq();
  const int n = sys.num_constraints();
  ConstraintEval ce;
  try {
    ce = eval_constraints(sys, p, x_al);
  } catch (const DomainError&) {
    return std::nullopt;
  }
  const double eta = 1e-6 * (1.0 + (n ? ce.h.cwiseAbs().maxCoeff() : 0.0));
  const double mu_thr = 1e-12 * (1.0 + (m ? L.mu.cwiseAbs().maxCoeff() : 0.0));
  std::vector<bool> in(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) in[i] = ce.h[i] > 0.0 || (ce.h[i] >= -eta && L.mu[i] > mu_thr);

  for (int round = 0; round < 2 * m + 4; ++round) {
    std::vector<int> rows;
    Vec y0;
    for (int i = 0; i < m; ++i) {
      if (in[i]) rows.push_back(i);
    }
    for (int i = m; i < n; ++i) rows.push_back(i);
    y0.resize(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t r = 0; r < rows.size(); ++r) y0[r] = rows[r] < m ? L.mu[rows[r]] : L.nu[rows[r] - m];

    std::optional<Vec> xn;
    try {
      xn = newton_kkt(obj, sys, p, L, rows, x_al, y0);
    } catch (const DomainError&) {
      return std::nullopt;
    }
    if (!xn) return std::nullopt;
    const Vec& x = *xn;
    try {
      ce = eval_constraints(sys, p, x);
    } catch (const DomainError&) {
      return std::nullopt;
    }

    int worst = -1;
    double worst_h = 0.1 * tol_feas;
    for (int i = 0; i < m; ++i) {
      if (!in[i] && ce.h[i] > worst_h) {
        worst_h = ce.h[i];
        worst = i;
      }
    }
    if (worst >= 0) {
      in[worst] = true;
      continue;
    }

    const Vec g = obj.gradient(x);
    Mat JT(sys.dx(), static_cast<Eigen::Index>(rows.size()));
    std::vector<bool> free(rows.size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
      JT.col(static_cast<Eigen::Index>(r)) = ce.J.row(rows[r]).transpose();
      free[r] = rows[r] >= m;
    }
    const NnlsResult nn = nnls_minnorm(JT, -g, free);
    if (nn.residual > 1e-8 * (1.0 + g.norm())) {
      // Drop the active inequality with the most negative least-squares multiplier.
      const Vec yls = JT.completeOrthogonalDecomposition().solve(-g);
      int drop = -1;
      double most = 0.0;
      for (std::size_t r = 0; r < rows.size(); ++r) {
        if (rows[r] < m && yls[static_cast<Eigen::Index>(r)] < most) {
          most = yls[static_cast<Eigen::Index>(r)];
          drop = rows[r];
        }
      }
      if (drop >= 0) {
        in[drop] = false;
        continue;
      }
    }
    Polished out{x, Vec::Zero(n)};
    for (std::size_t r = 0; r < rows.size(); ++r) out.mult[rows[r]] = nn.lambda[static_cast<Eigen::Index>(r)];
    return out;
  }
  return std::nullopt;
}

}  // namespace

Mat fd_hessian_x(const Expr& e, const Vec& p, const Vec& x) {
  const Eigen::Index n = x.size();
  Mat H(n, n);
  Vec xp = x;
  Vec xm = x;
  for (Eigen::Index j = 0; j < n; ++j) {
    const double s = 1e-5 * (1.0 + std::abs(x[j]));
    xp[j] = x[j] + s;
    xm[j] = x[j] - s;
    H.col(j) = (e.grad_x(p, xp) - e.grad_x(p, xm)) / (xp[j] - xm[j]);
    xp[j] = x[j];
    xm[j] = x[j];
  }
  return 0.5 * (H + H.transpose());
}

Mat ExprObjective::hessian(const Vec& x) const {
  if (affine_in_x(*f_.root())) return Mat::Zero(x.size(), x.size());
  return fd_hessian_x(f_, p_, x);
}

LocalSolution solve_local(const SmoothObjective& obj, const ParametricSystem& sys, const Vec& p, const Vec& start,
                          const SolverOptions& opts) {
  sys.check_point(p, start);
  const int m = sys.num_ineq();
  LocalSolution out;
  out.x = start;
  out.feas_residual = kInf;
  out.objective = kInf;
  out.ineq_multipliers = Vec::Zero(m);
  out.eq_multipliers = Vec::Zero(sys.num_eq());

  Lagrangian L(obj, sys, p);
  L.rho = opts.rho0;
  if (!std::isfinite(L.merit(start))) return out;

  Vec x = start;
  Vec x_prev = x;
  std::vector<double> viol_hist;
  bool hit_cap = true;
  int outer = 0;
  for (; outer < opts.max_outer; ++outer) {
    const double inner_tol = std::max(1e-11, 1e-1 / L.rho);
    inner_minimize(L, x, inner_tol, opts.max_inner);
    Vec h;
    try {
      h = constraint_values(sys, p, x);
    } catch (const DomainError&) {
      break;
    }
    const double viol = residual_from_values(sys, h);
    for (int i = 0; i < m; ++i) L.mu[i] = std::max(0.0, L.mu[i] + L.rho * h[i]);
    for (int j = 0; j < sys.num_eq(); ++j) L.nu[j] += L.rho * h[m + j];
    viol_hist.push_back(viol);

    const double step = (x - x_prev).norm();
    x_prev = x;
    if (outer >= 1 && viol <= 1e-3 * opts.tol_feas && step <= 1e-10 * (1.0 + x.norm())) {
      hit_cap = false;
      break;
    }
    if (L.rho >= opts.rho_max && viol_hist.size() >= 6 && viol > 0.5 * viol_hist[viol_hist.size() - 6]) {
      hit_cap = false;
      break;
    }
    L.rho = std::min(L.rho * opts.rho_factor, opts.rho_max);
  }
  out.outer_iterations = outer + 1;

  double viol_al = kInf;
  double obj_al = kInf;
  try {
    viol_al = residual(sys, p, x);
    obj_al = obj.value(x);
  } catch (const DomainError&) {
  }

  out.x = x;
  out.ineq_multipliers = L.mu;
  out.eq_multipliers = L.nu;
  out.feas_residual = viol_al;
  out.objective = obj_al;

  if (auto pol = polish(obj, sys, p, L, x, opts.tol_feas)) {
    try {
      const double viol_pol = residual(sys, p, pol->x);
      const double obj_pol = obj.value(pol->x);
      const bool better = viol_pol <= opts.tol_feas &&
                          (viol_al > opts.tol_feas || obj_pol <= obj_al + 1e-9 * (1.0 + std::abs(obj_al)));
      if (better) {
        out.x = pol->x;
        out.feas_residual = viol_pol;
        out.objective = obj_pol;
        out.ineq_multipliers = pol->mult.head(m);
        out.eq_multipliers = pol->mult.tail(sys.num_eq());
        out.polished = true;
      }
    } catch (const DomainError&) {
    }
  }

  if (out.feas_residual <= opts.tol_feas) {
    out.status = SolveStatus::converged;
  } else {
    out.status = hit_cap ? SolveStatus::max_iter : SolveStatus::infeasible;
  }
  return out;
}

std::vector<LocalSolution> solve_multistart(const SmoothObjective& obj, const ParametricSystem& sys, const Vec& p,
                                            const std::vector<Vec>& starts, const SolverOptions& opts) {
  std::vector<LocalSolution> out(starts.size());
  parallel_for(starts.size(), [&](std::size_t i) { out[i] = solve_local(obj, sys, p, starts[i], opts); });
  return out;
}

std::vector<Vec> multistart_points(const Vec& first, const Vec& lo, const Vec& hi, int count, std::uint64_t seed) {
  std::vector<Vec> out;
  if (count <= 0) return out;
  out.push_back(first);
  HaltonSequence seq(static_cast<int>(first.size()), seed);
  while (static_cast<int>(out.size()) < count) {
    const Vec u = seq.next();
    out.push_back(lo.array() + (hi - lo).array() * u.array());
  }
  return out;
}

std::vector<Vec> multistart_points(const Vec& center, double radius, int count, std::uint64_t seed) {
  const Vec r = Vec::Constant(center.size(), radius);
  return multistart_points(center, center - r, center + r, count, seed);
}

}  // namespace regmod
