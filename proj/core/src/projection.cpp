#include "regmod/projection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "regmod/solver.hpp"

namespace regmod {

const char* to_string(ProjectionStatus s) {
  switch (s) {
    case ProjectionStatus::converged: return "converged";
    case ProjectionStatus::max_iter: return "max_iter";
    case ProjectionStatus::infeasible_system: return "infeasible_system";
  }
  return "?";
}

namespace {

bool lex_less(const Vec& a, const Vec& b) {
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    if (a[i] != b[i]) return a[i] < b[i];
  }
  return false;
}

struct ColumnSystem {
  Mat A;                      // gradient columns
  std::vector<bool> free;     // equality columns
  std::vector<int> index;     // 0-based constraint index per column
};

ColumnSystem active_columns(const ParametricSystem& sys, const Vec& p, const Vec& x, const ActiveSet& act) {
  ColumnSystem cs;
  for (int i : act.indices) cs.index.push_back(i - 1);
  for (int i = sys.num_ineq(); i < sys.num_constraints(); ++i) cs.index.push_back(i);
  cs.A.resize(sys.dx(), static_cast<Eigen::Index>(cs.index.size()));
  for (std::size_t c = 0; c < cs.index.size(); ++c) {
    cs.A.col(static_cast<Eigen::Index>(c)) = sys.constraint(cs.index[c] + 1).grad_x(p, x);
    cs.free.push_back(cs.index[c] >= sys.num_ineq());
  }
  return cs;
}

Vec scatter(const ParametricSystem& sys, const ColumnSystem& cs, const Vec& lam) {
  Vec out = Vec::Zero(sys.num_constraints());
  for (std::size_t c = 0; c < cs.index.size(); ++c) out[cs.index[c]] = lam[static_cast<Eigen::Index>(c)];
  return out;
}

// Least 1-norm element of {lambda : A lambda ~ b, lambda_i >= 0 unless free}
// by enumerating basic solutions of the split standard-form LP.
std::optional<double> min_l1_basic(const Mat& A, const Vec& b, const std::vector<bool>& free, double target_res) {
  std::vector<Vec> cols;
  for (Eigen::Index c = 0; c < A.cols(); ++c) {
    cols.push_back(A.col(c));
    if (free[static_cast<std::size_t>(c)]) cols.push_back(-A.col(c));
  }
  const int K = static_cast<int>(cols.size());
  const int smax = std::min<int>(K, static_cast<int>(A.rows()));
  std::optional<double> best;
  if (b.norm() <= target_res) best = 0.0;

  double combos = 0.0;
  for (int s = 1; s <= smax; ++s) {
    double c = 1.0;
    for (int j = 0; j < s; ++j) c = c * (K - j) / (j + 1);
    combos += c;
  }
  if (combos > 2e5) return std::nullopt;

  for (int s = 1; s <= smax; ++s) {
    std::vector<int> idx(static_cast<std::size_t>(s));
    for (int j = 0; j < s; ++j) idx[j] = j;
    while (true) {
      Mat B(A.rows(), s);
      for (int j = 0; j < s; ++j) B.col(j) = cols[idx[j]];
      Eigen::ColPivHouseholderQR<Mat> qr(B);
      if (qr.rank() == s) {
        const Vec z = qr.solve(b);
        const double res = (B * z - b).norm();
        if (res <= target_res && z.minCoeff() >= -1e-12 * (1.0 + z.cwiseAbs().maxCoeff())) {
          const double l1 = z.cwiseMax(0.0).sum();
          if (!best || l1 < *best) best = l1;
        }
      }
      int j = s - 1;
      while (j >= 0 && idx[j] == K - s + j) --j;
      if (j < 0) break;
      ++idx[j];
      for (int t = j + 1; t < s; ++t) idx[t] = idx[t - 1] + 1;
    }
  }
  return best;
}

}  // namespace

ProjectionResult project(const ParametricSystem& sys, const Vec& p, const Vec& v, const ProjectionOptions& opts) {
  sys.check_point(p, v);
  Box box;
  if (opts.box) {
    box = *opts.box;
    if (box.lo.size() != sys.dx() || box.hi.size() != sys.dx()) throw DimensionError("project: box dimension");
  } else {
    const double r = 10.0 * (1.0 + v.norm());
    box.lo = v.array() - r;
    box.hi = v.array() + r;
  }

  SolverOptions so;
  so.tol_feas = opts.tol_feas;
  so.max_outer = opts.max_iter;
  so.max_inner = opts.max_inner;
  const auto starts = multistart_points(v, box.lo, box.hi, std::max(1, opts.n_starts), opts.seed);
  const DistanceObjective obj(v);
  const auto sols = solve_multistart(obj, sys, p, starts, so);

  int best = -1;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < sols.size(); ++i) {
    const LocalSolution& s = sols[i];
    if (s.status != SolveStatus::converged) continue;
    const double d = (s.x - v).norm();
    const double tie = 1e-12 * (1.0 + best_d);
    if (best < 0 || d < best_d - tie || (d <= best_d + tie && lex_less(s.x, sols[best].x))) {
      if (best < 0 || d < best_d) best_d = d;
      best = static_cast<int>(i);
    }
  }

  ProjectionResult out;
  out.multipliers_hat = Vec::Zero(sys.num_constraints());
  if (best < 0) {
    bool any_cap = false;
    int least = 0;
    for (std::size_t i = 0; i < sols.size(); ++i) {
      any_cap = any_cap || sols[i].status == SolveStatus::max_iter;
      if (sols[i].feas_residual < sols[least].feas_residual) least = static_cast<int>(i);
    }
    out.x_star = sols[least].x;
    out.distance = (out.x_star - v).norm();
    out.feas_residual = sols[least].feas_residual;
    out.kkt_residual = std::numeric_limits<double>::infinity();
    out.status = any_cap ? ProjectionStatus::max_iter : ProjectionStatus::infeasible_system;
    return out;
  }

  out.x_star = sols[best].x;
  out.distance = (out.x_star - v).norm();
  out.feas_residual = residual(sys, p, out.x_star);
  out.active = active_set(sys, p, out.x_star);
  out.status = ProjectionStatus::converged;

  const ColumnSystem cs = active_columns(sys, p, out.x_star, out.active);
  const NnlsResult nn = nnls_minnorm(cs.A, v - out.x_star, cs.free);
  out.multipliers_hat = scatter(sys, cs, nn.lambda);
  out.kkt_residual = nn.residual;
  if (out.distance > 0.0) out.multipliers = Vec(out.multipliers_hat / out.distance);
  return out;
}

MultiplierResult multipliers(const ParametricSystem& sys, const Vec& p, const Vec& x, const Vec& v, double tol,
                             double tol_feas) {
  sys.check_point(p, x);
  if (v.size() != x.size()) throw DimensionError("multipliers: v dimension");
  const double d = (x - v).norm();
  if (!(d > 0.0)) throw Error("multipliers: v coincides with x; normalization undefined");
  if (residual(sys, p, x) > tol_feas) throw Error("multipliers: x is not feasible");

  const ColumnSystem cs = active_columns(sys, p, x, active_set(sys, p, x));
  const NnlsResult nn = nnls_minnorm(cs.A, (v - x) / d, cs.free);
  MultiplierResult out;
  out.lambda = scatter(sys, cs, nn.lambda);
  out.stationarity_residual = nn.residual;
  out.empty = nn.residual > tol;
  return out;
}

MultiplierNorm min_multiplier_norm(const ParametricSystem& sys, const Vec& p, const Vec& x, const Vec& v, double tol,
                                   double tol_feas) {
  const MultiplierResult mr = multipliers(sys, p, x, v, tol, tol_feas);
  MultiplierNorm out;
  out.l1 = mr.lambda.cwiseAbs().sum();
  out.stationarity_residual = mr.stationarity_residual;
  out.empty = mr.empty;

  const ColumnSystem cs = active_columns(sys, p, x, active_set(sys, p, x));
  const Vec b = (v - x) / (x - v).norm();
  out.min_l1 = min_l1_basic(cs.A, b, cs.free, mr.stationarity_residual + 1e-9 * (1.0 + b.norm()));
  if (out.min_l1) out.min_l1 = std::min(*out.min_l1, out.l1);
  return out;
}

}  // namespace regmod
