#include "regmod/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "regmod/parallel.hpp"

namespace regmod {

RankResult numerical_rank(const Mat& A, double rank_tol) {
  if (!A.allFinite()) throw Error("numerical_rank: matrix has non-finite entries");
  if (!(rank_tol > 0.0)) throw Error("numerical_rank: rank_tol must be positive");
  RankResult out;
  if (A.rows() == 0 || A.cols() == 0) {
    out.threshold_used = rank_tol;
    return out;
  }
  Eigen::JacobiSVD<Mat> svd(A);
  const Vec& s = svd.singularValues();
  out.singular_values.assign(s.data(), s.data() + s.size());
  const double smax = s.size() ? s[0] : 0.0;
  out.threshold_used = rank_tol * std::max(smax, 1.0);
  for (double sv : out.singular_values) {
    if (sv > out.threshold_used) ++out.rank;
  }
  return out;
}

IndexSet max_li_subset(const Mat& rows, double rank_tol) {
  IndexSet chosen;
  Mat picked(0, rows.cols());
  for (Eigen::Index i = 0; i < rows.rows(); ++i) {
    Mat trial(picked.rows() + 1, rows.cols());
    trial << picked, rows.row(i);
    if (numerical_rank(trial, rank_tol).rank == trial.rows()) {
      picked = std::move(trial);
      chosen.push_back(static_cast<int>(i) + 1);
    }
  }
  return chosen;
}

IndexSet max_li_subset(const std::vector<Vec>& rows, double rank_tol) {
  if (rows.empty()) return {};
  Mat M(static_cast<Eigen::Index>(rows.size()), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i) M.row(static_cast<Eigen::Index>(i)) = rows[i].transpose();
  return max_li_subset(M, rank_tol);
}

Vec bounded_qp(const Mat& H, const Vec& c, const std::vector<bool>& bounded) {
  const Eigen::Index n = c.size();
  Vec z = Vec::Zero(n);
  std::vector<bool> fixed(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) fixed[i] = bounded[i];

  const double gtol = 1e-14 * (1.0 + c.cwiseAbs().maxCoeff() + H.cwiseAbs().maxCoeff());
  const int max_iter = 20 * static_cast<int>(n) + 50;
  for (int it = 0; it < max_iter; ++it) {
    std::vector<Eigen::Index> freeidx;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (!fixed[i]) freeidx.push_back(i);
    }
    Vec cand = Vec::Zero(n);
    if (!freeidx.empty()) {
      const auto m = static_cast<Eigen::Index>(freeidx.size());
      Mat Hff(m, m);
      Vec cf(m);
      for (Eigen::Index a = 0; a < m; ++a) {
        cf[a] = c[freeidx[a]];
        for (Eigen::Index b = 0; b < m; ++b) Hff(a, b) = H(freeidx[a], freeidx[b]);
      }
      const Vec zf = Hff.ldlt().solve(-cf);
      for (Eigen::Index a = 0; a < m; ++a) cand[freeidx[a]] = zf[a];
    }

    double alpha = 1.0;
    Eigen::Index blocking = -1;
    for (Eigen::Index i : freeidx) {
      if (bounded[i] && cand[i] < 0.0) {
        const double denom = z[i] - cand[i];
        const double a = denom > 0.0 ? z[i] / denom : 0.0;
        if (a < alpha) {
          alpha = a;
          blocking = i;
        }
      }
    }

    if (blocking < 0) {
      z = cand;
      const Vec g = H * z + c;
      Eigen::Index release = -1;
      double most_negative = -gtol;
      for (Eigen::Index i = 0; i < n; ++i) {
        if (fixed[i] && g[i] < most_negative) {
          most_negative = g[i];
          release = i;
        }
      }
      if (release < 0) break;
      fixed[release] = false;
    } else {
      z += alpha * (cand - z);
      z[blocking] = 0.0;
      fixed[blocking] = true;
      for (Eigen::Index i : freeidx) {
        if (bounded[i] && z[i] <= 0.0) {
          z[i] = 0.0;
          fixed[i] = true;
        }
      }
    }
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    if (bounded[i] && z[i] < 0.0) z[i] = 0.0;
  }
  return z;
}

namespace {

Vec pinv_solve(const Mat& A, const Vec& b) {
  Eigen::JacobiSVD<Mat> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vec& s = svd.singularValues();
  const double thr = s.size() ? 1e-12 * s[0] : 0.0;
  Vec ub = svd.matrixU().transpose() * b;
  for (Eigen::Index i = 0; i < s.size(); ++i) ub[i] = s[i] > thr ? ub[i] / s[i] : 0.0;
  return svd.matrixV() * ub;
}

}  // namespace

NnlsResult nnls_minnorm(const Mat& A, const Vec& b, const std::vector<bool>& sign_free) {
  const Eigen::Index k = A.cols();
  NnlsResult out;
  if (k == 0) {
    out.lambda = Vec(0);
    out.residual = b.norm();
    return out;
  }
  std::vector<bool> bounded(static_cast<std::size_t>(k), true);
  for (std::size_t i = 0; i < sign_free.size() && i < bounded.size(); ++i) bounded[i] = !sign_free[i];

  const Mat AtA = A.transpose() * A;
  const Vec Atb = A.transpose() * b;
  const double scale = std::max(1.0, AtA.diagonal().maxCoeff());
  const Mat I = Mat::Identity(k, k);

  Vec path[3];
  const double eps[3] = {1e-8 * scale, 1e-9 * scale, 1e-10 * scale};
  for (int j = 0; j < 3; ++j) path[j] = bounded_qp(AtA + eps[j] * I, -Atb, bounded);
  Vec lam = path[2] + (path[2] - path[1]) / 9.0;
  for (Eigen::Index i = 0; i < k; ++i) {
    if (bounded[i] && lam[i] < 0.0) lam[i] = 0.0;
  }
  double res = (A * lam - b).norm();

  // Pseudo-inverse refinement on the support.
  const double thr = 1e-7 * std::max(1.0, lam.cwiseAbs().maxCoeff());
  std::vector<Eigen::Index> support;
  for (Eigen::Index i = 0; i < k; ++i) {
    if (!bounded[i] || lam[i] > thr) support.push_back(i);
  }
  if (!support.empty()) {
    Mat As(A.rows(), static_cast<Eigen::Index>(support.size()));
    for (std::size_t s = 0; s < support.size(); ++s) As.col(static_cast<Eigen::Index>(s)) = A.col(support[s]);
    const Vec ls = pinv_solve(As, b);
    Vec cand = Vec::Zero(k);
    bool sign_ok = true;
    const double neg_tol = 1e-12 * std::max(1.0, ls.cwiseAbs().maxCoeff());
    for (std::size_t s = 0; s < support.size(); ++s) {
      double val = ls[static_cast<Eigen::Index>(s)];
      if (bounded[support[s]]) {
        if (val < -neg_tol) sign_ok = false;
        val = std::max(val, 0.0);
      }
      cand[support[s]] = val;
    }
    const double cand_res = (A * cand - b).norm();
    if (sign_ok && cand_res <= res + 1e-12 * (1.0 + b.norm())) {
      lam = cand;
      res = cand_res;
    }
  }
  out.lambda = std::move(lam);
  out.residual = res;
  return out;
}

DistanceBracket grid_distance(const ParametricSystem& sys, const Vec& p, const Vec& v, const Box& box, int n_per_axis,
                              double tol_feas) {
  const int d = sys.dx();
  if (d > 3) throw Error("grid_distance: oracle limited to dx <= 3");
  if (n_per_axis < 2 || n_per_axis > 401) throw Error("grid_distance: n_per_axis must lie in [2, 401]");
  if (box.lo.size() != d || box.hi.size() != d || v.size() != d) throw DimensionError("grid_distance: box/v dimension");
  sys.check_point(p, v);

  const std::size_t n = static_cast<std::size_t>(n_per_axis);
  std::size_t per_slice = 1;
  for (int k = 1; k < d; ++k) per_slice *= n;
  Vec step(d);
  for (int k = 0; k < d; ++k) step[k] = (box.hi[k] - box.lo[k]) / static_cast<double>(n - 1);

  auto coord = [&](int axis, std::size_t i) {
    return box.lo[axis] + (box.hi[axis] - box.lo[axis]) * static_cast<double>(i) / static_cast<double>(n - 1);
  };

  struct Best {
    double dist = std::numeric_limits<double>::infinity();
    std::size_t index = 0;
  };
  std::vector<Best> best(n);
  parallel_for(n, [&](std::size_t i0) {
    Vec x(d);
    Best b;
    for (std::size_t r = 0; r < per_slice; ++r) {
      x[0] = coord(0, i0);
      std::size_t rem = r;
      for (int k = d - 1; k >= 1; --k) {
        x[k] = coord(k, rem % n);
        rem /= n;
      }
      bool feasible = false;
      try {
        feasible = residual(sys, p, x) <= tol_feas;
      } catch (const DomainError&) {
        feasible = false;
      }
      if (!feasible) continue;
      const double dist = (x - v).norm();
      if (dist < b.dist) {
        b.dist = dist;
        b.index = i0 * per_slice + r;
      }
    }
    best[i0] = b;
  });

  Best overall;
  for (const Best& b : best) {
    if (b.dist < overall.dist) overall = b;
  }
  if (!std::isfinite(overall.dist)) {
    throw NumericalFailure("grid_distance: empty within box at this resolution");
  }

  DistanceBracket out;
  out.upper = overall.dist;
  out.lower = std::max(0.0, overall.dist - step.norm());
  out.nearest = Vec(d);
  std::size_t rem = overall.index % per_slice;
  out.nearest[0] = coord(0, overall.index / per_slice);
  for (int k = d - 1; k >= 1; --k) {
    out.nearest[k] = coord(k, rem % n);
    rem /= n;
  }
  return out;
}

}  // namespace regmod
