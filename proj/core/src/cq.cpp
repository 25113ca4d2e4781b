#include "regmod/cq.hpp"

#include <cmath>

#include "regmod/parallel.hpp"
#include "regmod/sampling.hpp"

namespace regmod {

const char* to_string(RcrcqVerdict v) {
  return v == RcrcqVerdict::violated ? "violated" : "verified_on_samples";
}

std::vector<SamplePoint> rcrcq_sample_points(const Vec& p0, const Vec& x0, double radius, int n_samples,
                                             std::uint64_t seed) {
  const auto dp = p0.size();
  const auto N = dp + x0.size();
  Vec z0(N);
  z0 << p0, x0;
  std::vector<Vec> offsets;
  const double h = 0.5 * radius;
  for (Eigen::Index i = 0; i < N; ++i) {
    Vec e = Vec::Zero(N);
    e[i] = 1.0;
    offsets.push_back(h * e);
    offsets.push_back(-h * e);
    Vec f = e;
    f[(i + 1) % N] += 1.0;
    if (N == 1) f = e;
    f.normalize();
    offsets.push_back(h * f);
    offsets.push_back(-h * f);
  }
  for (const Vec& u : unit_ball_points(static_cast<int>(N), n_samples, seed)) offsets.push_back(radius * u);

  std::vector<SamplePoint> out;
  out.reserve(offsets.size());
  for (const Vec& o : offsets) {
    const Vec z = z0 + o;
    out.push_back({z.head(dp), z.tail(x0.size())});
  }
  return out;
}

RcrcqReport check_rcrcq(const ParametricSystem& sys, const Vec& p0, const Vec& x0, const RcrcqOptions& opts) {
  sys.check_point(p0, x0);
  if (!(opts.radius > 0.0)) throw Error("check_rcrcq: radius must be positive");
  if (!is_feasible(sys, p0, x0)) throw NumericalFailure("check_rcrcq: base point is infeasible");

  RcrcqReport rep;
  rep.p0 = p0;
  rep.x0 = x0;
  rep.sampling = opts;
  const double eta = opts.eta ? *opts.eta : default_eta(sys, p0, x0);
  rep.active_at_base = active_set(sys, p0, x0, eta);
  rep.sampling.eta = eta;
  const IndexSet& act = rep.active_at_base.indices;
  if (static_cast<int>(act.size()) > kMaxActiveForSubsets) {
    throw NumericalFailure("check_rcrcq: " + std::to_string(act.size()) + " active inequalities exceed the cap of " +
                           std::to_string(kMaxActiveForSubsets));
  }

  const IndexSet eqs = sys.equality_indices();
  const std::size_t n_subsets = std::size_t{1} << act.size();
  std::vector<IndexSet> rows(n_subsets);
  for (std::size_t mask = 0; mask < n_subsets; ++mask) {
    IndexSet r;
    for (std::size_t j = 0; j < act.size(); ++j) {
      if (mask & (std::size_t{1} << j)) r.push_back(act[j]);
    }
    rep.per_subset.push_back({r, 0, 0, 0, std::nullopt});
    r.insert(r.end(), eqs.begin(), eqs.end());
    rows[mask] = r;
  }

  auto ranks_at = [&](const Vec& p, const Vec& x) {
    const Mat J = full_jacobian(sys, p, x);
    std::vector<int> out(n_subsets);
    for (std::size_t s = 0; s < n_subsets; ++s) {
      Mat sub(static_cast<Eigen::Index>(rows[s].size()), sys.dx());
      for (std::size_t r = 0; r < rows[s].size(); ++r) sub.row(static_cast<Eigen::Index>(r)) = J.row(rows[s][r] - 1);
      out[s] = numerical_rank(sub, opts.rank_tol).rank;
    }
    return out;
  };

  const std::vector<int> base = ranks_at(p0, x0);
  for (std::size_t s = 0; s < n_subsets; ++s) {
    rep.per_subset[s].base_rank = rep.per_subset[s].sampled_rank_min = rep.per_subset[s].sampled_rank_max = base[s];
  }

  const auto pts = rcrcq_sample_points(p0, x0, opts.radius, opts.n_samples, opts.seed);
  std::vector<std::vector<int>> ranks(pts.size());
  std::vector<char> ok(pts.size(), 0);
  parallel_for(pts.size(), [&](std::size_t k) {
    try {
      ranks[k] = ranks_at(pts[k].p, pts[k].x);
      ok[k] = 1;
    } catch (const DomainError&) {
      ok[k] = 0;
    }
  });

  for (std::size_t k = 0; k < pts.size(); ++k) {
    if (!ok[k]) {
      ++rep.samples_skipped;
      continue;
    }
    ++rep.samples_evaluated;
    for (std::size_t s = 0; s < n_subsets; ++s) {
      SubsetRank& e = rep.per_subset[s];
      const int r = ranks[k][s];
      e.sampled_rank_min = std::min(e.sampled_rank_min, r);
      e.sampled_rank_max = std::max(e.sampled_rank_max, r);
      if (r != e.base_rank && !e.witness) e.witness = pts[k];
    }
  }
  for (const SubsetRank& e : rep.per_subset) {
    if (e.witness) rep.verdict = RcrcqVerdict::violated;
  }
  return rep;
}

IndexSet select_i0_prime(const ParametricSystem& sys, const Vec& p0, const Vec& x0, double rank_tol) {
  const IndexSet eqs = sys.equality_indices();
  if (eqs.empty()) return {};
  const IndexSet pos = max_li_subset(jacobian(sys, p0, x0, eqs), rank_tol);
  IndexSet out;
  for (int k : pos) out.push_back(eqs[static_cast<std::size_t>(k - 1)]);
  return out;
}

}  // namespace regmod
