#include "regmod/regularity.hpp"

#include <algorithm>
#include <cmath>

#include "regmod/cq.hpp"
#include "regmod/parallel.hpp"
#include "regmod/sampling.hpp"

namespace regmod {

std::vector<double> ShrinkSchedule::radii() const {
  validate();
  std::vector<double> out;
  double r = r0;
  for (int k = 0; k < steps; ++k) {
    out.push_back(r);
    r *= factor;
  }
  return out;
}

void ShrinkSchedule::validate() const {
  if (!(r0 > 0.0)) throw Error("schedule: r0 must be positive");
  if (!(factor > 0.0 && factor < 1.0)) throw Error("schedule: factor must lie in (0,1)");
  if (steps < 1) throw Error("schedule: steps must be at least 1");
  if (samples_per_step < 0) throw Error("schedule: samples must be nonnegative");
}

const char* to_string(ReportKind k) {
  switch (k) {
    case ReportKind::r_modulus: return "r_modulus";
    case ReportKind::aubin: return "aubin";
    case ReportKind::lower_lipschitz: return "lower_lipschitz";
    case ReportKind::lower_level_value: return "lower_level_value";
  }
  return "?";
}

const char* to_string(ConeAgreement a) {
  switch (a) {
    case ConeAgreement::agree: return "agree";
    case ConeAgreement::disagree: return "disagree";
    case ConeAgreement::inconclusive: return "inconclusive";
  }
  return "?";
}

bool diverging_trend(const std::vector<TrendPoint>& trend, double factor, int run) {
  int streak = 0;
  for (std::size_t k = 1; k < trend.size(); ++k) {
    const auto& a = trend[k - 1].sup_ratio;
    const auto& b = trend[k].sup_ratio;
    if (a && b && *a > 0.0 && *b >= factor * *a) {
      if (++streak >= run) return true;
    } else {
      streak = 0;
    }
  }
  return false;
}

void finalize_report(RegularityReport& rep, const std::vector<double>& radii) {
  rep.trend.clear();
  for (double r : radii) rep.trend.push_back({r, std::nullopt, 0});
  rep.estimate.reset();
  rep.witness.reset();
  for (const RatioSample& s : rep.samples) {
    TrendPoint& t = rep.trend.at(static_cast<std::size_t>(s.step));
    ++t.samples;
    if (!t.sup_ratio || s.ratio > *t.sup_ratio) t.sup_ratio = s.ratio;
    if (!rep.estimate || s.ratio > *rep.estimate) {
      rep.estimate = s.ratio;
      rep.witness = s;
    }
  }
  rep.samples_used = static_cast<int>(rep.samples.size());
  rep.diverging = diverging_trend(rep.trend);
  if (rep.samples_used == 0) rep.notes.push_back("no usable samples");
}

namespace {

constexpr double kFloor = 1e-12;

enum class Outcome { used, infeasible_p, degenerate };

struct Evaluated {
  Outcome outcome = Outcome::degenerate;
  RatioSample sample;
};

std::optional<double> distance_to(const ParametricSystem& sys, const Vec& p, const Vec& x,
                                  const ProjectionOptions& proj) {
  const ProjectionResult pr = project(sys, p, x, proj);
  if (!pr.converged()) return std::nullopt;
  return pr.distance;
}

void require_anchor(const ParametricSystem& sys, const Vec& p0, const Vec& x0, const char* who) {
  sys.check_point(p0, x0);
  if (!is_feasible(sys, p0, x0)) throw NumericalFailure(std::string(who) + ": x0 is not in F(p0)");
}

void collect(RegularityReport& rep, std::vector<Evaluated>& ev) {
  for (Evaluated& e : ev) {
    switch (e.outcome) {
      case Outcome::used: rep.samples.push_back(std::move(e.sample)); break;
      case Outcome::infeasible_p: ++rep.skipped_infeasible_p; break;
      case Outcome::degenerate: ++rep.skipped_degenerate; break;
    }
  }
}

struct PointJob {
  int step;
  bool stencil;
  Vec p;
  Vec x;
};

// {p0, p0 +- r e_i} x {x0 +- r e_l}, then the ball pattern scaled by r.
std::vector<PointJob> joint_jobs(const Vec& p0, const Vec& x0, const std::vector<double>& radii,
                                 const std::vector<BallPair>& pattern) {
  std::vector<PointJob> jobs;
  for (std::size_t k = 0; k < radii.size(); ++k) {
    const double r = radii[k];
    const int step = static_cast<int>(k);
    std::vector<Vec> ps{p0};
    for (Eigen::Index i = 0; i < p0.size(); ++i) {
      for (double s : {1.0, -1.0}) {
        Vec p = p0;
        p[i] += s * r;
        ps.push_back(p);
      }
    }
    for (const Vec& p : ps) {
      for (Eigen::Index l = 0; l < x0.size(); ++l) {
        for (double s : {1.0, -1.0}) {
          Vec x = x0;
          x[l] += s * r;
          jobs.push_back({step, true, p, x});
        }
      }
    }
    for (const BallPair& bp : pattern) jobs.push_back({step, false, p0 + r * bp.u, x0 + r * bp.w});
  }
  return jobs;
}

Evaluated eval_error_bound(const ParametricSystem& sys, const PointJob& job, const ProjectionOptions& proj) {
  Evaluated out;
  double res = 0.0;
  try {
    res = residual(sys, job.p, job.x);
  } catch (const DomainError&) {
    return out;
  }
  if (res < kFloor) return out;
  const auto d = distance_to(sys, job.p, job.x, proj);
  if (!d) {
    out.outcome = Outcome::infeasible_p;
    return out;
  }
  out.outcome = Outcome::used;
  out.sample = {job.step, job.stencil, job.p, job.x, Vec(), *d, res, *d / std::max(res, kFloor)};
  return out;
}

std::vector<Evaluated> eval_jobs(const ParametricSystem& sys, const std::vector<PointJob>& jobs,
                                 const ProjectionOptions& proj) {
  std::vector<Evaluated> ev(jobs.size());
  parallel_for(jobs.size(), [&](std::size_t i) { ev[i] = eval_error_bound(sys, jobs[i], proj); });
  return ev;
}

std::vector<double> step_radii(double r0, double factor, int steps) {
  return ShrinkSchedule{r0, factor, steps, 0}.radii();
}

// dist(x0, F(q)) / |q - p0| over the probes of each step, as used by both
// the lower-Lipschitz and Aubin estimators.
struct ProbeSet {
  std::vector<std::vector<Vec>> probes;              // per step
  std::vector<std::vector<std::optional<ProjectionResult>>> proj;  // projection of x0 per probe
};

ProbeSet probe_parameters(const ParametricSystem& sys, const Vec& p0, const Vec& x0, const std::vector<double>& radii,
                          int n, std::uint64_t seed, const ProjectionOptions& proj) {
  ProbeSet ps;
  std::vector<std::pair<std::size_t, std::size_t>> flat;
  for (std::size_t k = 0; k < radii.size(); ++k) {
    ps.probes.push_back(parameter_probes(p0, radii[k], n, seed));
    ps.proj.emplace_back(ps.probes.back().size());
    for (std::size_t j = 0; j < ps.probes.back().size(); ++j) flat.emplace_back(k, j);
  }
  parallel_for(flat.size(), [&](std::size_t i) {
    const auto [k, j] = flat[i];
    ProjectionResult pr = project(sys, ps.probes[k][j], x0, proj);
    if (pr.converged()) ps.proj[k][j] = std::move(pr);
  });
  return ps;
}

std::vector<Evaluated> lolip_samples(const ProbeSet& ps, const Vec& p0, const Vec& x0,
                                     std::size_t stencil_count) {
  std::vector<Evaluated> ev;
  for (std::size_t k = 0; k < ps.probes.size(); ++k) {
    for (std::size_t j = 0; j < ps.probes[k].size(); ++j) {
      const Vec& q = ps.probes[k][j];
      Evaluated e;
      const double dq = (q - p0).norm();
      if (dq < kFloor) {
        e.outcome = Outcome::degenerate;
      } else if (!ps.proj[k][j]) {
        e.outcome = Outcome::infeasible_p;
      } else {
        const double d = ps.proj[k][j]->distance;
        e.outcome = Outcome::used;
        e.sample = {static_cast<int>(k), j < stencil_count, q, x0, p0, d, dq, d / std::max(dq, kFloor)};
      }
      ev.push_back(std::move(e));
    }
  }
  return ev;
}

}  // namespace

std::vector<Vec> parameter_probes(const Vec& p0, double r, int n, std::uint64_t seed) {
  std::vector<Vec> out;
  if (p0.size() == 0) return out;
  for (Eigen::Index i = 0; i < p0.size(); ++i) {
    for (double s : {1.0, -1.0}) {
      Vec p = p0;
      p[i] += s * r;
      out.push_back(p);
    }
  }
  for (const Vec& u : unit_ball_points(static_cast<int>(p0.size()), n, seed)) out.push_back(p0 + r * u);
  return out;
}

RegularityReport estimate_r_modulus(const ParametricSystem& sys, const Vec& p0, const Vec& x0,
                                    const ScheduleOptions& opts) {
  require_anchor(sys, p0, x0, "estimate_r_modulus");
  RegularityReport rep;
  rep.kind = ReportKind::r_modulus;
  rep.params.schedule = opts.schedule;
  rep.params.delta = opts.schedule.r0;
  rep.params.eps = opts.schedule.r0;
  rep.params.seed = opts.seed;
  const auto radii = opts.schedule.radii();
  const auto pattern = unit_ball_pairs(sys.dp(), sys.dx(), opts.schedule.samples_per_step, opts.seed);
  auto ev = eval_jobs(sys, joint_jobs(p0, x0, radii, pattern), opts.proj);
  collect(rep, ev);
  finalize_report(rep, radii);
  return rep;
}

RegularityReport r_modulus_on_points(const ParametricSystem& sys, const std::vector<Vec>& ps,
                                     const std::vector<Vec>& xs, const ProjectionOptions& proj) {
  if (ps.size() != xs.size()) throw DimensionError("r_modulus_on_points: list sizes differ");
  std::vector<PointJob> jobs;
  for (std::size_t i = 0; i < ps.size(); ++i) {
    sys.check_point(ps[i], xs[i]);
    jobs.push_back({0, false, ps[i], xs[i]});
  }
  RegularityReport rep;
  rep.kind = ReportKind::r_modulus;
  auto ev = eval_jobs(sys, jobs, proj);
  collect(rep, ev);
  finalize_report(rep, {0.0});
  return rep;
}

MultiplierBoundReport check_multiplier_bound(const ParametricSystem& sys, const Vec& p0, const Vec& x0,
                                             const ScheduleOptions& opts) {
  require_anchor(sys, p0, x0, "check_multiplier_bound");
  MultiplierBoundReport rep;
  rep.params.schedule = opts.schedule;
  rep.params.delta = opts.schedule.r0;
  rep.params.eps = opts.schedule.r0;
  rep.params.seed = opts.seed;
  rep.notes.push_back("one projection per sample is checked; other points of a multi-valued projection are not enumerated");
  const auto radii = opts.schedule.radii();
  const auto pattern = unit_ball_pairs(sys.dp(), sys.dx(), opts.schedule.samples_per_step, opts.seed);
  const auto jobs = joint_jobs(p0, x0, radii, pattern);

  enum class Kind { used, infeasible_p, feasible_v, empty };
  struct Out {
    Kind kind = Kind::feasible_v;
    MultiplierSample s;
  };
  std::vector<Out> outs(jobs.size());
  parallel_for(jobs.size(), [&](std::size_t i) {
    const PointJob& job = jobs[i];
    Out& o = outs[i];
    try {
      if (residual(sys, job.p, job.x) <= opts.proj.tol_feas) return;
    } catch (const DomainError&) {
      return;
    }
    const ProjectionResult pr = project(sys, job.p, job.x, opts.proj);
    if (!pr.converged()) {
      o.kind = Kind::infeasible_p;
      return;
    }
    if (pr.distance <= kFloor) return;
    o.s = {job.step, job.stencil, job.p, job.x, pr.x_star, pr.multipliers->cwiseAbs().sum(),
           pr.kkt_residual / pr.distance};
    o.kind = o.s.stationarity_residual > opts.proj.tol_kkt ? Kind::empty : Kind::used;
  });

  for (double r : radii) rep.trend.push_back({r, std::nullopt, 0});
  for (Out& o : outs) {
    switch (o.kind) {
      case Kind::infeasible_p: ++rep.skipped_infeasible_p; break;
      case Kind::feasible_v: ++rep.skipped_feasible_v; break;
      case Kind::empty: ++rep.empty_multiplier_sets; break;
      case Kind::used: {
        TrendPoint& t = rep.trend[static_cast<std::size_t>(o.s.step)];
        ++t.samples;
        if (!t.sup_ratio || o.s.norm > *t.sup_ratio) t.sup_ratio = o.s.norm;
        if (!rep.witness || o.s.norm > rep.witness->norm) rep.witness = o.s;
        rep.samples.push_back(std::move(o.s));
        break;
      }
    }
  }
  rep.samples_used = static_cast<int>(rep.samples.size());
  rep.bounded = !diverging_trend(rep.trend);
  if (rep.empty_multiplier_sets > 0) rep.notes.push_back("some samples had no multiplier within tolerance");
  if (rep.samples_used == 0) rep.notes.push_back("no usable samples");
  return rep;
}

RegularityReport estimate_lower_lipschitz(const ParametricSystem& sys, const Vec& p0, const Vec& x0,
                                          const LolipOptions& opts) {
  require_anchor(sys, p0, x0, "estimate_lower_lipschitz");
  RegularityReport rep;
  rep.kind = ReportKind::lower_lipschitz;
  rep.params.delta = opts.delta;
  rep.params.schedule = {opts.delta, opts.factor, opts.steps, opts.n};
  rep.params.seed = opts.seed;
  const auto radii = step_radii(opts.delta, opts.factor, opts.steps);
  const ProbeSet ps = probe_parameters(sys, p0, x0, radii, opts.n, opts.seed, opts.proj);
  auto ev = lolip_samples(ps, p0, x0, 2 * static_cast<std::size_t>(p0.size()));
  collect(rep, ev);
  finalize_report(rep, radii);
  return rep;
}

RegularityReport estimate_aubin_modulus(const ParametricSystem& sys, const Vec& p0, const Vec& x0,
                                        const AubinOptions& opts) {
  require_anchor(sys, p0, x0, "estimate_aubin_modulus");
  if (!(opts.eps > 0.0)) throw Error("estimate_aubin_modulus: eps must be positive");
  RegularityReport rep;
  rep.kind = ReportKind::aubin;
  rep.params.delta = opts.delta;
  rep.params.eps = opts.eps;
  rep.params.schedule = {opts.delta, opts.factor, opts.steps, opts.n_pairs};
  rep.params.seed = opts.seed;
  const auto radii = step_radii(opts.delta, opts.factor, opts.steps);
  const std::size_t n_stencil = 2 * static_cast<std::size_t>(p0.size());
  const ProbeSet ps = probe_parameters(sys, p0, x0, radii, opts.n_pairs, opts.seed, opts.proj);

  // Pairs (p0, q) with x~ = x0.
  auto ev = lolip_samples(ps, p0, x0, n_stencil);

  // Slice points x~ in F(q) near x0: the projection of x0 and projections
  // of two fixed perturbations of x0 at distance eps/2.
  const auto perturb = unit_directions(sys.dx(), 2, opts.seed ^ 0x9e3779b97f4a7c15ULL);
  struct SliceJob {
    std::size_t k, j;
    Vec start;
  };
  std::vector<SliceJob> sjobs;
  for (std::size_t k = 0; k < ps.probes.size(); ++k) {
    for (std::size_t j = 0; j < ps.probes[k].size(); ++j) {
      if (!ps.proj[k][j]) continue;
      for (const Vec& w : perturb) sjobs.push_back({k, j, x0 + 0.5 * opts.eps * w});
    }
  }
  std::vector<std::optional<Vec>> sres(sjobs.size());
  parallel_for(sjobs.size(), [&](std::size_t i) {
    const ProjectionResult pr = project(sys, ps.probes[sjobs[i].k][sjobs[i].j], sjobs[i].start, opts.proj);
    if (pr.converged()) sres[i] = pr.x_star;
  });
  std::vector<std::vector<std::vector<Vec>>> slice(ps.probes.size());
  for (std::size_t k = 0; k < ps.probes.size(); ++k) {
    slice[k].resize(ps.probes[k].size());
    for (std::size_t j = 0; j < ps.probes[k].size(); ++j) {
      if (ps.proj[k][j] && ps.proj[k][j]->distance <= opts.eps) slice[k][j].push_back(ps.proj[k][j]->x_star);
    }
  }
  for (std::size_t i = 0; i < sjobs.size(); ++i) {
    if (sres[i] && (*sres[i] - x0).norm() <= opts.eps) slice[sjobs[i].k][sjobs[i].j].push_back(*sres[i]);
  }

  // Pairs (q, p0) and (q_j, q_{j+1}).
  struct PairJob {
    int step;
    bool stencil;
    Vec p_from, p_to, x;
  };
  std::vector<PairJob> pjobs;
  for (std::size_t k = 0; k < ps.probes.size(); ++k) {
    const auto& P = ps.probes[k];
    for (std::size_t j = 0; j < P.size(); ++j) {
      for (const Vec& xt : slice[k][j]) pjobs.push_back({static_cast<int>(k), j < n_stencil, P[j], p0, xt});
    }
    for (std::size_t j = 0; j + 1 < P.size(); ++j) {
      if (!ps.proj[k][j + 1]) continue;
      for (const Vec& xt : slice[k][j]) {
        pjobs.push_back({static_cast<int>(k), j + 1 < n_stencil, P[j], P[j + 1], xt});
      }
    }
  }
  std::vector<Evaluated> pev(pjobs.size());
  parallel_for(pjobs.size(), [&](std::size_t i) {
    const PairJob& pj = pjobs[i];
    Evaluated& e = pev[i];
    const double dp = (pj.p_to - pj.p_from).norm();
    if (dp < 1e-9) return;
    const auto d = distance_to(sys, pj.p_to, pj.x, opts.proj);
    if (!d) {
      e.outcome = Outcome::infeasible_p;
      return;
    }
    e.outcome = Outcome::used;
    e.sample = {pj.step, pj.stencil, pj.p_to, pj.x, pj.p_from, *d, dp, *d / std::max(dp, kFloor)};
  });
  ev.insert(ev.end(), std::make_move_iterator(pev.begin()), std::make_move_iterator(pev.end()));
  collect(rep, ev);
  finalize_report(rep, radii);
  return rep;
}

LscReport check_lsc(const ParametricSystem& sys, const Vec& p0, const Vec& x0, const LscOptions& opts) {
  require_anchor(sys, p0, x0, "check_lsc");
  if (!(opts.delta > 0.0) || !(opts.eps > 0.0)) throw Error("check_lsc: delta and eps must be positive");
  LscReport rep;
  rep.params = opts;
  std::vector<Vec> probes = parameter_probes(p0, 0.5 * opts.delta, 0, opts.seed);
  for (const Vec& u : unit_ball_points(sys.dp(), p0.size() ? opts.n : 0, opts.seed)) {
    probes.push_back(p0 + opts.delta * u);
  }
  std::vector<std::optional<double>> dist(probes.size());
  parallel_for(probes.size(), [&](std::size_t i) { dist[i] = distance_to(sys, probes[i], x0, opts.proj); });
  for (std::size_t i = 0; i < probes.size(); ++i) {
    if (!dist[i]) {
      ++rep.skipped_infeasible_p;
      continue;
    }
    ++rep.samples_used;
    if (*dist[i] >= opts.eps && rep.holds_on_samples) {
      rep.holds_on_samples = false;
      rep.witness = probes[i];
      rep.witness_distance = *dist[i];
    }
  }
  return rep;
}

ConeReport cone_compare(const ParametricSystem& sys, const Vec& p, const Vec& x, const std::vector<Vec>& directions,
                        const ConeOptions& opts) {
  require_anchor(sys, p, x, "cone_compare");
  if (opts.t_schedule.empty()) throw Error("cone_compare: empty t schedule");
  ConeReport rep;
  rep.params = opts;
  const double eta = opts.eta ? *opts.eta : default_eta(sys, p, x);
  rep.active = active_set(sys, p, x, eta);
  const IndexSet eqs = sys.equality_indices();
  const Mat Ja = jacobian(sys, p, x, rep.active.indices);
  const Mat Je = jacobian(sys, p, x, eqs);
  for (const Vec& d : directions) {
    if (d.size() != sys.dx()) throw DimensionError("cone_compare: direction dimension");
    if (std::abs(d.norm() - 1.0) > 1e-9) throw Error("cone_compare: directions must have unit norm");
  }

  try {
    RcrcqOptions ro;
    ro.eta = eta;
    rep.rcrcq_verified = check_rcrcq(sys, p, x, ro).verdict == RcrcqVerdict::verified_on_samples;
  } catch (const NumericalFailure&) {
    rep.rcrcq_verified.reset();
  }

  const std::size_t nt = opts.t_schedule.size();
  std::vector<std::optional<double>> dist(directions.size() * nt);
  parallel_for(dist.size(), [&](std::size_t i) {
    const Vec& d = directions[i / nt];
    const double t = opts.t_schedule[i % nt];
    try {
      dist[i] = distance_to(sys, p, x + t * d, opts.proj);
    } catch (const DomainError&) {
      dist[i].reset();
    }
  });

  for (std::size_t k = 0; k < directions.size(); ++k) {
    DirectionResult dr;
    dr.d = directions[k];
    dr.in_gamma = (Ja.rows() == 0 || (Ja * dr.d).maxCoeff() <= opts.lin_tol) &&
                  (Je.rows() == 0 || (Je * dr.d).cwiseAbs().maxCoeff() <= opts.lin_tol);
    bool ok = true;
    for (std::size_t j = 0; j < nt; ++j) {
      const auto& dj = dist[k * nt + j];
      if (!dj) {
        ok = false;
        break;
      }
      dr.tangency_ratio_trend.push_back(*dj / opts.t_schedule[j]);
    }
    if (ok) {
      bool nonincreasing = true;
      const auto& r = dr.tangency_ratio_trend;
      for (std::size_t j = 1; j < r.size(); ++j) {
        if (r[j] > r[j - 1] + 1e-12) nonincreasing = false;
      }
      dr.tangent = nonincreasing && r.back() <= opts.tangent_tol;
      dr.agreement = *dr.tangent == dr.in_gamma ? ConeAgreement::agree : ConeAgreement::disagree;
      if (dr.agreement == ConeAgreement::disagree && rep.rcrcq_verified.value_or(false)) rep.violation = true;
    }
    rep.directions.push_back(std::move(dr));
  }
  return rep;
}

double replay_ratio(const ParametricSystem& sys, ReportKind kind, const RatioSample& s,
                    const ProjectionOptions& proj) {
  switch (kind) {
    case ReportKind::r_modulus: {
      const double res = residual(sys, s.p, s.x);
      const auto d = distance_to(sys, s.p, s.x, proj);
      if (!d) throw NumericalFailure("replay_ratio: projection failed");
      return *d / std::max(res, kFloor);
    }
    case ReportKind::lower_lipschitz:
    case ReportKind::aubin: {
      const auto d = distance_to(sys, s.p, s.x, proj);
      if (!d) throw NumericalFailure("replay_ratio: projection failed");
      return *d / std::max((s.p - s.p_from).norm(), kFloor);
    }
    case ReportKind::lower_level_value: break;
  }
  throw Error("replay_ratio: value-function samples are replayed by the bilevel module");
}

}  // namespace regmod
