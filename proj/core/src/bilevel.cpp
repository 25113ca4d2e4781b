#include "regmod/bilevel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "regmod/parallel.hpp"
#include "regmod/sampling.hpp"
#include "regmod/solver.hpp"

namespace regmod {

BilevelProblem BilevelProblem::from_file(const ProblemFile& pf) {
  if (!pf.is_bilevel()) throw Error("problem file has no [upper]/[lower] sections");
  BilevelProblem blp{*pf.upper, *pf.lower, pf.system, pf.pcons};
  blp.validate();
  return blp;
}

void BilevelProblem::validate() const {
  auto same = [&](const Expr& e, const char* what) {
    if (e.dp() != sys.dp() || e.dx() != sys.dx()) throw DimensionError(std::string("bilevel: ") + what + " dimensions");
  };
  same(G, "G");
  same(f, "f");
  for (const Expr& e : g) {
    same(e, "g_j");
    if (e.depends_on_x()) throw Error("bilevel: parameter constraints must not involve x");
  }
}

bool BilevelProblem::in_P(const Vec& p, double tol) const {
  const Vec x = Vec::Zero(sys.dx());
  for (const Expr& e : g) {
    if (!(e.eval(p, x) <= tol)) return false;
  }
  return true;
}

namespace {

bool lex_less(const Vec& a, const Vec& b) {
  return std::lexicographical_compare(a.data(), a.data() + a.size(), b.data(), b.data() + b.size());
}

Vec stack(const Vec& p, const Vec& x) {
  Vec z(p.size() + x.size());
  z << p, x;
  return z;
}

double eval_stacked(const Expr& e, const Vec& z) {
  return e.eval(z.head(e.dp()), z.tail(e.dx()));
}

ProjectionOptions projection_options(const LowerOptions& lo) {
  ProjectionOptions po;
  po.tol_feas = lo.tol_feas;
  po.n_starts = lo.n_starts;
  po.max_iter = lo.max_iter;
  po.max_inner = lo.max_inner;
  po.seed = lo.seed;
  return po;
}

}  // namespace

LowerSolution solve_lower(const ParametricSystem& sys, const Expr& f, const Vec& p, const LowerOptions& opts) {
  if (f.dp() != sys.dp() || f.dx() != sys.dx()) throw DimensionError("solve_lower: objective dimensions");
  sys.check_point(p, Vec::Zero(sys.dx()));
  Box box;
  if (opts.box) {
    box = *opts.box;
    if (box.lo.size() != sys.dx() || box.hi.size() != sys.dx()) throw DimensionError("solve_lower: box dimension");
  } else {
    box.lo = Vec::Constant(sys.dx(), -10.0);
    box.hi = Vec::Constant(sys.dx(), 10.0);
  }
  SolverOptions so;
  so.tol_feas = opts.tol_feas;
  so.max_outer = opts.max_iter;
  so.max_inner = opts.max_inner;
  const Vec mid = 0.5 * (box.lo + box.hi);
  const auto starts = multistart_points(mid, box.lo, box.hi, std::max(1, opts.n_starts), opts.seed);
  const ExprObjective obj(f, p);
  const auto sols = solve_multistart(obj, sys, p, starts, so);

  LowerSolution out;
  bool any = false;
  bool any_cap = false;
  for (const LocalSolution& s : sols) {
    any_cap = any_cap || s.status == SolveStatus::max_iter;
    if (s.status != SolveStatus::converged || !std::isfinite(s.objective)) continue;
    if (!any || s.objective < out.phi) out.phi = s.objective;
    any = true;
  }
  if (!any) {
    out.status = any_cap ? ProjectionStatus::max_iter : ProjectionStatus::infeasible_system;
    out.phi = std::numeric_limits<double>::quiet_NaN();
    return out;
  }
  out.status = ProjectionStatus::converged;
  for (const LocalSolution& s : sols) {
    if (s.status != SolveStatus::converged || !(s.objective <= out.phi + opts.value_tol)) continue;
    const bool dup = std::any_of(out.x_solutions.begin(), out.x_solutions.end(),
                                 [&](const Vec& y) { return (y - s.x).norm() <= 1e-6; });
    if (!dup) out.x_solutions.push_back(s.x);
  }
  std::sort(out.x_solutions.begin(), out.x_solutions.end(), lex_less);
  return out;
}

LowerSolution solve_lower(const BilevelProblem& blp, const Vec& p, const LowerOptions& opts) {
  return solve_lower(blp.sys, blp.f, p, opts);
}

LipschitzEstimate estimate_lipschitz_constant(const Expr& e, const Vec& center, double radius, int n,
                                              std::uint64_t seed) {
  const int dim = e.dp() + e.dx();
  if (center.size() != dim) throw DimensionError("estimate_lipschitz_constant: center must stack (p, x)");
  if (!(radius > 0.0)) throw Error("estimate_lipschitz_constant: radius must be positive");
  LipschitzEstimate out;
  std::vector<Vec> pts;
  for (const Vec& u : unit_ball_points(dim, n, seed)) pts.push_back(center + radius * u);
  std::vector<double> val(pts.size(), std::numeric_limits<double>::quiet_NaN());
  std::vector<double> probe(pts.size(), 0.0);
  const double h = 1e-6 * radius;
  parallel_for(pts.size(), [&](std::size_t i) {
    try {
      Vec g;
      val[i] = e.eval_with_grad(pts[i].head(e.dp()), pts[i].tail(e.dx()), g);
      const double gn = g.norm();
      if (!(gn > 0.0)) return;
      Vec b = pts[i] + h * g / gn;
      if ((b - center).norm() > radius) b = pts[i] - h * g / gn;
      probe[i] = std::abs(eval_stacked(e, b) - val[i]) / (b - pts[i]).norm();
    } catch (const DomainError&) {
      val[i] = std::numeric_limits<double>::quiet_NaN();
      probe[i] = 0.0;
    }
  });
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (!std::isfinite(val[i])) {
      ++out.skipped_domain;
      continue;
    }
    out.value = std::max(out.value, probe[i]);
    for (std::size_t j = i + 1; j < pts.size(); ++j) {
      if (!std::isfinite(val[j])) continue;
      const double d = (pts[i] - pts[j]).norm();
      if (d <= 1e-15) continue;
      out.value = std::max(out.value, std::abs(val[i] - val[j]) / d);
      ++out.pairs_used;
    }
  }
  return out;
}

PhiLipschitzReport phi_lipschitz_estimate(const BilevelProblem& blp, const Vec& p0, const PhiLipOptions& opts) {
  blp.validate();
  blp.sys.check_point(p0, Vec::Zero(blp.sys.dx()));
  if (!blp.in_P(p0)) throw NumericalFailure("phi_lipschitz_estimate: p0 is outside P");
  const LowerSolution base = solve_lower(blp, p0, opts.lower);
  if (!base.converged()) throw NumericalFailure("phi_lipschitz_estimate: lower level not solved at p0");

  PhiLipschitzReport out;
  out.phi_at_p0 = base.phi;
  out.x_at_p0 = base.x_solutions.front();
  RegularityReport& rep = out.report;
  rep.kind = ReportKind::lower_level_value;
  rep.params.delta = opts.delta;
  rep.params.schedule = {opts.delta, opts.factor, opts.steps, opts.n};
  rep.params.seed = opts.seed;
  rep.notes.push_back("lower-level values are local solves; (H1) is assumed, not verified");
  const auto radii = rep.params.schedule.radii();

  std::vector<std::vector<Vec>> probes;
  std::vector<std::pair<std::size_t, std::size_t>> flat;
  for (std::size_t k = 0; k < radii.size(); ++k) {
    std::vector<Vec> keep;
    for (Vec& q : parameter_probes(p0, radii[k], opts.n, opts.seed)) {
      if (blp.in_P(q)) {
        keep.push_back(std::move(q));
      } else {
        ++out.skipped_outside_P;
      }
    }
    for (std::size_t j = 0; j < keep.size(); ++j) flat.emplace_back(k, j);
    probes.push_back(std::move(keep));
  }
  std::vector<std::vector<std::optional<double>>> phi(probes.size());
  for (std::size_t k = 0; k < probes.size(); ++k) phi[k].resize(probes[k].size());
  parallel_for(flat.size(), [&](std::size_t i) {
    const auto [k, j] = flat[i];
    const LowerSolution ls = solve_lower(blp, probes[k][j], opts.lower);
    if (ls.converged()) phi[k][j] = ls.phi;
  });

  const std::size_t n_stencil = 2 * static_cast<std::size_t>(p0.size());
  auto add = [&](int step, bool stencil, const Vec& pf, const std::optional<double>& vf, const Vec& pt,
                 const std::optional<double>& vt) {
    const double dp = (pt - pf).norm();
    if (dp < 1e-12) {
      ++rep.skipped_degenerate;
      return;
    }
    if (!vf || !vt) {
      ++rep.skipped_infeasible_p;
      return;
    }
    const double num = std::abs(*vt - *vf);
    rep.samples.push_back({step, stencil, pt, Vec(), pf, num, dp, num / dp});
  };
  for (std::size_t k = 0; k < probes.size(); ++k) {
    const int step = static_cast<int>(k);
    for (std::size_t j = 0; j < probes[k].size(); ++j) add(step, j < n_stencil, p0, base.phi, probes[k][j], phi[k][j]);
    for (std::size_t j = 0; j + 1 < probes[k].size(); ++j) {
      add(step, j + 1 < n_stencil, probes[k][j], phi[k][j], probes[k][j + 1], phi[k][j + 1]);
    }
  }
  finalize_report(rep, radii);

  const Vec center = stack(p0, out.x_at_p0);
  out.l0 = estimate_lipschitz_constant(blp.f, center, opts.delta, 256, opts.seed).value;
  for (int i = 1; i <= blp.sys.num_constraints(); ++i) {
    out.max_li = std::max(out.max_li,
                          estimate_lipschitz_constant(blp.sys.constraint(i), center, opts.delta, 256, opts.seed).value);
  }
  ScheduleOptions so;
  so.schedule = {opts.delta, 0.5, 4, 16};
  so.seed = opts.seed;
  so.proj = projection_options(opts.lower);
  out.m_hat = estimate_r_modulus(blp.sys, p0, out.x_at_p0, so).estimate;
  if (out.m_hat) out.predicted_bound = out.l0 + out.l0 * (1.0 + 1e-3) * *out.m_hat * out.max_li;
  return out;
}

double penalized_objective(const BilevelProblem& blp, double mu, const Vec& p, const Vec& x, const LowerOptions& opts) {
  if (!(mu >= 0.0)) throw Error("penalized_objective: mu must be nonnegative");
  blp.sys.check_point(p, x);
  if (!blp.in_P(p, opts.tol_feas)) throw Error("penalized_objective: p is outside P");
  if (!is_feasible(blp.sys, p, x, opts.tol_feas)) throw Error("penalized_objective: x is not in F(p)");
  const LowerSolution ls = solve_lower(blp, p, opts);
  if (!ls.converged()) throw NumericalFailure("penalized_objective: lower level not solved");
  return blp.G.eval(p, x) + mu * (blp.f.eval(p, x) - ls.phi);
}

std::vector<double> default_mu_grid() {
  std::vector<double> g;
  for (int k = -4; k <= 8; ++k) g.push_back(std::ldexp(1.0, k));
  return g;
}

PenaltyReport find_penalty_threshold(const BilevelProblem& blp, const Vec& p_star, const Vec& x_star,
                                     const PenaltyOptions& opts) {
  blp.validate();
  blp.sys.check_point(p_star, x_star);
  if (!(opts.radius > 0.0)) throw Error("find_penalty_threshold: radius must be positive");
  PenaltyReport rep;
  rep.params = opts;
  if (rep.params.mu_grid.empty()) rep.params.mu_grid = default_mu_grid();
  for (double mu : rep.params.mu_grid) {
    if (!(mu >= 0.0)) throw Error("find_penalty_threshold: mu values must be nonnegative");
  }
  rep.notes.push_back("(H1) P and dom S coincide with P and dom F: assumed, not verified");
  rep.notes.push_back("passing rows are evidence of local minimality on samples, not a proof of partial calmness");

  const LowerOptions& lo = opts.lower;
  if (!blp.in_P(p_star, lo.tol_feas) || !is_feasible(blp.sys, p_star, x_star, lo.tol_feas)) {
    throw NumericalFailure("find_penalty_threshold: anchor is infeasible");
  }
  const LowerSolution anchor = solve_lower(blp, p_star, lo);
  if (!anchor.converged()) throw NumericalFailure("find_penalty_threshold: lower level not solved at anchor");
  const double f_star = blp.f.eval(p_star, x_star);
  if (f_star > anchor.phi + 1e-8 * (1.0 + std::abs(anchor.phi))) {
    throw NumericalFailure("find_penalty_threshold: x_star is not a lower-level solution");
  }
  rep.phi_star = anchor.phi;
  const double G_star = blp.G.eval(p_star, x_star);
  const double gap_star = f_star - anchor.phi;

  const int dp = blp.sys.dp();
  const int dx = blp.sys.dx();
  const Vec z_star = stack(p_star, x_star);
  const ProjectionOptions po = projection_options(lo);

  struct Sample {
    bool in_D = false;
    bool lower_ok = false;
    Vec p, x;
    double G = 0.0, gap = 0.0;
    double grad_norm = 0.0;
  };
  const auto pts = unit_ball_points(dp + dx, opts.n, opts.seed);
  std::vector<Sample> smp(pts.size());
  parallel_for(pts.size(), [&](std::size_t i) {
    Sample& s = smp[i];
    const Vec z = z_star + opts.radius * pts[i];
    s.p = z.head(dp);
    s.x = z.tail(dx);
    try {
      if (!blp.in_P(s.p, lo.tol_feas)) return;
      if (!is_feasible(blp.sys, s.p, s.x, lo.tol_feas)) {
        const ProjectionResult pr = project(blp.sys, s.p, s.x, po);
        if (!pr.converged() || (stack(s.p, pr.x_star) - z_star).norm() > opts.radius) return;
        s.x = pr.x_star;
      }
      s.in_D = true;
      const LowerSolution ls = solve_lower(blp, s.p, lo);
      if (!ls.converged()) return;
      s.lower_ok = true;
      Vec g;
      s.G = blp.G.eval_with_grad(s.p, s.x, g);
      s.grad_norm = g.norm();
      s.gap = blp.f.eval(s.p, s.x) - ls.phi;
    } catch (const DomainError&) {
      s.in_D = false;
    }
  });

  std::vector<const Sample*> used;
  for (const Sample& s : smp) {
    if (!s.in_D) {
      ++rep.skipped_outside_D;
    } else if (!s.lower_ok) {
      ++rep.skipped_lower_failures;
    } else {
      used.push_back(&s);
    }
  }
  rep.samples_used = static_cast<int>(used.size());
  if (used.empty()) rep.notes.push_back("no usable samples in D near the anchor");

  for (double mu : rep.params.mu_grid) {
    PenaltyRow row;
    row.mu = mu;
    const double pen_star = G_star + mu * gap_star;
    row.min_margin = std::numeric_limits<double>::infinity();
    for (const Sample* s : used) {
      const double margin = s->G + mu * s->gap - pen_star;
      if (margin < row.min_margin) {
        row.min_margin = margin;
        row.witness_p = s->p;
        row.witness_x = s->x;
      }
    }
    if (used.empty()) row.min_margin = 0.0;
    row.passes = !used.empty() && row.min_margin >= -opts.pass_tol;
    if (row.passes) {
      row.witness_p.reset();
      row.witness_x.reset();
    }
    rep.per_mu.push_back(std::move(row));
  }

  std::vector<std::size_t> order(rep.per_mu.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return rep.per_mu[a].mu < rep.per_mu[b].mu; });
  bool seen_pass = false;
  for (std::size_t i : order) {
    if (rep.per_mu[i].passes) {
      if (!seen_pass) rep.mu0_empirical = rep.per_mu[i].mu;
      seen_pass = true;
    } else if (seen_pass) {
      rep.monotone = false;
    }
  }

  // l0: Lipschitz constant of G on the sampled part of D.
  for (const Sample* s : used) rep.l0 = std::max(rep.l0, s->grad_norm);
  const std::size_t n_pair = std::min<std::size_t>(used.size(), 256);
  for (std::size_t i = 0; i < n_pair; ++i) {
    for (std::size_t j = i + 1; j < n_pair; ++j) {
      const double d = (stack(used[i]->p, used[i]->x) - stack(used[j]->p, used[j]->x)).norm();
      if (d > 1e-15) rep.l0 = std::max(rep.l0, std::abs(used[i]->G - used[j]->G) / d);
    }
  }

  // M: error-bound modulus of p => C(p) = { x in F(p) : f(p,x) - phi(p) <= 0 }.
  const auto pairs = unit_ball_pairs(dp, dx, opts.n_modulus, opts.seed + 1);
  std::vector<std::optional<double>> ratio(pairs.size());
  parallel_for(pairs.size(), [&](std::size_t i) {
    const Vec p = p_star + opts.radius * pairs[i].u;
    const Vec x = x_star + opts.radius * pairs[i].w;
    try {
      if (!blp.in_P(p, lo.tol_feas)) return;
      const LowerSolution ls = solve_lower(blp, p, lo);
      if (!ls.converged()) return;
      const ParametricSystem csys = blp.sys.with_inequality(blp.f - Expr::constant(ls.phi, dp, dx));
      const double res = residual(csys, p, x);
      if (res < 1e-12) return;
      double dist = std::numeric_limits<double>::infinity();
      const ProjectionResult pr = project(csys, p, x, po);
      if (pr.converged()) dist = pr.distance;
      for (const Vec& y : ls.x_solutions) dist = std::min(dist, (x - y).norm());
      ratio[i] = dist / res;
    } catch (const DomainError&) {
    }
  });
  for (const auto& r : ratio) {
    if (r && (!rep.m_hat || *r > *rep.m_hat)) rep.m_hat = *r;
  }
  if (rep.m_hat) rep.mu0_formula = rep.l0 * *rep.m_hat;
  return rep;
}

double replay_phi_ratio(const BilevelProblem& blp, const RatioSample& s, const LowerOptions& opts) {
  const LowerSolution a = solve_lower(blp, s.p, opts);
  const LowerSolution b = solve_lower(blp, s.p_from, opts);
  if (!a.converged() || !b.converged()) throw NumericalFailure("replay_phi_ratio: lower level not solved");
  return std::abs(a.phi - b.phi) / std::max((s.p - s.p_from).norm(), 1e-12);
}

}  // namespace regmod
