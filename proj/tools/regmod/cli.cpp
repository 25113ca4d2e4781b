#include "regmod/cli.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <numbers>
#include <ostream>

#include "CLI11.hpp"
#include "regmod/bilevel.hpp"
#include "regmod/cq.hpp"
#include "regmod/fixtures.hpp"
#include "regmod/parallel.hpp"
#include "regmod/problem_file.hpp"
#include "regmod/report.hpp"
#include "regmod/sampling.hpp"

#ifndef REGMOD_FIXTURE_DIR
#define REGMOD_FIXTURE_DIR "fixtures"
#endif

namespace regmod::cli {
namespace {

class UsageError : public Error {
 public:
  using Error::Error;
};

std::vector<double> parse_csv(const std::string& text, const char* flag) {
  std::vector<double> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find(',', pos);
    if (end == std::string::npos) end = text.size();
    std::string_view item(text.data() + pos, end - pos);
    while (!item.empty() && item.front() == ' ') item.remove_prefix(1);
    while (!item.empty() && item.back() == ' ') item.remove_suffix(1);
    double v = 0.0;
    const auto res = std::from_chars(item.data(), item.data() + item.size(), v);
    if (item.empty() || res.ec != std::errc() || res.ptr != item.data() + item.size() || !std::isfinite(v)) {
      throw UsageError(std::string(flag) + ": expected comma-separated decimals, got '" + text + "'");
    }
    out.push_back(v);
    pos = end + 1;
  }
  return out;
}

Vec parse_vec(const std::string& text, const char* flag, int dim) {
  const auto vals = parse_csv(text, flag);
  if (static_cast<int>(vals.size()) != dim) {
    throw UsageError(std::string(flag) + ": expected " + std::to_string(dim) + " values, got " +
                     std::to_string(vals.size()));
  }
  return Eigen::Map<const Vec>(vals.data(), dim);
}

struct Common {
  std::string problem;
  std::string fixture;
  std::uint64_t seed = 0;
  int threads = 0;
  std::string out;
  double tol_feas = kDefaultTolFeas;
  double tol_kkt = 1e-7;
  int n_starts = 8;
  int max_iter = 200;
};

struct Loaded {
  ProblemFile pf;
  std::string hash;
};

Loaded load(const Common& c) {
  if (c.problem.empty() == c.fixture.empty()) throw UsageError("give exactly one of --problem or --fixture");
  const std::string text = c.problem.empty() ? fixture(c.fixture).text : read_text_file(c.problem);
  return {parse_problem(text), problem_hash(text)};
}

ProjectionOptions proj_options(const Common& c) {
  ProjectionOptions po;
  po.tol_feas = c.tol_feas;
  po.tol_kkt = c.tol_kkt;
  po.n_starts = c.n_starts;
  po.max_iter = c.max_iter;
  po.seed = c.seed;
  return po;
}

LowerOptions lower_options(const Common& c) {
  LowerOptions lo;
  lo.tol_feas = c.tol_feas;
  lo.n_starts = c.n_starts;
  lo.max_iter = c.max_iter;
  lo.seed = c.seed;
  return lo;
}

Json common_params(const Common& c) {
  return {{"seed", c.seed},
          {"tol_feas", c.tol_feas},
          {"tol_kkt", c.tol_kkt},
          {"n_starts", c.n_starts},
          {"max_iter", c.max_iter}};
}

void add_common(CLI::App* sub, Common& c, bool needs_problem = true) {
  if (needs_problem) {
    sub->add_option("--problem", c.problem, "Problem file");
    sub->add_option("--fixture", c.fixture, "Built-in fixture name instead of a file");
  }
  sub->add_option("--seed", c.seed, "Seed for every stochastic choice");
  sub->add_option("--threads", c.threads, "Worker threads (speed only)")->check(CLI::NonNegativeNumber);
  sub->add_option("--out", c.out, "Write the JSON report to this file");
  sub->add_option("--tol-feas", c.tol_feas, "Feasibility tolerance")->check(CLI::PositiveNumber);
  sub->add_option("--tol-kkt", c.tol_kkt, "Stationarity tolerance")->check(CLI::PositiveNumber);
  sub->add_option("--n-starts", c.n_starts, "Multi-start count")->check(CLI::PositiveNumber);
  sub->add_option("--max-iter", c.max_iter, "Outer iteration cap")->check(CLI::PositiveNumber);
}

struct Outcome {
  Report report;
  int code = kExitOk;
};

void add_warnings(Report& r, const ProblemFile& pf) {
  r.warnings.insert(r.warnings.end(), pf.warnings.begin(), pf.warnings.end());
}

Outcome start(const char* command, const Loaded& l) {
  Outcome o;
  o.report.command = command;
  o.report.problem_hash = l.hash;
  add_warnings(o.report, l.pf);
  return o;
}

void regularity_witness(Report& r, const RegularityReport& rep) {
  if (rep.witness) r.witnesses.push_back(to_json(*rep.witness));
  if (rep.samples_used == 0) r.warnings.push_back("no usable samples");
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Regularity and constraint-qualification diagnostics for parametric constraint systems", "regmod"};
  app.require_subcommand(1);
  Common c;

  std::string s_p, s_v, s_p0, s_x0, s_box_lo, s_box_hi, s_xstar, s_mu_grid, s_t_schedule, s_objective;
  std::vector<std::string> s_dirs;
  double radius = 1e-2, pen_radius = 0.05, rank_tol = kDefaultRankTol, eta = -1.0;
  int samples = -1;
  double r0 = 0.1, factor = 0.5, delta = -1.0, eps = -1.0;
  int steps = -1;
  int n_dirs = 16;
  bool with_multipliers = false;

  auto* validate = app.add_subcommand("validate", "Parse a problem file and echo its structure");
  add_common(validate, c);

  auto* proj = app.add_subcommand("project", "Project v onto F(p)");
  add_common(proj, c);
  proj->add_option("--p", s_p, "Parameter (csv)")->required();
  proj->add_option("--v", s_v, "Point to project (csv)")->required();
  proj->add_option("--box-lo", s_box_lo, "Lower corner of the start box (csv)");
  proj->add_option("--box-hi", s_box_hi, "Upper corner of the start box (csv)");

  auto* rcrcq = app.add_subcommand("rcrcq", "Check RCRCQ at (p0, x0) by rank sampling");
  add_common(rcrcq, c);
  rcrcq->add_option("--p0", s_p0, "Base parameter (csv)")->required();
  rcrcq->add_option("--x0", s_x0, "Base point in F(p0) (csv)")->required();
  rcrcq->add_option("--radius", radius, "Radius of the joint (p, x) sampling ball")->check(CLI::PositiveNumber);
  rcrcq->add_option("--samples", samples, "Low-discrepancy samples after the stencil")->check(CLI::NonNegativeNumber);
  rcrcq->add_option("--rank-tol", rank_tol, "Relative rank threshold")->check(CLI::PositiveNumber);
  rcrcq->add_option("--eta", eta, "Active-set tolerance (default 1e-6 (1 + max |h|))");

  auto* rreg = app.add_subcommand("rreg", "Estimate the error-bound (R-regularity) modulus");
  add_common(rreg, c);
  rreg->add_option("--p0", s_p0, "Base parameter (csv)")->required();
  rreg->add_option("--x0", s_x0, "Base point in F(p0) (csv)")->required();
  rreg->add_option("--r0", r0, "First radius")->check(CLI::PositiveNumber);
  rreg->add_option("--factor", factor, "Radius shrink factor in (0,1)");
  rreg->add_option("--steps", steps, "Number of radii")->check(CLI::PositiveNumber);
  rreg->add_option("--samples", samples, "Ball samples per radius")->check(CLI::NonNegativeNumber);
  rreg->add_flag("--multipliers", with_multipliers, "Also track multiplier norms of nearby projections");

  auto* aubin = app.add_subcommand("aubin", "Estimate the Aubin (Lipschitz-like) modulus");
  add_common(aubin, c);
  aubin->add_option("--p0", s_p0, "Base parameter (csv)")->required();
  aubin->add_option("--x0", s_x0, "Base point in F(p0) (csv)")->required();
  aubin->add_option("--delta", delta, "Parameter radius of the first step")->check(CLI::PositiveNumber);
  aubin->add_option("--eps", eps, "Radius around x0 for base points")->check(CLI::PositiveNumber);
  aubin->add_option("--factor", factor, "Radius shrink factor in (0,1)");
  aubin->add_option("--steps", steps, "Number of radii")->check(CLI::PositiveNumber);
  aubin->add_option("--samples", samples, "Parameter pairs per radius")->check(CLI::NonNegativeNumber);

  auto* lolip = app.add_subcommand("lolip", "Estimate the lower-Lipschitz constant");
  add_common(lolip, c);
  lolip->add_option("--p0", s_p0, "Base parameter (csv)")->required();
  lolip->add_option("--x0", s_x0, "Base point in F(p0) (csv)")->required();
  lolip->add_option("--delta", delta, "Parameter radius of the first step")->check(CLI::PositiveNumber);
  lolip->add_option("--factor", factor, "Radius shrink factor in (0,1)");
  lolip->add_option("--steps", steps, "Number of radii")->check(CLI::PositiveNumber);
  lolip->add_option("--samples", samples, "Parameter samples per radius")->check(CLI::NonNegativeNumber);

  auto* lsc = app.add_subcommand("lsc", "Check lower semicontinuity on samples");
  add_common(lsc, c);
  lsc->add_option("--p0", s_p0, "Base parameter (csv)")->required();
  lsc->add_option("--x0", s_x0, "Base point in F(p0) (csv)")->required();
  lsc->add_option("--delta", delta, "Parameter radius")->check(CLI::PositiveNumber);
  lsc->add_option("--eps", eps, "Distance threshold")->check(CLI::PositiveNumber);
  lsc->add_option("--samples", samples, "Parameter samples")->check(CLI::NonNegativeNumber);

  auto* cones = app.add_subcommand("cones", "Compare the linearized cone with sampled tangency");
  add_common(cones, c);
  cones->add_option("--p0", s_p0, "Base parameter (csv)")->required();
  cones->add_option("--x0", s_x0, "Base point in F(p0) (csv)")->required();
  cones->add_option("--directions", n_dirs, "Number of generated unit directions")->check(CLI::NonNegativeNumber);
  cones->add_option("--dir", s_dirs, "Explicit direction (csv, normalized); repeatable");
  cones->add_option("--t-schedule", s_t_schedule, "Step lengths t (csv)");

  auto* value = app.add_subcommand("value", "Solve the lower level at p");
  add_common(value, c);
  value->add_option("--p", s_p, "Parameter (csv)")->required();
  value->add_option("--objective", s_objective, "Lower objective for a single-level problem file");

  auto* philip = app.add_subcommand("phi-lip", "Estimate the Lipschitz constant of the value function");
  add_common(philip, c);
  philip->add_option("--p0", s_p0, "Base parameter (csv)")->required();
  philip->add_option("--delta", delta, "Parameter radius of the first step")->check(CLI::PositiveNumber);
  philip->add_option("--factor", factor, "Radius shrink factor in (0,1)");
  philip->add_option("--steps", steps, "Number of radii")->check(CLI::PositiveNumber);
  philip->add_option("--samples", samples, "Parameter samples per radius")->check(CLI::NonNegativeNumber);

  auto* penalty = app.add_subcommand("penalty", "Penalty threshold for the value-function reformulation");
  add_common(penalty, c);
  penalty->add_option("--pstar", s_p0, "Anchor parameter (csv)")->required();
  penalty->add_option("--xstar", s_xstar, "Anchor lower-level solution (csv)")->required();
  penalty->add_option("--mu-grid", s_mu_grid, "Penalty parameters (csv)");
  penalty->add_option("--radius", pen_radius, "Neighborhood radius around the anchor")->check(CLI::PositiveNumber);
  penalty->add_option("--samples", samples, "Neighborhood samples")->check(CLI::NonNegativeNumber);

  auto* fixtures = app.add_subcommand("fixtures", "List built-in fixtures");
  add_common(fixtures, c, false);

  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "regmod: " << e.what() << "\n";
    return kExitUsage;
  }

  int threads = c.threads;
  if (threads == 0) {
    if (const char* env = std::getenv("REGMOD_THREADS")) threads = std::atoi(env);
  }
  if (threads > 0) set_thread_count(threads);

  const auto t_begin = std::chrono::steady_clock::now();
  Outcome o;
  try {
    CLI::App* sub = app.get_subcommands().front();
    const std::string name = sub->get_name();
    auto pick = [](auto given, auto dflt) { return given < 0 ? dflt : given; };

    if (name == "fixtures") {
      o.report.command = name;
      Json list = Json::array();
      for (const Fixture& f : builtin_fixtures()) {
        const ProblemFile pf = parse_problem(f.text);
        list.push_back({{"name", f.name},
                        {"path", std::string(REGMOD_FIXTURE_DIR) + "/" + f.file_name},
                        {"dp", pf.system.dp()},
                        {"dx", pf.system.dx()},
                        {"bilevel", pf.is_bilevel()}});
      }
      o.report.result = {{"fixtures", list}};
    } else {
      const Loaded l = load(c);
      const ParametricSystem& sys = l.pf.system;
      o = start(name.c_str(), l);
      Report& r = o.report;
      r.params = common_params(c);

      if (name == "validate") {
        Json cons = Json::array();
        for (int i = 1; i <= sys.num_constraints(); ++i) {
          cons.push_back({{"index", i},
                          {"kind", sys.is_equality(i) ? "eq" : "ineq"},
                          {"expr", sys.constraint(i).to_string()}});
        }
        Json pc = Json::array();
        for (const Expr& g : l.pf.pcons) pc.push_back(g.to_string());
        r.result = {{"name", sys.name()},
                    {"dp", sys.dp()},
                    {"dx", sys.dx()},
                    {"num_ineq", sys.num_ineq()},
                    {"num_eq", sys.num_eq()},
                    {"bilevel", l.pf.is_bilevel()},
                    {"constraints", cons},
                    {"upper", l.pf.upper ? Json(l.pf.upper->to_string()) : Json(nullptr)},
                    {"lower", l.pf.lower ? Json(l.pf.lower->to_string()) : Json(nullptr)},
                    {"pcons", pc}};
      } else if (name == "project") {
        const Vec p = parse_vec(s_p, "--p", sys.dp());
        const Vec v = parse_vec(s_v, "--v", sys.dx());
        ProjectionOptions po = proj_options(c);
        if (s_box_lo.empty() != s_box_hi.empty()) throw UsageError("give both --box-lo and --box-hi");
        if (!s_box_lo.empty()) po.box = Box{parse_vec(s_box_lo, "--box-lo", sys.dx()), parse_vec(s_box_hi, "--box-hi", sys.dx())};
        r.params["p"] = to_json(p);
        r.params["v"] = to_json(v);
        r.params["box"] = po.box ? Json{{"lo", to_json(po.box->lo)}, {"hi", to_json(po.box->hi)}} : Json(nullptr);
        r.result = to_json(project(sys, p, v, po));
      } else if (name == "rcrcq") {
        const Vec p0 = parse_vec(s_p0, "--p0", sys.dp());
        const Vec x0 = parse_vec(s_x0, "--x0", sys.dx());
        RcrcqOptions ro;
        ro.radius = radius;
        ro.n_samples = pick(samples, 256);
        ro.rank_tol = rank_tol;
        if (eta >= 0.0) ro.eta = eta;
        ro.seed = c.seed;
        r.params["p0"] = to_json(p0);
        r.params["x0"] = to_json(x0);
        r.params["radius"] = ro.radius;
        r.params["samples"] = ro.n_samples;
        r.params["rank_tol"] = ro.rank_tol;
        r.params["eta"] = ro.eta ? Json(*ro.eta) : Json(nullptr);
        const RcrcqReport rep = check_rcrcq(sys, p0, x0, ro);
        r.result = to_json(rep);
        Json i0p = Json::array();
        for (int i : select_i0_prime(sys, p0, x0, ro.rank_tol)) i0p.push_back(i);
        r.result["i0_prime"] = i0p;
        for (const SubsetRank& s : rep.per_subset) {
          if (s.witness) {
            Json K = Json::array();
            for (int i : s.K) K.push_back(i);
            r.witnesses.push_back({{"K", K}, {"p", to_json(s.witness->p)}, {"x", to_json(s.witness->x)}});
          }
        }
      } else if (name == "rreg") {
        const Vec p0 = parse_vec(s_p0, "--p0", sys.dp());
        const Vec x0 = parse_vec(s_x0, "--x0", sys.dx());
        ScheduleOptions so;
        so.schedule = {r0, factor, pick(steps, 8), pick(samples, 32)};
        so.seed = c.seed;
        so.proj = proj_options(c);
        r.params["p0"] = to_json(p0);
        r.params["x0"] = to_json(x0);
        r.params["schedule"] = to_json(so.schedule);
        r.params["multipliers"] = with_multipliers;
        const RegularityReport rep = estimate_r_modulus(sys, p0, x0, so);
        r.result = to_json(rep);
        regularity_witness(r, rep);
        if (with_multipliers) {
          const MultiplierBoundReport mb = check_multiplier_bound(sys, p0, x0, so);
          r.result["multiplier_bound"] = to_json(mb);
          if (mb.witness) r.witnesses.push_back(to_json(*mb.witness));
        }
        if (rep.samples_used == 0) o.code = kExitNumerical;
      } else if (name == "aubin") {
        const Vec p0 = parse_vec(s_p0, "--p0", sys.dp());
        const Vec x0 = parse_vec(s_x0, "--x0", sys.dx());
        AubinOptions ao;
        ao.delta = pick(delta, 0.1);
        ao.eps = pick(eps, 0.1);
        ao.n_pairs = pick(samples, 32);
        ao.factor = factor;
        ao.steps = pick(steps, 8);
        ao.seed = c.seed;
        ao.proj = proj_options(c);
        r.params["p0"] = to_json(p0);
        r.params["x0"] = to_json(x0);
        r.params["delta"] = ao.delta;
        r.params["eps"] = ao.eps;
        r.params["samples"] = ao.n_pairs;
        r.params["factor"] = ao.factor;
        r.params["steps"] = ao.steps;
        const RegularityReport rep = estimate_aubin_modulus(sys, p0, x0, ao);
        r.result = to_json(rep);
        regularity_witness(r, rep);
        if (rep.samples_used == 0) o.code = kExitNumerical;
      } else if (name == "lolip") {
        const Vec p0 = parse_vec(s_p0, "--p0", sys.dp());
        const Vec x0 = parse_vec(s_x0, "--x0", sys.dx());
        LolipOptions lo;
        lo.delta = pick(delta, 0.1);
        lo.n = pick(samples, 32);
        lo.factor = factor;
        lo.steps = pick(steps, 8);
        lo.seed = c.seed;
        lo.proj = proj_options(c);
        r.params["p0"] = to_json(p0);
        r.params["x0"] = to_json(x0);
        r.params["delta"] = lo.delta;
        r.params["samples"] = lo.n;
        r.params["factor"] = lo.factor;
        r.params["steps"] = lo.steps;
        const RegularityReport rep = estimate_lower_lipschitz(sys, p0, x0, lo);
        r.result = to_json(rep);
        regularity_witness(r, rep);
        if (rep.samples_used == 0) o.code = kExitNumerical;
      } else if (name == "lsc") {
        const Vec p0 = parse_vec(s_p0, "--p0", sys.dp());
        const Vec x0 = parse_vec(s_x0, "--x0", sys.dx());
        LscOptions lo;
        lo.delta = pick(delta, 0.2);
        lo.eps = pick(eps, 0.5);
        lo.n = pick(samples, 64);
        lo.seed = c.seed;
        lo.proj = proj_options(c);
        r.params["p0"] = to_json(p0);
        r.params["x0"] = to_json(x0);
        r.params["delta"] = lo.delta;
        r.params["eps"] = lo.eps;
        r.params["samples"] = lo.n;
        const LscReport rep = check_lsc(sys, p0, x0, lo);
        r.result = to_json(rep);
        if (rep.witness) r.witnesses.push_back({{"p", to_json(*rep.witness)}, {"distance", *rep.witness_distance}});
        if (rep.samples_used == 0) o.code = kExitNumerical;
      } else if (name == "cones") {
        const Vec p0 = parse_vec(s_p0, "--p0", sys.dp());
        const Vec x0 = parse_vec(s_x0, "--x0", sys.dx());
        std::vector<Vec> dirs;
        for (const std::string& d : s_dirs) {
          Vec v = parse_vec(d, "--dir", sys.dx());
          if (!(v.norm() > 0.0)) throw UsageError("--dir: zero direction");
          dirs.push_back(v / v.norm());
        }
        if (s_dirs.empty()) {
          if (sys.dx() == 2) {
            for (int k = 0; k < n_dirs; ++k) {
              const double a = 2.0 * std::numbers::pi * k / n_dirs;
              Vec d(2);
              d << std::cos(a), std::sin(a);
              dirs.push_back(d);
            }
          } else if (sys.dx() == 1) {
            if (n_dirs > 0) dirs.push_back(Vec::Constant(1, 1.0));
            if (n_dirs > 1) dirs.push_back(Vec::Constant(1, -1.0));
          } else {
            dirs = unit_directions(sys.dx(), n_dirs, c.seed);
          }
        }
        ConeOptions co;
        if (!s_t_schedule.empty()) co.t_schedule = parse_csv(s_t_schedule, "--t-schedule");
        for (double t : co.t_schedule) {
          if (!(t > 0.0)) throw UsageError("--t-schedule: values must be positive");
        }
        co.proj = proj_options(c);
        r.params["p0"] = to_json(p0);
        r.params["x0"] = to_json(x0);
        r.params["directions"] = to_json(dirs);
        Json ts = Json::array();
        for (double t : co.t_schedule) ts.push_back(t);
        r.params["t_schedule"] = ts;
        const ConeReport rep = cone_compare(sys, p0, x0, dirs, co);
        r.result = to_json(rep);
        for (const DirectionResult& d : rep.directions) {
          if (d.agreement == ConeAgreement::disagree) r.witnesses.push_back({{"d", to_json(d.d)}});
        }
      } else if (name == "value") {
        const Vec p = parse_vec(s_p, "--p", sys.dp());
        Expr f;
        if (!s_objective.empty()) {
          f = Expr::parse(s_objective, sys.dp(), sys.dx());
        } else if (l.pf.lower) {
          f = *l.pf.lower;
        } else {
          throw UsageError("value: the problem has no [lower] objective; pass --objective");
        }
        const LowerOptions lo = lower_options(c);
        r.params["p"] = to_json(p);
        r.params["objective"] = f.to_string();
        r.params["value_tol"] = lo.value_tol;
        r.result = to_json(solve_lower(sys, f, p, lo));
        r.warnings.push_back("lower-level solutions are local minimizers from multi-start");
      } else if (name == "phi-lip" || name == "penalty") {
        const BilevelProblem blp = BilevelProblem::from_file(l.pf);
        const Vec p0 = parse_vec(s_p0, name == "penalty" ? "--pstar" : "--p0", sys.dp());
        if (name == "phi-lip") {
          PhiLipOptions po;
          po.delta = pick(delta, 0.2);
          po.n = pick(samples, 32);
          po.factor = factor;
          po.steps = pick(steps, 4);
          po.seed = c.seed;
          po.lower = lower_options(c);
          r.params["p0"] = to_json(p0);
          r.params["delta"] = po.delta;
          r.params["samples"] = po.n;
          r.params["factor"] = po.factor;
          r.params["steps"] = po.steps;
          const PhiLipschitzReport rep = phi_lipschitz_estimate(blp, p0, po);
          r.result = to_json(rep);
          regularity_witness(r, rep.report);
          if (rep.report.samples_used == 0) o.code = kExitNumerical;
        } else {
          const Vec xs = parse_vec(s_xstar, "--xstar", sys.dx());
          PenaltyOptions po;
          if (!s_mu_grid.empty()) po.mu_grid = parse_csv(s_mu_grid, "--mu-grid");
          po.radius = pen_radius;
          po.n = pick(samples, 2000);
          po.seed = c.seed;
          po.lower = lower_options(c);
          r.params["pstar"] = to_json(p0);
          r.params["xstar"] = to_json(xs);
          Json grid = Json::array();
          for (double mu : po.mu_grid.empty() ? default_mu_grid() : po.mu_grid) grid.push_back(mu);
          r.params["mu_grid"] = grid;
          r.params["radius"] = po.radius;
          r.params["samples"] = po.n;
          const PenaltyReport rep = find_penalty_threshold(blp, p0, xs, po);
          r.result = to_json(rep);
          for (const PenaltyRow& row : rep.per_mu) {
            if (row.witness_p) {
              r.witnesses.push_back({{"mu", row.mu}, {"p", to_json(*row.witness_p)}, {"x", to_json(*row.witness_x)}});
            }
          }
          if (rep.samples_used == 0) o.code = kExitNumerical;
        }
      }
    }
  } catch (const NumericalFailure& e) {
    err << "regmod: numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const ParseError& e) {
    err << "regmod: parse error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const Error& e) {
    err << "regmod: " << e.what() << "\n";
    return kExitUsage;
  }

  o.report.wall_time_ms = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - t_begin).count();
  const std::string text = dump(o.report.json());
  if (c.out.empty()) {
    out << text;
  } else {
    std::ofstream f(c.out, std::ios::binary);
    if (!f) {
      err << "regmod: cannot write " << c.out << "\n";
      return kExitUsage;
    }
    f << text;
  }
  return o.code;
}

}  // namespace regmod::cli
