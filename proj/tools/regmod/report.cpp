#include "regmod/report.hpp"

#include <openssl/evp.h>

#include <array>
#include <cstdio>

#include "regmod/problem_file.hpp"

namespace regmod::cli {

std::string sha256_hex(std::string_view data) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md.data(), &len, EVP_sha256(), nullptr) != 1) {
    throw Error("sha256: digest failed");
  }
  std::string out;
  char buf[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(buf, sizeof buf, "%02x", md[i]);
    out += buf;
  }
  return out;
}

std::string problem_hash(std::string_view problem_text) { return sha256_hex(normalize_problem_text(problem_text)); }

Json to_json(const Vec& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

Json to_json(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

Json to_json(const std::vector<Vec>& vs) {
  Json a = Json::array();
  for (const Vec& v : vs) a.push_back(to_json(v));
  return a;
}

namespace {

Json indices(const IndexSet& s) {
  Json a = Json::array();
  for (int i : s) a.push_back(i);
  return a;
}

Json trend_json(const std::vector<TrendPoint>& trend) {
  Json a = Json::array();
  for (const TrendPoint& t : trend) a.push_back({{"radius", t.radius}, {"sup_ratio", to_json(t.sup_ratio)}, {"samples", t.samples}});
  return a;
}

Json notes_json(const std::vector<std::string>& notes) {
  Json a = Json::array();
  for (const auto& n : notes) a.push_back(n);
  return a;
}

}  // namespace

Json to_json(const ProjectionResult& r) {
  Json j;
  j["status"] = to_string(r.status);
  j["x_star"] = to_json(r.x_star);
  j["distance"] = r.distance;
  j["kkt_residual"] = r.kkt_residual;
  j["feas_residual"] = r.feas_residual;
  j["multipliers_hat"] = to_json(r.multipliers_hat);
  j["multipliers"] = r.multipliers ? to_json(*r.multipliers) : Json(nullptr);
  j["active"] = {{"indices", indices(r.active.indices)}, {"eta", r.active.eta}};
  j["optimality"] = "local";
  return j;
}

Json to_json(const RcrcqReport& r) {
  Json j;
  j["verdict"] = to_string(r.verdict);
  j["base_point"] = {{"p0", to_json(r.p0)}, {"x0", to_json(r.x0)}};
  j["active_set_at_base"] = {{"indices", indices(r.active_at_base.indices)}, {"eta", r.active_at_base.eta}};
  Json subs = Json::array();
  for (const SubsetRank& s : r.per_subset) {
    Json e;
    e["K"] = indices(s.K);
    e["base_rank"] = s.base_rank;
    e["sampled_rank_min"] = s.sampled_rank_min;
    e["sampled_rank_max"] = s.sampled_rank_max;
    e["witness"] = s.witness ? Json{{"p", to_json(s.witness->p)}, {"x", to_json(s.witness->x)}} : Json(nullptr);
    subs.push_back(e);
  }
  j["per_subset"] = subs;
  j["sampling"] = {{"radius", r.sampling.radius},
                   {"count", r.sampling.n_samples},
                   {"seed", r.sampling.seed},
                   {"rank_tol", r.sampling.rank_tol},
                   {"eta", to_json(r.sampling.eta)},
                   {"samples_evaluated", r.samples_evaluated},
                   {"samples_skipped", r.samples_skipped}};
  return j;
}

Json to_json(const ShrinkSchedule& s) {
  return {{"r0", s.r0}, {"factor", s.factor}, {"steps", s.steps}, {"samples_per_step", s.samples_per_step}};
}

Json to_json(const RatioSample& s) {
  Json j;
  j["step"] = s.step;
  j["stencil"] = s.stencil;
  j["p"] = to_json(s.p);
  j["x"] = to_json(s.x);
  j["p_from"] = to_json(s.p_from);
  j["numerator"] = s.numerator;
  j["denominator"] = s.denominator;
  j["ratio"] = s.ratio;
  return j;
}

Json to_json(const RegularityReport& r) {
  Json j;
  j["kind"] = to_string(r.kind);
  j["estimate"] = to_json(r.estimate);
  j["diverging"] = r.diverging;
  j["witness"] = r.witness ? to_json(*r.witness) : Json(nullptr);
  j["trend"] = trend_json(r.trend);
  j["samples_used"] = r.samples_used;
  j["skipped_infeasible_p"] = r.skipped_infeasible_p;
  j["skipped_degenerate"] = r.skipped_degenerate;
  j["params"] = {{"delta", r.params.delta}, {"eps", r.params.eps}, {"schedule", to_json(r.params.schedule)}, {"seed", r.params.seed}};
  Json stencil = Json::array();
  for (const RatioSample& s : r.samples) {
    if (s.stencil) stencil.push_back(to_json(s));
  }
  j["stencil_samples"] = stencil;
  j["notes"] = notes_json(r.notes);
  return j;
}

Json to_json(const MultiplierSample& s) {
  return {{"step", s.step},         {"stencil", s.stencil}, {"p", to_json(s.p)},
          {"v", to_json(s.v)},      {"x", to_json(s.x)},    {"norm", s.norm},
          {"stationarity_residual", s.stationarity_residual}};
}

Json to_json(const MultiplierBoundReport& r) {
  Json j;
  j["bounded"] = r.bounded;
  j["trend"] = trend_json(r.trend);
  j["witness"] = r.witness ? to_json(*r.witness) : Json(nullptr);
  j["samples_used"] = r.samples_used;
  j["skipped_infeasible_p"] = r.skipped_infeasible_p;
  j["skipped_feasible_v"] = r.skipped_feasible_v;
  j["empty_multiplier_sets"] = r.empty_multiplier_sets;
  Json stencil = Json::array();
  for (const MultiplierSample& s : r.samples) {
    if (s.stencil) stencil.push_back(to_json(s));
  }
  j["stencil_samples"] = stencil;
  j["notes"] = notes_json(r.notes);
  return j;
}

Json to_json(const LscReport& r) {
  Json j;
  j["holds_on_samples"] = r.holds_on_samples;
  j["witness"] = r.witness ? Json{{"p", to_json(*r.witness)}, {"distance", *r.witness_distance}} : Json(nullptr);
  j["samples_used"] = r.samples_used;
  j["skipped_infeasible_p"] = r.skipped_infeasible_p;
  return j;
}

Json to_json(const ConeReport& r) {
  Json j;
  j["active"] = {{"indices", indices(r.active.indices)}, {"eta", r.active.eta}};
  j["rcrcq_verified_on_samples"] = r.rcrcq_verified ? Json(*r.rcrcq_verified) : Json(nullptr);
  j["violation"] = r.violation;
  Json dirs = Json::array();
  int agree = 0;
  for (const DirectionResult& d : r.directions) {
    Json t = Json::array();
    for (double v : d.tangency_ratio_trend) t.push_back(v);
    dirs.push_back({{"d", to_json(d.d)},
                    {"in_gamma", d.in_gamma},
                    {"tangent", d.tangent ? Json(*d.tangent) : Json(nullptr)},
                    {"tangency_ratio_trend", t},
                    {"agreement", to_string(d.agreement)}});
    agree += d.agreement == ConeAgreement::agree ? 1 : 0;
  }
  j["agree_count"] = agree;
  j["directions"] = dirs;
  return j;
}

Json to_json(const LowerSolution& r) {
  Json j;
  j["status"] = to_string(r.status);
  j["phi"] = r.converged() ? Json(r.phi) : Json(nullptr);
  j["x_solutions"] = to_json(r.x_solutions);
  j["optimality"] = "local";
  return j;
}

Json to_json(const PhiLipschitzReport& r) {
  Json j = to_json(r.report);
  j["phi_at_p0"] = r.phi_at_p0;
  j["x_at_p0"] = to_json(r.x_at_p0);
  j["predicted"] = {{"l0", r.l0},
                    {"m_hat", to_json(r.m_hat)},
                    {"max_li", r.max_li},
                    {"bound", to_json(r.predicted_bound)}};
  j["skipped_outside_P"] = r.skipped_outside_P;
  return j;
}

Json to_json(const PenaltyReport& r) {
  Json j;
  j["mu0_empirical"] = to_json(r.mu0_empirical);
  j["mu0_formula"] = to_json(r.mu0_formula);
  j["l0"] = r.l0;
  j["m_hat"] = to_json(r.m_hat);
  j["monotone"] = r.monotone;
  j["phi_star"] = r.phi_star;
  Json rows = Json::array();
  for (const PenaltyRow& row : r.per_mu) {
    rows.push_back({{"mu", row.mu},
                    {"passes", row.passes},
                    {"min_margin", row.min_margin},
                    {"witness", row.witness_p ? Json{{"p", to_json(*row.witness_p)}, {"x", to_json(*row.witness_x)}}
                                              : Json(nullptr)}});
  }
  j["per_mu"] = rows;
  j["samples_used"] = r.samples_used;
  j["skipped_lower_failures"] = r.skipped_lower_failures;
  j["skipped_outside_D"] = r.skipped_outside_D;
  j["notes"] = notes_json(r.notes);
  return j;
}

Json Report::json() const {
  Json j;
  j["schema_version"] = kSchemaVersion;
  j["command"] = command;
  j["problem_hash"] = problem_hash ? Json(*problem_hash) : Json(nullptr);
  j["params"] = params;
  j["result"] = result;
  j["witnesses"] = witnesses;
  Json w = Json::array();
  for (const auto& s : warnings) w.push_back(s);
  j["warnings"] = w;
  j["wall_time_ms"] = wall_time_ms;
  return j;
}

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

}  // namespace regmod::cli
