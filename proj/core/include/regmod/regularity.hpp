#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "regmod/projection.hpp"
#include "regmod/system.hpp"

namespace regmod {

struct ShrinkSchedule {
  double r0 = 0.1;
  double factor = 0.5;
  int steps = 8;
  int samples_per_step = 32;

  std::vector<double> radii() const;
  void validate() const;  // throws Error
};

inline constexpr double kDivergenceFactor = 1.8;
inline constexpr int kDivergenceRun = 3;

enum class ReportKind { r_modulus, aubin, lower_lipschitz, lower_level_value };

const char* to_string(ReportKind k);

/// One ratio numerator / denominator. Meaning of the points by kind:
///   r_modulus:          (p, x) sampled, ratio dist(x, F(p)) / residual(p, x)
///   lower_lipschitz:    p sampled, x = x0, p_from = p0, ratio dist(x0, F(p)) / |p - p0|
///   aubin:              x in F(p_from) near x0, ratio dist(x, F(p)) / |p - p_from|
///   lower_level_value:  ratio |phi(p) - phi(p_from)| / |p - p_from|
struct RatioSample {
  int step = 0;
  bool stencil = false;
  Vec p;
  Vec x;
  Vec p_from;
  double numerator = 0.0;
  double denominator = 0.0;
  double ratio = 0.0;
};

struct TrendPoint {
  double radius = 0.0;
  std::optional<double> sup_ratio;  // none when the step had no usable sample
  int samples = 0;
};

struct RegularityParams {
  double delta = 0.0;
  double eps = 0.0;
  ShrinkSchedule schedule;
  std::uint64_t seed = 0;
};

struct RegularityReport {
  ReportKind kind = ReportKind::r_modulus;
  std::optional<double> estimate;
  std::optional<RatioSample> witness;
  std::vector<TrendPoint> trend;
  bool diverging = false;
  int samples_used = 0;
  int skipped_infeasible_p = 0;
  int skipped_degenerate = 0;  // zero residual or coincident parameters
  std::vector<RatioSample> samples;
  RegularityParams params;
  std::vector<std::string> notes;
};

/// True when sup ratios grow by at least `factor` over `run` consecutive
/// shrink steps. Steps without samples break a run.
bool diverging_trend(const std::vector<TrendPoint>& trend, double factor = kDivergenceFactor,
                     int run = kDivergenceRun);

// Fills estimate, witness, trend, samples_used and diverging from samples.
void finalize_report(RegularityReport& rep, const std::vector<double>& radii);

struct ScheduleOptions {
  ShrinkSchedule schedule;
  std::uint64_t seed = 0;
  ProjectionOptions proj;
};

/// Error-bound ratios dist(x, F(p)) / residual(p, x) over (p, x) near
/// (p0, x0). Per step: the axis stencil {p0, p0 +- r e_i} x {x0 +- r e_l}
/// followed by a fixed seeded ball pattern scaled by r.
RegularityReport estimate_r_modulus(const ParametricSystem& sys, const Vec& p0, const Vec& x0,
                                    const ScheduleOptions& opts = {});

/// The same ratio on an explicit list of points.
RegularityReport r_modulus_on_points(const ParametricSystem& sys, const std::vector<Vec>& ps,
                                     const std::vector<Vec>& xs, const ProjectionOptions& proj = {});

struct MultiplierSample {
  int step = 0;
  bool stencil = false;
  Vec p;
  Vec v;
  Vec x;  // projection of v onto F(p)
  double norm = 0.0;  // sum |lambda_i| of the min-norm normalized multiplier
  double stationarity_residual = 0.0;
};

struct MultiplierBoundReport {
  std::vector<TrendPoint> trend;  // sup norm per step
  bool bounded = true;
  std::optional<MultiplierSample> witness;
  std::vector<MultiplierSample> samples;
  int samples_used = 0;
  int skipped_infeasible_p = 0;
  int skipped_feasible_v = 0;
  int empty_multiplier_sets = 0;
  RegularityParams params;
  std::vector<std::string> notes;
};

/// Multiplier norms of projections of v near x0 onto F(p), p near p0.
MultiplierBoundReport check_multiplier_bound(const ParametricSystem& sys, const Vec& p0, const Vec& x0,
                                             const ScheduleOptions& opts = {});

struct AubinOptions {
  double delta = 0.1;
  double eps = 0.1;
  int n_pairs = 32;
  double factor = 0.5;
  int steps = 8;
  std::uint64_t seed = 0;
  ProjectionOptions proj;
};

/// dist(x~, F(p2)) / |p1 - p2| with p1, p2 in p0 + delta_k B and
/// x~ in F(p1) near x0. The parameter set per step is that of
/// estimate_lower_lipschitz with the same delta, n and seed, and the pairs
/// (p0, q) with x~ = x0 are always included.
RegularityReport estimate_aubin_modulus(const ParametricSystem& sys, const Vec& p0, const Vec& x0,
                                        const AubinOptions& opts = {});

struct LolipOptions {
  double delta = 0.1;
  int n = 32;
  double factor = 0.5;
  int steps = 8;
  std::uint64_t seed = 0;
  ProjectionOptions proj;
};

/// dist(x0, F(p)) / |p - p0| over p0 +- delta_k e_i and a seeded ball pattern.
RegularityReport estimate_lower_lipschitz(const ParametricSystem& sys, const Vec& p0, const Vec& x0,
                                          const LolipOptions& opts = {});

// Parameters probed at one step of radius r: stencil first, then the pattern.
std::vector<Vec> parameter_probes(const Vec& p0, double r, int n, std::uint64_t seed);

struct LscOptions {
  double delta = 0.2;
  double eps = 0.5;
  int n = 64;
  std::uint64_t seed = 0;
  ProjectionOptions proj;
};

struct LscReport {
  bool holds_on_samples = true;
  std::optional<Vec> witness;
  std::optional<double> witness_distance;
  int samples_used = 0;
  int skipped_infeasible_p = 0;
  LscOptions params;
};

/// dist(x0, F(p)) < eps on every probed p with |p - p0| <= delta. Probes
/// p0 +- (delta/2) e_i first.
LscReport check_lsc(const ParametricSystem& sys, const Vec& p0, const Vec& x0, const LscOptions& opts = {});

struct ConeOptions {
  std::vector<double> t_schedule{1e-1, 1e-2, 1e-3, 1e-4, 1e-5};
  double lin_tol = 1e-9;
  double tangent_tol = 1e-3;
  std::optional<double> eta;
  ProjectionOptions proj;
};

enum class ConeAgreement { agree, disagree, inconclusive };

const char* to_string(ConeAgreement a);

struct DirectionResult {
  Vec d;
  bool in_gamma = false;
  std::vector<double> tangency_ratio_trend;  // dist(x + t d, F(p)) / t
  std::optional<bool> tangent;               // none when a projection failed
  ConeAgreement agreement = ConeAgreement::inconclusive;
};

struct ConeReport {
  std::vector<DirectionResult> directions;
  ActiveSet active;
  std::optional<bool> rcrcq_verified;  // none when the subset cap was hit
  bool violation = false;              // disagreement although RCRCQ held on samples
  ConeOptions params;
};

/// Linearized cone versus sampled tangency, direction by direction.
ConeReport cone_compare(const ParametricSystem& sys, const Vec& p, const Vec& x, const std::vector<Vec>& directions,
                        const ConeOptions& opts = {});

/// Recomputes a sample's ratio from its points.
double replay_ratio(const ParametricSystem& sys, ReportKind kind, const RatioSample& s,
                    const ProjectionOptions& proj = {});

}  // namespace regmod
