#pragma once

#include <optional>
#include <vector>

#include "limopt/optimizer.hpp"
#include "limopt/problems.hpp"
#include "limopt/rng.hpp"
#include "limopt/schedules.hpp"
#include "limopt/vec.hpp"

namespace limopt {

// Monte Carlo estimate of tr Cov[v_k] across replicas, next to whatever
// analytic values apply to the problem at hand. `exact` and the bounds are
// only filled for the pure-noise oracle, where the sums are exact.
struct VarianceReport {
  long k = 0;
  double estimate = 0.0;
  double standard_error = 0.0;
  long replicas = 0;
  std::optional<double> exact;
  std::optional<double> bound_thm2;
  std::optional<double> bound_thm3;
};

// True when `exact` is absent or |estimate - exact| <= 4 * standard_error.
bool within_mc_tolerance(const VarianceReport& r);

// Fixed-decay variance bound:
//   (1/(1-gamma^2)) * alpha0^2 * (M + 2*MV*gradnorm_sq + 2*MV*L^2*D^2)
double bound_thm2(double alpha0, double gamma, double M, double MV, double gradnorm_sq, double L,
                  double D);

// Inverse-proportional-decay variance bound:
//   (alpha0^2/(2*beta)) * (M + 2*MV*gradnorm_sq + 2*MV*L^2*D^2)
double bound_thm3(double alpha0, double beta, double M, double MV, double gradnorm_sq, double L,
                  double D);

// tr Cov[v_k] = sum_j w_j^2 * M for i.i.d. coordinate noise of total variance
// M and the displacement weights of momentum_weights(). Exact for the
// pure-noise problem.
double exact_noise_variance(const DecaySchedule& d, const StepSchedule& s, long k, double M);

// Same sum with the weight variant w_j = (j/k)^beta * alpha_j. The telescoped
// recursion gives ((j+1)/(k+1))^beta instead; both are reported so the
// off-by-one between the two published forms stays visible.
double exact_noise_variance_paper_weights(double beta, const StepSchedule& s, long k, double M);

struct GeometricSumIdentity {
  double lhs = 0.0;  // sum_{j=1}^{k} gamma^(2(k-j)), summed directly
  double rhs = 0.0;  // (1 - gamma^(2k)) / (1 - gamma^2)
};

GeometricSumIdentity geometric_sum_identity(double gamma, long k);

// Replica setup for monte_carlo_direction_variance. Only the momentum
// optimizers are meaningful targets (v_k of the bounds is their displacement).
struct McConfig {
  OptimizerKind kind = OptimizerKind::Lim;
  StepSchedule step;
  DecaySchedule decay = DecaySchedule::inverse_proportional(2.0);
  ParamVector x0;
  long batch = 1;
};

// Runs `replicas` independent trajectories from the same x0, one RngStream
// per replica derived from (master_seed, replica index), and measures the
// spread of the step-k displacement:
//   estimate = (1/(R-1)) * sum_r |v_k_r - mean(v_k)|^2
// standard_error is the Monte Carlo error of that estimate. Aggregation runs
// in replica-index order so results do not depend on scheduling.
VarianceReport monte_carlo_direction_variance(const Problem& p, const McConfig& cfg, long k,
                                              long replicas, uint64_t master_seed);

struct TrajectoryPoint {
  long k = 0;
  ParamVector x;
  double grad_norm = 0.0;  // |full gradient|
  double loss = 0.0;
  double v_norm = 0.0;  // |displacement| of the step that produced x; 0 at k=0
};
using TrajectoryRecord = std::vector<TrajectoryPoint>;

void validate_trajectory(const TrajectoryRecord& t);

// Runs `steps` optimizer iterations on p, recording every iterate (including
// the starting point, at k = 0) with full-gradient norms and losses.
TrajectoryRecord record_trajectory(const Problem& p, Optimizer& opt, RngStream& rng, long steps,
                                   long batch);

struct Theorem1Report {
  double D = 0.0;  // max pairwise iterate distance
  // max over ordered pairs (j,k) of |grad(x_j)|^2 - 2|grad(x_k)|^2 - 2 L^2 D^2
  double max_violation = 0.0;
  long pairs = 0;
};

// Checks |grad F(x_j)|^2 <= 2 |grad F(x_k)|^2 + 2 L^2 D^2 over all ordered
// pairs of the recorded trajectory.
Theorem1Report theorem1_check(const TrajectoryRecord& t, double L);

struct AssumptionEstimate {
  double M_hat = 0.0;
  double MV_hat = 0.0;
  long sample_points = 0;
  long draws_per_point = 0;
  double rms_residual = 0.0;
  // Set when every |grad F| was ~0 and the fit fell back to intercept-only.
  bool intercept_only = false;
};

// Least-squares fit of empirical tr Cov[g(x)] against 1 and |grad F(x)|^2
// over the given points, estimating the noise-model constants (M, M_V).
// Requires distinct gradient norms unless they are all zero, in which case an
// intercept-only fit is used.
AssumptionEstimate estimate_assumption_constants(const Problem& p,
                                                 const std::vector<ParamVector>& points,
                                                 long draws, RngStream& rng);

// exact_noise_variance / bound_thm3 at M = 1, MV = 0. Greater than 1 at small
// k (the bound's integral step is asymptotic, not uniform) and decreasing
// toward 1 as k grows.
double thm3_asymptotic_ratio(double beta, double alpha0, long k);

}  // namespace limopt
