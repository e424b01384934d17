#pragma once

#include <optional>
#include <string>

namespace limopt {

// Stepsize rule alpha_k = alpha0 / sqrt(k), k >= 1. Strictly decreasing.
struct StepSchedule {
  double alpha0 = 0.1;
};

double step_size(const StepSchedule& s, long k);

// Momentum decay factor: either a constant gamma, or the inverse-proportional
// rule gamma(k) = (k/(k+1))^beta, which lies in (0,1) and rises toward 1 as k
// grows. Larger beta decays old gradients faster.
class DecaySchedule {
 public:
  enum class Kind { Fixed, InverseProportional };

  // gamma in [0, 1); gamma == 0 degenerates momentum away entirely.
  static DecaySchedule fixed(double gamma);
  // beta > 0. Values outside (1, inf) are accepted but flagged by
  // domain_warning(), since the rule was analyzed for beta > 1.
  static DecaySchedule inverse_proportional(double beta);

  Kind kind() const { return kind_; }
  double gamma() const;  // Fixed only
  double beta() const;   // InverseProportional only

  std::optional<std::string> domain_warning() const;

 private:
  DecaySchedule(Kind kind, double value) : kind_(kind), value_(value) {}

  Kind kind_;
  double value_;
};

double decay_factor(const DecaySchedule& d, long k);

// Partial sums of the classical stepsize conditions, sum(alpha_k) and
// sum(alpha_k^2), for k <= K. For alpha_k = alpha0/sqrt(k) the first grows
// without bound (~ 2*alpha0*sqrt(K)) while the second grows like
// alpha0^2 * ln(K) — so the square-summability clause is NOT met by this
// schedule. The report states both facts; it carries no pass/fail verdict.
struct RobbinsMonroReport {
  long K = 0;
  double alpha0 = 0.0;
  double sum_alpha = 0.0;
  double sum_alpha_sq = 0.0;
  // Integral comparison: sum_alpha >= 2*alpha0*(sqrt(K+1) - 1).
  double sum_alpha_floor = 0.0;
  std::string note;
};

RobbinsMonroReport check_robbins_monro(const StepSchedule& s, long K);

}  // namespace limopt
