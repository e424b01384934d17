#pragma once

#include <string>
#include <vector>

#include "limopt/schedules.hpp"
#include "limopt/vec.hpp"

namespace limopt {

enum class OptimizerKind { Sgd, Sgdm, Lim, Adam };

const char* optimizer_kind_name(OptimizerKind kind);
OptimizerKind optimizer_kind_from_name(const std::string& name);

struct AdamParams {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// One completed step: the gradient consumed and the displacement applied.
struct TraceEntry {
  long k = 0;
  double alpha_k = 0.0;
  double gamma_k = 0.0;  // decay factor applied this step; 0 when none
  ParamVector g;
  ParamVector v;  // displacement x_k - x_{k-1} as applied
};
using DirectionTrace = std::vector<TraceEntry>;

// Single-owner optimizer state. step() advances the iteration counter before
// anything else, so the first step evaluates both the stepsize and the decay
// factor at k = 1. Momentum starts at zero.
//
//   sgd:   x <- x - alpha_k * g
//   sgdm:  m <- gamma * m - alpha_k * g;     x <- x + m   (fixed gamma)
//   lim:   m <- gamma(k) * m - alpha_k * g;  x <- x + m   (inverse-proportional)
//   adam:  bias-corrected first/second moments, stepped by alpha_k
class Optimizer {
 public:
  static Optimizer sgd(ParamVector x0, StepSchedule step);
  static Optimizer sgdm(ParamVector x0, StepSchedule step, DecaySchedule decay);
  static Optimizer lim(ParamVector x0, StepSchedule step, DecaySchedule decay);
  static Optimizer adam(ParamVector x0, StepSchedule step, AdamParams params = {});

  void step(const ParamVector& g);

  OptimizerKind kind() const { return kind_; }
  long iterations() const { return k_; }
  const ParamVector& x() const { return x_; }
  const ParamVector& momentum() const { return m_; }
  // Displacement applied by the most recent step.
  const ParamVector& last_displacement() const;

  void set_trace_enabled(bool on) { trace_enabled_ = on; }
  const DirectionTrace& trace() const { return trace_; }

 private:
  Optimizer(OptimizerKind kind, ParamVector x0, StepSchedule step, DecaySchedule decay,
            AdamParams adam);

  OptimizerKind kind_;
  long k_ = 0;
  ParamVector x_;
  ParamVector m_;
  ParamVector v2_;  // second-moment buffer, adam only
  ParamVector last_v_;
  StepSchedule step_;
  DecaySchedule decay_;
  AdamParams adam_;
  bool trace_enabled_ = false;
  DirectionTrace trace_;
};

// Coefficients w_1..w_k such that the step-k displacement is -sum_j w_j g_j
// under the recursions above:
//   fixed gamma:          w_j = alpha_j * gamma^(k-j)
//   inverse-proportional: w_j = alpha_j * ((j+1)/(k+1))^beta
// The second form is the telescoped product of gamma(j+1)..gamma(k).
std::vector<double> momentum_weights(const DecaySchedule& d, const StepSchedule& s, long k);

// -sum_j weights[j] * grads[j].
ParamVector closed_form_direction(const std::vector<double>& weights,
                                  const std::vector<ParamVector>& grads);

}  // namespace limopt
