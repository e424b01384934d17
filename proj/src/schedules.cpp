#include "limopt/schedules.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace limopt {

double step_size(const StepSchedule& s, long k) {
  if (!(s.alpha0 > 0.0)) {
    throw std::invalid_argument("step_size: alpha0 must be > 0, got " +
                                std::to_string(s.alpha0));
  }
  if (k < 1) {
    throw std::invalid_argument("step_size: k must be >= 1, got " + std::to_string(k));
  }
  return s.alpha0 / std::sqrt(static_cast<double>(k));
}

DecaySchedule DecaySchedule::fixed(double gamma) {
  if (!(gamma >= 0.0 && gamma < 1.0)) {
    throw std::invalid_argument("DecaySchedule::fixed: gamma must be in [0, 1), got " +
                                std::to_string(gamma));
  }
  return DecaySchedule(Kind::Fixed, gamma);
}

DecaySchedule DecaySchedule::inverse_proportional(double beta) {
  if (!(beta > 0.0)) {
    throw std::invalid_argument(
        "DecaySchedule::inverse_proportional: beta must be > 0, got " + std::to_string(beta));
  }
  return DecaySchedule(Kind::InverseProportional, beta);
}

double DecaySchedule::gamma() const {
  if (kind_ != Kind::Fixed) {
    throw std::invalid_argument("DecaySchedule::gamma: schedule is not Fixed");
  }
  return value_;
}

double DecaySchedule::beta() const {
  if (kind_ != Kind::InverseProportional) {
    throw std::invalid_argument("DecaySchedule::beta: schedule is not InverseProportional");
  }
  return value_;
}

std::optional<std::string> DecaySchedule::domain_warning() const {
  if (kind_ == Kind::InverseProportional && value_ <= 1.0) {
    std::ostringstream os;
    os << "beta = " << value_
       << " is outside (1, inf); the inverse-proportional decay analysis assumes beta > 1";
    return os.str();
  }
  return std::nullopt;
}

double decay_factor(const DecaySchedule& d, long k) {
  if (k < 1) {
    throw std::invalid_argument("decay_factor: k must be >= 1, got " + std::to_string(k));
  }
  if (d.kind() == DecaySchedule::Kind::Fixed) {
    return d.gamma();
  }
  const double x = static_cast<double>(k) / static_cast<double>(k + 1);
  return std::pow(x, d.beta());
}

RobbinsMonroReport check_robbins_monro(const StepSchedule& s, long K) {
  if (K < 2) {
    throw std::invalid_argument("check_robbins_monro: K must be >= 2, got " + std::to_string(K));
  }
  RobbinsMonroReport r;
  r.K = K;
  r.alpha0 = s.alpha0;
  for (long k = 1; k <= K; ++k) {
    const double a = step_size(s, k);
    r.sum_alpha += a;
    r.sum_alpha_sq += a * a;
  }
  r.sum_alpha_floor = 2.0 * s.alpha0 * (std::sqrt(static_cast<double>(K + 1)) - 1.0);
  std::ostringstream os;
  os << "sum_{k<=K} alpha_k = " << r.sum_alpha << " grows without bound (~ 2*alpha0*sqrt(K)); "
     << "sum_{k<=K} alpha_k^2 = " << r.sum_alpha_sq
     << " grows like alpha0^2*ln(K), so this schedule is not square-summable";
  r.note = os.str();
  return r;
}

}  // namespace limopt
