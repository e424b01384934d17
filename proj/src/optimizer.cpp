#include "limopt/optimizer.hpp"

#include <cmath>
#include <stdexcept>

#include "limopt/errors.hpp"

namespace limopt {

const char* optimizer_kind_name(OptimizerKind kind) {
  switch (kind) {
    case OptimizerKind::Sgd:
      return "sgd";
    case OptimizerKind::Sgdm:
      return "sgdm";
    case OptimizerKind::Lim:
      return "lim";
    case OptimizerKind::Adam:
      return "adam";
  }
  throw std::invalid_argument("optimizer_kind_name: bad kind");
}

OptimizerKind optimizer_kind_from_name(const std::string& name) {
  if (name == "sgd") return OptimizerKind::Sgd;
  if (name == "sgdm") return OptimizerKind::Sgdm;
  if (name == "lim") return OptimizerKind::Lim;
  if (name == "adam") return OptimizerKind::Adam;
  throw std::invalid_argument("unknown optimizer '" + name + "' (want sgd|sgdm|lim|adam)");
}

Optimizer::Optimizer(OptimizerKind kind, ParamVector x0, StepSchedule step, DecaySchedule decay,
                     AdamParams adam)
    : kind_(kind),
      x_(std::move(x0)),
      m_(x_.size(), 0.0),
      v2_(kind == OptimizerKind::Adam ? x_.size() : 0, 0.0),
      last_v_(x_.size(), 0.0),
      step_(step),
      decay_(decay),
      adam_(adam) {
  if (x_.empty()) {
    throw std::invalid_argument("Optimizer: empty initial point");
  }
  if (!all_finite(x_)) {
    throw NumericError("Optimizer: non-finite initial point");
  }
  if (!(step_.alpha0 > 0.0)) {
    throw std::invalid_argument("Optimizer: alpha0 must be > 0");
  }
}

Optimizer Optimizer::sgd(ParamVector x0, StepSchedule step) {
  return Optimizer(OptimizerKind::Sgd, std::move(x0), step, DecaySchedule::fixed(0.0), {});
}

Optimizer Optimizer::sgdm(ParamVector x0, StepSchedule step, DecaySchedule decay) {
  if (decay.kind() != DecaySchedule::Kind::Fixed) {
    throw std::invalid_argument("Optimizer::sgdm: decay schedule must be Fixed");
  }
  return Optimizer(OptimizerKind::Sgdm, std::move(x0), step, decay, {});
}

Optimizer Optimizer::lim(ParamVector x0, StepSchedule step, DecaySchedule decay) {
  if (decay.kind() != DecaySchedule::Kind::InverseProportional) {
    throw std::invalid_argument("Optimizer::lim: decay schedule must be InverseProportional");
  }
  return Optimizer(OptimizerKind::Lim, std::move(x0), step, decay, {});
}

Optimizer Optimizer::adam(ParamVector x0, StepSchedule step, AdamParams params) {
  if (!(params.beta1 >= 0.0 && params.beta1 < 1.0) ||
      !(params.beta2 >= 0.0 && params.beta2 < 1.0) || !(params.epsilon > 0.0)) {
    throw std::invalid_argument("Optimizer::adam: need beta1, beta2 in [0,1) and epsilon > 0");
  }
  return Optimizer(OptimizerKind::Adam, std::move(x0), step, DecaySchedule::fixed(0.0), params);
}

const ParamVector& Optimizer::last_displacement() const {
  if (k_ == 0) {
    throw std::invalid_argument("Optimizer::last_displacement: no step taken yet");
  }
  return last_v_;
}

void Optimizer::step(const ParamVector& g) {
  check_same_length(g, x_, "Optimizer::step");
  if (!all_finite(g)) {
    throw NumericError("Optimizer::step: non-finite gradient");
  }
  ++k_;
  const double alpha_k = step_size(step_, k_);
  double gamma_k = 0.0;
  switch (kind_) {
    case OptimizerKind::Sgd:
      for (std::size_t i = 0; i < x_.size(); ++i) {
        last_v_[i] = -alpha_k * g[i];
        x_[i] += last_v_[i];
      }
      break;
    case OptimizerKind::Sgdm:
    case OptimizerKind::Lim:
      gamma_k = decay_factor(decay_, k_);
      for (std::size_t i = 0; i < x_.size(); ++i) {
        m_[i] = gamma_k * m_[i] - alpha_k * g[i];
        last_v_[i] = m_[i];
        x_[i] += m_[i];
      }
      break;
    case OptimizerKind::Adam: {
      const double c1 = 1.0 - std::pow(adam_.beta1, static_cast<double>(k_));
      const double c2 = 1.0 - std::pow(adam_.beta2, static_cast<double>(k_));
      for (std::size_t i = 0; i < x_.size(); ++i) {
        m_[i] = adam_.beta1 * m_[i] + (1.0 - adam_.beta1) * g[i];
        v2_[i] = adam_.beta2 * v2_[i] + (1.0 - adam_.beta2) * g[i] * g[i];
        const double mhat = m_[i] / c1;
        const double vhat = v2_[i] / c2;
        last_v_[i] = -alpha_k * mhat / (std::sqrt(vhat) + adam_.epsilon);
        x_[i] += last_v_[i];
      }
      break;
    }
  }
  if (!all_finite(x_)) {
    throw NumericError("Optimizer::step: iterate became non-finite at k=" + std::to_string(k_));
  }
  if (trace_enabled_) {
    trace_.push_back(TraceEntry{k_, alpha_k, gamma_k, g, last_v_});
  }
}

std::vector<double> momentum_weights(const DecaySchedule& d, const StepSchedule& s, long k) {
  if (k < 1) {
    throw std::invalid_argument("momentum_weights: k must be >= 1");
  }
  std::vector<double> w(static_cast<std::size_t>(k));
  if (d.kind() == DecaySchedule::Kind::Fixed) {
    const double gamma = d.gamma();
    for (long j = 1; j <= k; ++j) {
      w[j - 1] = step_size(s, j) * std::pow(gamma, static_cast<double>(k - j));
    }
  } else {
    const double beta = d.beta();
    for (long j = 1; j <= k; ++j) {
      const double ratio = static_cast<double>(j + 1) / static_cast<double>(k + 1);
      w[j - 1] = step_size(s, j) * std::pow(ratio, beta);
    }
  }
  return w;
}

ParamVector closed_form_direction(const std::vector<double>& weights,
                                  const std::vector<ParamVector>& grads) {
  if (weights.size() != grads.size()) {
    throw std::invalid_argument("closed_form_direction: " + std::to_string(weights.size()) +
                                " weights vs " + std::to_string(grads.size()) + " gradients");
  }
  if (grads.empty()) {
    throw std::invalid_argument("closed_form_direction: empty history");
  }
  ParamVector v(grads.front().size(), 0.0);
  for (std::size_t j = 0; j < grads.size(); ++j) {
    check_same_length(grads[j], v, "closed_form_direction");
    for (std::size_t i = 0; i < v.size(); ++i) {
      v[i] -= weights[j] * grads[j][i];
    }
  }
  return v;
}

}  // namespace limopt
