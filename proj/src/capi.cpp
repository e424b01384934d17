#include "limopt.h"

#include <algorithm>
#include <cstring>
#include <exception>
#include <iostream>
#include <new>
#include <string>
#include <vector>

#include "limopt/errors.hpp"
#include "limopt/experiment.hpp"
#include "limopt/optimizer.hpp"
#include "limopt/schedules.hpp"
#include "limopt/variance.hpp"

using namespace limopt;

namespace {

thread_local std::string g_last_error;

limopt_status fail(limopt_status s, const char* what) {
  g_last_error = what;
  return s;
}

// Exceptions crossing the C boundary become status codes; the message lands
// in the thread-local error slot.
template <typename Fn>
limopt_status guarded(Fn&& fn) {
  try {
    fn();
    return LIMOPT_OK;
  } catch (const std::invalid_argument& e) {
    return fail(LIMOPT_ERR_USAGE, e.what());
  } catch (const IoError& e) {
    return fail(LIMOPT_ERR_IO, e.what());
  } catch (const FormatError& e) {
    return fail(LIMOPT_ERR_FORMAT, e.what());
  } catch (const NumericError& e) {
    return fail(LIMOPT_ERR_NUMERIC, e.what());
  } catch (const std::bad_alloc&) {
    return fail(LIMOPT_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(LIMOPT_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(LIMOPT_ERR_INTERNAL, "unknown error");
  }
}

void copy_out(const std::string& s, char* out, size_t cap) {
  if (!out || cap == 0) return;
  const size_t n = std::min(s.size(), cap - 1);
  std::memcpy(out, s.data(), n);
  out[n] = '\0';
}

ExperimentConfig to_cpp(const limopt_run_config& c) {
  ExperimentConfig cfg;
  if (!c.problem) throw std::invalid_argument("run config: problem must be set");
  if (!c.optimizer) throw std::invalid_argument("run config: optimizer must be set");
  cfg.problem = problem_from_name(c.problem);
  cfg.optimizer = optimizer_kind_from_name(c.optimizer);
  cfg.alpha0 = c.alpha0;
  cfg.gamma = c.gamma;
  cfg.beta = c.beta;
  cfg.batch = c.batch;
  cfg.iters = c.iters;
  cfg.seed = c.seed;
  if (c.data) cfg.data_path = c.data;
  cfg.hidden_width = c.hidden_width;
  cfg.out_dir = c.out_dir ? c.out_dir : ".";
  return cfg;
}

}  // namespace

extern "C" {

const char* limopt_version(void) { return "1.0.0"; }

const char* limopt_status_name(limopt_status status) {
  switch (status) {
    case LIMOPT_OK: return "ok";
    case LIMOPT_ERR_USAGE: return "usage error";
    case LIMOPT_ERR_IO: return "io error";
    case LIMOPT_ERR_FORMAT: return "format error";
    case LIMOPT_ERR_NUMERIC: return "numeric error";
    case LIMOPT_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

const char* limopt_last_error(void) { return g_last_error.c_str(); }

struct limopt_optimizer {
  Optimizer impl;
};

limopt_status limopt_optimizer_new(const char* kind, const double* x0, size_t dim, double alpha0,
                                   double gamma, double beta, limopt_optimizer** out) {
  return guarded([&] {
    if (!kind || !x0 || !out) throw std::invalid_argument("optimizer_new: null argument");
    if (dim == 0) throw std::invalid_argument("optimizer_new: dim must be > 0");
    ParamVector start(x0, x0 + dim);
    const StepSchedule step{alpha0};
    const OptimizerKind k = optimizer_kind_from_name(kind);
    switch (k) {
      case OptimizerKind::Sgd:
        *out = new limopt_optimizer{Optimizer::sgd(std::move(start), step)};
        break;
      case OptimizerKind::Sgdm:
        *out = new limopt_optimizer{
            Optimizer::sgdm(std::move(start), step, DecaySchedule::fixed(gamma))};
        break;
      case OptimizerKind::Lim:
        *out = new limopt_optimizer{
            Optimizer::lim(std::move(start), step, DecaySchedule::inverse_proportional(beta))};
        break;
      case OptimizerKind::Adam:
        *out = new limopt_optimizer{Optimizer::adam(std::move(start), step)};
        break;
    }
  });
}

limopt_status limopt_optimizer_step(limopt_optimizer* opt, const double* grad, size_t dim) {
  return guarded([&] {
    if (!opt || !grad) throw std::invalid_argument("optimizer_step: null argument");
    opt->impl.step(ParamVector(grad, grad + dim));
  });
}

limopt_status limopt_optimizer_position(const limopt_optimizer* opt, double* out, size_t dim) {
  return guarded([&] {
    if (!opt || !out) throw std::invalid_argument("optimizer_position: null argument");
    const ParamVector& x = opt->impl.x();
    if (dim != x.size()) throw std::invalid_argument("optimizer_position: dim mismatch");
    std::memcpy(out, x.data(), dim * sizeof(double));
  });
}

limopt_status limopt_optimizer_last_step(const limopt_optimizer* opt, double* out, size_t dim) {
  return guarded([&] {
    if (!opt || !out) throw std::invalid_argument("optimizer_last_step: null argument");
    const ParamVector& v = opt->impl.last_displacement();
    if (dim != v.size()) throw std::invalid_argument("optimizer_last_step: dim mismatch");
    std::memcpy(out, v.data(), dim * sizeof(double));
  });
}

long limopt_optimizer_iterations(const limopt_optimizer* opt) {
  return opt ? opt->impl.iterations() : -1;
}

void limopt_optimizer_free(limopt_optimizer* opt) { delete opt; }

limopt_status limopt_step_size(double alpha0, long k, double* out) {
  return guarded([&] {
    if (!out) throw std::invalid_argument("step_size: null output");
    *out = step_size(StepSchedule{alpha0}, k);
  });
}

limopt_status limopt_decay_invprop(double beta, long k, double* out) {
  return guarded([&] {
    if (!out) throw std::invalid_argument("decay_invprop: null output");
    *out = decay_factor(DecaySchedule::inverse_proportional(beta), k);
  });
}

limopt_status limopt_exact_noise_variance_fixed(double gamma, double alpha0, long k, double M,
                                                double* out) {
  return guarded([&] {
    if (!out) throw std::invalid_argument("exact_noise_variance: null output");
    *out = exact_noise_variance(DecaySchedule::fixed(gamma), StepSchedule{alpha0}, k, M);
  });
}

limopt_status limopt_exact_noise_variance_invprop(double beta, double alpha0, long k, double M,
                                                  double* out) {
  return guarded([&] {
    if (!out) throw std::invalid_argument("exact_noise_variance: null output");
    *out = exact_noise_variance(DecaySchedule::inverse_proportional(beta), StepSchedule{alpha0},
                                k, M);
  });
}

limopt_status limopt_bound_thm2(double alpha0, double gamma, double M, double MV,
                                double gradnorm_sq, double L, double D, double* out) {
  return guarded([&] {
    if (!out) throw std::invalid_argument("bound_thm2: null output");
    *out = bound_thm2(alpha0, gamma, M, MV, gradnorm_sq, L, D);
  });
}

limopt_status limopt_bound_thm3(double alpha0, double beta, double M, double MV,
                                double gradnorm_sq, double L, double D, double* out) {
  return guarded([&] {
    if (!out) throw std::invalid_argument("bound_thm3: null output");
    *out = bound_thm3(alpha0, beta, M, MV, gradnorm_sq, L, D);
  });
}

void limopt_run_config_defaults(limopt_run_config* cfg) {
  if (!cfg) return;
  const ExperimentConfig d;
  cfg->problem = "quadratic";
  cfg->optimizer = "lim";
  cfg->alpha0 = d.alpha0;
  cfg->gamma = d.gamma;
  cfg->beta = d.beta;
  cfg->batch = d.batch;
  cfg->iters = d.iters;
  cfg->seed = d.seed;
  cfg->data = nullptr;
  cfg->hidden_width = d.hidden_width;
  cfg->out_dir = nullptr;
}

limopt_status limopt_cmd_run(const limopt_run_config* cfg, char* out_path, size_t out_path_cap) {
  return guarded([&] {
    if (!cfg) throw std::invalid_argument("cmd_run: null config");
    const auto [rec, path] = cmd_run(to_cpp(*cfg), &std::cerr);
    copy_out(path, out_path, out_path_cap);
  });
}

void limopt_variance_config_defaults(limopt_variance_config* cfg) {
  if (!cfg) return;
  const VarianceCmdConfig d;
  cfg->problem = "noise";
  cfg->optimizer = "lim";
  cfg->alpha0 = d.alpha0;
  cfg->gamma = d.gamma;
  cfg->beta = d.beta;
  cfg->ks = nullptr;
  cfg->n_ks = 0;
  cfg->replicas = d.replicas;
  cfg->seed = d.seed;
  cfg->out_dir = nullptr;
}

limopt_status limopt_cmd_variance(const limopt_variance_config* cfg, char* out_path,
                                  size_t out_path_cap) {
  return guarded([&] {
    if (!cfg) throw std::invalid_argument("cmd_variance: null config");
    VarianceCmdConfig c;
    if (!cfg->problem) throw std::invalid_argument("variance config: problem must be set");
    if (!cfg->optimizer) throw std::invalid_argument("variance config: optimizer must be set");
    c.problem = problem_from_name(cfg->problem);
    c.optimizer = optimizer_kind_from_name(cfg->optimizer);
    c.alpha0 = cfg->alpha0;
    c.gamma = cfg->gamma;
    c.beta = cfg->beta;
    if (cfg->n_ks > 0) {
      if (!cfg->ks) throw std::invalid_argument("variance config: ks is null but n_ks > 0");
      c.ks.assign(cfg->ks, cfg->ks + cfg->n_ks);
    }
    c.replicas = cfg->replicas;
    c.seed = cfg->seed;
    c.out_dir = cfg->out_dir ? cfg->out_dir : ".";
    const auto [reports, path] = cmd_variance(c, &std::cout);
    copy_out(path, out_path, out_path_cap);
  });
}

limopt_status limopt_cmd_sweep(const char* grid_path, const limopt_run_config* base,
                               char* summary_path, size_t summary_path_cap) {
  return guarded([&] {
    if (!grid_path || !base) throw std::invalid_argument("cmd_sweep: null argument");
    const SweepResult r = cmd_sweep(grid_path, to_cpp(*base), &std::cerr);
    copy_out(r.summary_path, summary_path, summary_path_cap);
  });
}

limopt_status limopt_cmd_plot(const char* const* inputs, size_t n_inputs, const char* out_path,
                              int log_y) {
  return guarded([&] {
    if (!inputs || !out_path) throw std::invalid_argument("cmd_plot: null argument");
    std::vector<std::string> paths;
    paths.reserve(n_inputs);
    for (size_t i = 0; i < n_inputs; ++i) {
      if (!inputs[i]) throw std::invalid_argument("cmd_plot: null input path");
      paths.emplace_back(inputs[i]);
    }
    cmd_plot(paths, out_path, log_y != 0);
  });
}

limopt_status limopt_cmd_check(double corrupt_decay, char* report, size_t report_cap,
                               int* n_failed) {
  return guarded([&] {
    const std::vector<CheckResult> results = run_checks(corrupt_decay);
    std::string text;
    int failed = 0;
    for (const CheckResult& r : results) {
      text += r.pass ? "[PASS] " : "[FAIL] ";
      text += r.name;
      if (!r.detail.empty()) {
        text += ": ";
        text += r.detail;
      }
      text += "\n";
      if (!r.pass) ++failed;
    }
    copy_out(text, report, report_cap);
    if (n_failed) *n_failed = failed;
  });
}

}  // extern "C"
