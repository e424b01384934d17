#include <cmath>
#include <cstdio>
#include <limits>
#include <memory>
#include <sstream>

#include "limopt/experiment.hpp"
#include "limopt/gradcheck.hpp"
#include "limopt/schedules.hpp"
#include "limopt/variance.hpp"

namespace limopt {
namespace {

std::string fmtg(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

// momentum_weights computed the long way: an explicit product of per-step
// decay factors. `corrupt` shifts every factor — the mutation hook that lets
// the equivalence checks demonstrate a detectable failure.
std::vector<double> product_weights(const DecaySchedule& d, const StepSchedule& s, long k,
                                    double corrupt) {
  std::vector<double> w(k);
  for (long j = 1; j <= k; ++j) {
    double prod = 1.0;
    for (long i = j + 1; i <= k; ++i) prod *= decay_factor(d, i) + corrupt;
    w[j - 1] = step_size(s, j) * prod;
  }
  return w;
}

double equivalence_max_rel(OptimizerKind kind, double corrupt) {
  RngStream rng(90210, kind == OptimizerKind::Sgdm ? 1 : 2);
  const double gammas[] = {0.3, 0.6, 0.9};
  const double betas[] = {1.0, 2.0, 3.0};
  double max_rel = 0.0;
  for (int trial = 0; trial < 24; ++trial) {
    const long d = 1 + static_cast<long>(rng.next_u64() % 8);
    const long k = 2 + static_cast<long>(rng.next_u64() % 60);
    const StepSchedule step{0.25};
    const DecaySchedule decay = (kind == OptimizerKind::Sgdm)
                                    ? DecaySchedule::fixed(gammas[trial % 3])
                                    : DecaySchedule::inverse_proportional(betas[trial % 3]);
    const ParamVector x0 = gaussian_vector(rng, static_cast<size_t>(d), 1.0);
    Optimizer opt = (kind == OptimizerKind::Sgdm) ? Optimizer::sgdm(x0, step, decay)
                                                  : Optimizer::lim(x0, step, decay);
    std::vector<ParamVector> grads;
    for (long i = 0; i < k; ++i) {
      grads.push_back(gaussian_vector(rng, static_cast<size_t>(d), 1.0));
      opt.step(grads.back());
    }
    const ParamVector expect =
        closed_form_direction(product_weights(decay, step, k, corrupt), grads);
    const ParamVector& got = opt.last_displacement();
    double dn = 0.0, vn = 0.0;
    for (long c = 0; c < d; ++c) {
      const double df = expect[c] - got[c];
      dn += df * df;
      vn += got[c] * got[c];
    }
    max_rel = std::max(max_rel, std::sqrt(dn) / std::max(1e-30, std::sqrt(vn)));
  }
  return max_rel;
}

}  // namespace

std::vector<CheckResult> run_checks(double corrupt_decay) {
  std::vector<CheckResult> results;
  auto add = [&](const char* name, bool pass, std::string detail) {
    results.push_back({name, pass, std::move(detail)});
  };

  {
    const double rel = equivalence_max_rel(OptimizerKind::Sgdm, corrupt_decay);
    add("sgdm_closed_form", rel <= 1e-10, "max relative error " + fmtg(rel));
  }
  {
    const double rel = equivalence_max_rel(OptimizerKind::Lim, corrupt_decay);
    add("lim_closed_form", rel <= 1e-10, "max relative error " + fmtg(rel));
  }

  {
    // the closed-form weights against the raw decay-factor products
    double worst = 0.0;
    const StepSchedule step{1.0};
    for (double beta : {1.0, 2.0, 3.0})
      for (long k : {1L, 5L, 17L, 64L}) {
        const DecaySchedule d = DecaySchedule::inverse_proportional(beta);
        const std::vector<double> closed = momentum_weights(d, step, k);
        const std::vector<double> prod = product_weights(d, step, k, 0.0);
        for (long j = 0; j < k; ++j)
          worst = std::max(worst, std::abs(closed[j] - prod[j]) / std::max(1.0, prod[j]));
      }
    for (double gamma : {0.5, 0.9})
      for (long k : {1L, 5L, 17L, 64L}) {
        const DecaySchedule d = DecaySchedule::fixed(gamma);
        const std::vector<double> closed = momentum_weights(d, step, k);
        const std::vector<double> prod = product_weights(d, step, k, 0.0);
        for (long j = 0; j < k; ++j)
          worst = std::max(worst, std::abs(closed[j] - prod[j]) / std::max(1.0, prod[j]));
      }
    add("weight_telescoping", worst <= 1e-12, "max relative error " + fmtg(worst));
  }

  {
    double worst = 0.0;
    for (double gamma : {0.1, 0.5, 0.9, 0.99})
      for (long k : {1L, 10L, 100L, 10000L}) {
        const GeometricSumIdentity g = geometric_sum_identity(gamma, k);
        worst = std::max(worst, std::abs(g.lhs - g.rhs) / std::max(1.0, std::abs(g.rhs)));
      }
    add("geometric_sum", worst <= 1e-12, "max relative gap " + fmtg(worst));
  }

  {
    const std::unique_ptr<Problem> q = make_noisy_quadratic_diag({1.0, 4.0}, 0.5, 0.0);
    RngStream rng(777, 0);
    double min_slack = std::numeric_limits<double>::infinity();
    for (int i = 0; i < 200; ++i) {
      const ParamVector x = gaussian_vector(rng, 2, 2.0);
      const ParamVector xb = gaussian_vector(rng, 2, 2.0);
      min_slack = std::min(min_slack, descent_lemma_check(*q, x, xb).slack);
    }
    add("descent_lemma", min_slack >= -1e-9, "min slack " + fmtg(min_slack));
  }

  {
    RngStream data_rng(778, 0);
    const auto data = std::make_shared<const Dataset>(synthetic_blobs(20, 4, 3, 1.0, data_rng));
    const std::unique_ptr<Problem> p = make_softmax_regression(data);
    RngStream rng(778, 1);
    double worst = 0.0;
    for (int i = 0; i < 3; ++i) {
      const ParamVector x = gaussian_vector(rng, static_cast<size_t>(p->dim()), 0.5);
      const ParamVector fd = finite_diff_gradient([&](const ParamVector& v) { return p->loss(v); },
                                                  x, 1e-5);
      worst = std::max(worst, max_relative_error(p->full_gradient(x), fd));
    }
    add("softmax_gradient", worst <= 1e-5, "max relative error " + fmtg(worst));
  }

  {
    RngStream data_rng(779, 0);
    const auto data = std::make_shared<const Dataset>(synthetic_blobs(20, 6, 3, 1.0, data_rng));
    MlpSpec spec;
    spec.input = 6;
    spec.hidden = {5, 4};
    spec.output = 3;
    RngStream init_rng(779, 1);
    const std::unique_ptr<Problem> p = make_mlp(spec, data, init_rng);
    RngStream rng(779, 2);
    double worst = 0.0;
    for (int i = 0; i < 2; ++i) {
      ParamVector x = p->initial_parameters();
      const ParamVector jitter = gaussian_vector(rng, x.size(), 0.2);
      for (size_t c = 0; c < x.size(); ++c) x[c] += jitter[c];
      const ParamVector fd = finite_diff_gradient([&](const ParamVector& v) { return p->loss(v); },
                                                  x, 1e-5);
      worst = std::max(worst, max_relative_error(p->full_gradient(x), fd));
    }
    add("mlp_gradient", worst <= 1e-5, "max relative error " + fmtg(worst));
  }

  {
    // first adam step moves every coordinate by ~alpha_1 against the gradient
    RngStream rng(780, 0);
    const long d = 16;
    ParamVector g(d);
    for (long i = 0; i < d; ++i) {
      const double mag = 0.5 + 1.5 * rng.next_double();
      g[i] = (rng.next_u64() & 1) ? mag : -mag;
    }
    Optimizer opt = Optimizer::adam(ParamVector(d, 0.0), StepSchedule{0.3});
    opt.step(g);
    double worst = 0.0;
    bool signs_ok = true;
    for (long i = 0; i < d; ++i) {
      const double dx = opt.last_displacement()[i];
      worst = std::max(worst, std::abs(std::abs(dx) / 0.3 - 1.0));
      if (dx * g[i] >= 0.0) signs_ok = false;
    }
    add("adam_first_step", worst <= 1e-6 && signs_ok,
        "max magnitude deviation " + fmtg(worst));
  }

  {
    const RobbinsMonroReport r = check_robbins_monro(StepSchedule{1.0}, 10000);
    const double lnK = std::log(10000.0);
    const bool pass = r.sum_alpha >= r.sum_alpha_floor && r.sum_alpha_sq <= 1.0 + lnK + 1e-9 &&
                      r.sum_alpha_sq >= std::log(10001.0) - 1e-9;
    add("stepsize_divergence_floor", pass,
        "sum alpha " + fmtg(r.sum_alpha) + " >= floor " + fmtg(r.sum_alpha_floor) +
            ", sum alpha^2 " + fmtg(r.sum_alpha_sq));
  }

  return results;
}

}  // namespace limopt
