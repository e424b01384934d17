#include "limopt/variance.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "limopt/errors.hpp"

namespace limopt {

bool within_mc_tolerance(const VarianceReport& r) {
  if (!r.exact) return true;
  return std::abs(r.estimate - *r.exact) <= 4.0 * r.standard_error;
}

namespace {

double bound_bracket(double M, double MV, double gradnorm_sq, double L, double D) {
  if (M < 0.0 || MV < 0.0 || gradnorm_sq < 0.0 || L < 0.0 || D < 0.0)
    throw std::invalid_argument("variance bound: M, MV, gradnorm_sq, L, D must be >= 0");
  return M + 2.0 * MV * gradnorm_sq + 2.0 * MV * L * L * D * D;
}

}  // namespace

double bound_thm2(double alpha0, double gamma, double M, double MV, double gradnorm_sq, double L,
                  double D) {
  if (!(gamma > 0.0 && gamma < 1.0)) {
    std::ostringstream os;
    os << "bound_thm2: gamma must lie in (0, 1), got " << gamma;
    throw std::invalid_argument(os.str());
  }
  if (alpha0 < 0.0) throw std::invalid_argument("bound_thm2: alpha0 must be >= 0");
  return alpha0 * alpha0 / (1.0 - gamma * gamma) * bound_bracket(M, MV, gradnorm_sq, L, D);
}

double bound_thm3(double alpha0, double beta, double M, double MV, double gradnorm_sq, double L,
                  double D) {
  if (!(beta > 0.0)) {
    std::ostringstream os;
    os << "bound_thm3: beta must be > 0, got " << beta;
    throw std::invalid_argument(os.str());
  }
  if (alpha0 < 0.0) throw std::invalid_argument("bound_thm3: alpha0 must be >= 0");
  return alpha0 * alpha0 / (2.0 * beta) * bound_bracket(M, MV, gradnorm_sq, L, D);
}

double exact_noise_variance(const DecaySchedule& d, const StepSchedule& s, long k, double M) {
  if (M < 0.0) throw std::invalid_argument("exact_noise_variance: M must be >= 0");
  const std::vector<double> w = momentum_weights(d, s, k);
  double sum = 0.0;
  for (double wj : w) sum += wj * wj;
  return sum * M;
}

double exact_noise_variance_paper_weights(double beta, const StepSchedule& s, long k, double M) {
  if (!(beta > 0.0)) throw std::invalid_argument("exact_noise_variance: beta must be > 0");
  if (k < 1) throw std::invalid_argument("exact_noise_variance: k must be >= 1");
  if (M < 0.0) throw std::invalid_argument("exact_noise_variance: M must be >= 0");
  double sum = 0.0;
  for (long j = 1; j <= k; ++j) {
    const double w = std::pow(static_cast<double>(j) / static_cast<double>(k), beta) *
                     step_size(s, j);
    sum += w * w;
  }
  return sum * M;
}

GeometricSumIdentity geometric_sum_identity(double gamma, long k) {
  if (!(gamma > 0.0 && gamma < 1.0))
    throw std::invalid_argument("geometric_sum_identity: gamma must lie in (0, 1)");
  if (k < 1) throw std::invalid_argument("geometric_sum_identity: k must be >= 1");
  GeometricSumIdentity out;
  for (long j = 1; j <= k; ++j) out.lhs += std::pow(gamma, 2.0 * static_cast<double>(k - j));
  out.rhs = (1.0 - std::pow(gamma, 2.0 * static_cast<double>(k))) / (1.0 - gamma * gamma);
  return out;
}

VarianceReport monte_carlo_direction_variance(const Problem& p, const McConfig& cfg, long k,
                                              long replicas, uint64_t master_seed) {
  if (replicas < 2)
    throw std::invalid_argument("monte_carlo_direction_variance: needs at least 2 replicas");
  if (k < 1) throw std::invalid_argument("monte_carlo_direction_variance: k must be >= 1");
  if (cfg.kind != OptimizerKind::Sgdm && cfg.kind != OptimizerKind::Lim)
    throw std::invalid_argument(
        "monte_carlo_direction_variance: optimizer must be sgdm or lim");
  const ParamVector x0 = cfg.x0.empty() ? p.initial_parameters() : cfg.x0;
  if (static_cast<long>(x0.size()) != p.dim()) {
    std::ostringstream os;
    os << "monte_carlo_direction_variance: x0 has " << x0.size() << " entries, problem has "
       << p.dim();
    throw std::invalid_argument(os.str());
  }

  const long d = p.dim();
  std::vector<ParamVector> v(replicas);
  for (long r = 0; r < replicas; ++r) {
    RngStream rng(master_seed, static_cast<uint64_t>(r));
    Optimizer opt = (cfg.kind == OptimizerKind::Sgdm) ? Optimizer::sgdm(x0, cfg.step, cfg.decay)
                                                      : Optimizer::lim(x0, cfg.step, cfg.decay);
    for (long i = 0; i < k; ++i) opt.step(p.stochastic_gradient(opt.x(), rng, cfg.batch));
    v[r] = opt.last_displacement();
  }

  // Mean accumulated as offsets from the first replica, so coincident
  // replicas (zero-noise problems) yield an exactly zero estimate.
  ParamVector mean(d, 0.0);
  for (long r = 0; r < replicas; ++r)
    for (long i = 0; i < d; ++i) mean[i] += v[r][i] - v[0][i];
  for (long i = 0; i < d; ++i) mean[i] = v[0][i] + mean[i] / static_cast<double>(replicas);

  // s_r = |v_r - mean|^2; estimate = sum(s_r)/(R-1); its standard error comes
  // from the replica-to-replica spread of the s_r themselves.
  std::vector<double> s(replicas, 0.0);
  double s_sum = 0.0;
  for (long r = 0; r < replicas; ++r) {
    double acc = 0.0;
    for (long i = 0; i < d; ++i) {
      const double dv = v[r][i] - mean[i];
      acc += dv * dv;
    }
    s[r] = acc;
    s_sum += acc;
  }
  const double R = static_cast<double>(replicas);
  const double s_mean = s_sum / R;
  double s_var = 0.0;
  for (long r = 0; r < replicas; ++r) {
    const double ds = s[r] - s_mean;
    s_var += ds * ds;
  }
  s_var /= (R - 1.0);

  VarianceReport rep;
  rep.k = k;
  rep.replicas = replicas;
  rep.estimate = s_sum / (R - 1.0);
  rep.standard_error = (R / (R - 1.0)) * std::sqrt(s_var / R);

  if (auto kc = p.known_constants(); kc && kc->L == 0.0 && kc->M_V == 0.0) {
    rep.exact = exact_noise_variance(cfg.decay, cfg.step, k, kc->M);
    if (cfg.decay.kind() == DecaySchedule::Kind::Fixed) {
      if (cfg.decay.gamma() > 0.0)
        rep.bound_thm2 = bound_thm2(cfg.step.alpha0, cfg.decay.gamma(), kc->M, 0.0, 0.0, 0.0, 0.0);
    } else {
      rep.bound_thm3 = bound_thm3(cfg.step.alpha0, cfg.decay.beta(), kc->M, 0.0, 0.0, 0.0, 0.0);
    }
  }
  return rep;
}

void validate_trajectory(const TrajectoryRecord& t) {
  long prev_k = -1;
  for (size_t i = 0; i < t.size(); ++i) {
    const TrajectoryPoint& pt = t[i];
    if (pt.k <= prev_k) {
      std::ostringstream os;
      os << "trajectory: k not strictly increasing at entry " << i;
      throw std::invalid_argument(os.str());
    }
    prev_k = pt.k;
    if (!std::isfinite(pt.grad_norm) || !std::isfinite(pt.loss) || !std::isfinite(pt.v_norm) ||
        !all_finite(pt.x)) {
      std::ostringstream os;
      os << "trajectory: non-finite entry at k = " << pt.k;
      throw NumericError(os.str());
    }
  }
}

TrajectoryRecord record_trajectory(const Problem& p, Optimizer& opt, RngStream& rng, long steps,
                                   long batch) {
  if (steps < 1) throw std::invalid_argument("record_trajectory: steps must be >= 1");
  TrajectoryRecord t;
  t.reserve(steps + 1);
  auto push = [&](double v_norm) {
    TrajectoryPoint pt;
    pt.k = opt.iterations();
    pt.x = opt.x();
    pt.grad_norm = norm2(p.full_gradient(opt.x()));
    pt.loss = p.loss(opt.x());
    pt.v_norm = v_norm;
    t.push_back(std::move(pt));
  };
  push(0.0);
  for (long i = 0; i < steps; ++i) {
    opt.step(p.stochastic_gradient(opt.x(), rng, batch));
    push(norm2(opt.last_displacement()));
  }
  validate_trajectory(t);
  return t;
}

Theorem1Report theorem1_check(const TrajectoryRecord& t, double L) {
  if (t.size() < 2) throw std::invalid_argument("theorem1_check: trajectory needs >= 2 points");
  if (!(L > 0.0)) throw std::invalid_argument("theorem1_check: L must be > 0");
  validate_trajectory(t);

  Theorem1Report rep;
  const size_t n = t.size();
  for (size_t i = 0; i < n; ++i)
    for (size_t j = i + 1; j < n; ++j) {
      double d2 = 0.0;
      for (size_t c = 0; c < t[i].x.size(); ++c) {
        const double dx = t[i].x[c] - t[j].x[c];
        d2 += dx * dx;
      }
      rep.D = std::max(rep.D, std::sqrt(d2));
    }

  const double slack_term = 2.0 * L * L * rep.D * rep.D;
  rep.max_violation = -std::numeric_limits<double>::infinity();
  for (size_t j = 0; j < n; ++j)
    for (size_t k = 0; k < n; ++k) {
      if (j == k) continue;
      const double gj2 = t[j].grad_norm * t[j].grad_norm;
      const double gk2 = t[k].grad_norm * t[k].grad_norm;
      rep.max_violation = std::max(rep.max_violation, gj2 - 2.0 * gk2 - slack_term);
      ++rep.pairs;
    }
  return rep;
}

AssumptionEstimate estimate_assumption_constants(const Problem& p,
                                                 const std::vector<ParamVector>& points,
                                                 long draws, RngStream& rng) {
  if (points.size() < 2)
    throw std::invalid_argument("estimate_assumption_constants: needs >= 2 points");
  if (draws < 100)
    throw std::invalid_argument("estimate_assumption_constants: needs >= 100 draws per point");

  const long d = p.dim();
  const size_t np = points.size();
  std::vector<double> z(np);  // |grad F|^2 per point
  std::vector<double> y(np);  // empirical tr Cov per point

  for (size_t i = 0; i < np; ++i) {
    const ParamVector& x = points[i];
    const ParamVector g_full = p.full_gradient(x);
    double gn2 = 0.0;
    for (double v : g_full) gn2 += v * v;
    z[i] = gn2;

    // Welford, per coordinate.
    ParamVector mean(d, 0.0), m2(d, 0.0);
    for (long t = 1; t <= draws; ++t) {
      const ParamVector g = p.stochastic_gradient(x, rng, 1);
      for (long c = 0; c < d; ++c) {
        const double delta = g[c] - mean[c];
        mean[c] += delta / static_cast<double>(t);
        m2[c] += delta * (g[c] - mean[c]);
      }
    }
    double tr = 0.0;
    for (long c = 0; c < d; ++c) tr += m2[c] / static_cast<double>(draws - 1);
    y[i] = tr;
  }

  double z_min = z[0], z_max = z[0];
  for (double v : z) {
    z_min = std::min(z_min, v);
    z_max = std::max(z_max, v);
  }

  AssumptionEstimate est;
  est.sample_points = static_cast<long>(np);
  est.draws_per_point = draws;

  const double z_spread_tol = 1e-9 * std::max(1.0, z_max);
  if (z_max - z_min <= z_spread_tol) {
    if (z_max > 1e-9) {
      std::ostringstream os;
      os << "estimate_assumption_constants: degenerate design — all gradient norms equal ("
         << std::sqrt(z_max) << "); vary the sample points";
      throw std::invalid_argument(os.str());
    }
    // All-zero gradients (e.g. the pure-noise problem): the slope is
    // unidentifiable, so fit the intercept alone.
    est.intercept_only = true;
    double mean_y = 0.0;
    for (double v : y) mean_y += v;
    mean_y /= static_cast<double>(np);
    est.M_hat = std::max(0.0, mean_y);
    est.MV_hat = 0.0;
    double ss = 0.0;
    for (double v : y) ss += (v - mean_y) * (v - mean_y);
    est.rms_residual = std::sqrt(ss / static_cast<double>(np));
    return est;
  }

  // Ordinary least squares for y = M + MV * z.
  double zm = 0.0, ym = 0.0;
  for (size_t i = 0; i < np; ++i) {
    zm += z[i];
    ym += y[i];
  }
  zm /= static_cast<double>(np);
  ym /= static_cast<double>(np);
  double szz = 0.0, szy = 0.0;
  for (size_t i = 0; i < np; ++i) {
    szz += (z[i] - zm) * (z[i] - zm);
    szy += (z[i] - zm) * (y[i] - ym);
  }
  const double slope = szy / szz;
  const double intercept = ym - slope * zm;
  est.M_hat = std::max(0.0, intercept);
  est.MV_hat = std::max(0.0, slope);
  double ss = 0.0;
  for (size_t i = 0; i < np; ++i) {
    const double r = y[i] - (est.M_hat + est.MV_hat * z[i]);
    ss += r * r;
  }
  est.rms_residual = std::sqrt(ss / static_cast<double>(np));
  return est;
}

double thm3_asymptotic_ratio(double beta, double alpha0, long k) {
  const StepSchedule s{alpha0};
  const double exact =
      exact_noise_variance(DecaySchedule::inverse_proportional(beta), s, k, 1.0);
  return exact / bound_thm3(alpha0, beta, 1.0, 0.0, 0.0, 0.0, 0.0);
}

}  // namespace limopt
