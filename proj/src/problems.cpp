#include "limopt/problems.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

#include "limopt/errors.hpp"

namespace limopt {
namespace {

void check_dim(const ParamVector& x, long d, const char* who) {
  if (static_cast<long>(x.size()) != d) {
    std::ostringstream os;
    os << who << ": expected " << d << " parameters, got " << x.size();
    throw std::invalid_argument(os.str());
  }
}

uint64_t uniform_below(RngStream& rng, uint64_t n) {
  // rejection sampling; bias-free
  const uint64_t threshold = (0 - n) % n;
  for (;;) {
    uint64_t r = rng.next_u64();
    if (r >= threshold) return r % n;
  }
}

// Floyd's sampling: `batch` distinct indices from [0, n). Not a uniform
// permutation, but every subset is equally likely, which is all the mean
// gradient needs.
std::vector<long> sample_indices(RngStream& rng, long n, long batch) {
  if (batch >= n) {
    std::vector<long> all(n);
    std::iota(all.begin(), all.end(), 0L);
    return all;
  }
  std::unordered_set<long> seen;
  std::vector<long> out;
  out.reserve(batch);
  for (long j = n - batch; j < n; ++j) {
    long t = static_cast<long>(uniform_below(rng, static_cast<uint64_t>(j) + 1));
    if (seen.insert(t).second) {
      out.push_back(t);
    } else {
      seen.insert(j);
      out.push_back(j);
    }
  }
  return out;
}

double logsumexp(const double* z, long m) {
  double zmax = z[0];
  for (long i = 1; i < m; ++i) zmax = std::max(zmax, z[i]);
  double s = 0.0;
  for (long i = 0; i < m; ++i) s += std::exp(z[i] - zmax);
  return zmax + std::log(s);
}

}  // namespace

double Problem::minibatch_loss(const ParamVector&, std::span<const long>) const {
  throw std::invalid_argument("minibatch_loss: problem has no sample indices");
}

ParamVector Problem::minibatch_gradient(const ParamVector&, std::span<const long>) const {
  throw std::invalid_argument("minibatch_gradient: problem has no sample indices");
}

void validate_dataset(const Dataset& d) {
  if (d.n < 1) throw std::invalid_argument("dataset: needs at least one sample");
  if (d.p < 1) throw std::invalid_argument("dataset: needs at least one feature");
  if (d.C < 2) throw std::invalid_argument("dataset: needs at least two classes");
  if (static_cast<long>(d.features.size()) != d.n * d.p) {
    std::ostringstream os;
    os << "dataset: feature buffer holds " << d.features.size() << " values, expected "
       << d.n * d.p;
    throw std::invalid_argument(os.str());
  }
  if (static_cast<long>(d.labels.size()) != d.n) {
    std::ostringstream os;
    os << "dataset: " << d.labels.size() << " labels for " << d.n << " samples";
    throw std::invalid_argument(os.str());
  }
  for (long i = 0; i < d.n; ++i) {
    if (d.labels[i] < 0 || d.labels[i] >= d.C) {
      std::ostringstream os;
      os << "dataset: label " << d.labels[i] << " at row " << i << " outside [0, " << d.C << ")";
      throw std::invalid_argument(os.str());
    }
  }
  for (double v : d.features) {
    if (!std::isfinite(v)) throw std::invalid_argument("dataset: non-finite feature value");
  }
}

// ---------------------------------------------------------------------------

namespace {

class PureNoiseProblem final : public Problem {
 public:
  PureNoiseProblem(long d, double sigma) : d_(d), sigma_(sigma) {
    if (d < 1) throw std::invalid_argument("pure_noise: d must be >= 1");
    if (!(sigma > 0.0)) throw std::invalid_argument("pure_noise: sigma must be > 0");
  }

  long dim() const override { return d_; }

  double loss(const ParamVector& x) const override {
    check_dim(x, d_, "pure_noise loss");
    return 0.0;
  }

  ParamVector full_gradient(const ParamVector& x) const override {
    check_dim(x, d_, "pure_noise gradient");
    return ParamVector(d_, 0.0);
  }

  ParamVector stochastic_gradient(const ParamVector& x, RngStream& rng,
                                  long batch) const override {
    check_dim(x, d_, "pure_noise gradient");
    if (batch < 1) throw std::invalid_argument("stochastic_gradient: batch must be >= 1");
    ParamVector g(d_, 0.0);
    for (long b = 0; b < batch; ++b) {
      ParamVector xi = gaussian_vector(rng, static_cast<size_t>(d_), sigma_);
      for (long i = 0; i < d_; ++i) g[i] += xi[i];
    }
    for (long i = 0; i < d_; ++i) g[i] /= static_cast<double>(batch);
    return g;
  }

  std::optional<KnownConstants> known_constants() const override {
    return KnownConstants{0.0, static_cast<double>(d_) * sigma_ * sigma_, 0.0};
  }

 private:
  long d_;
  double sigma_;
};

class NoisyQuadraticProblem final : public Problem {
 public:
  NoisyQuadraticProblem(Eigen::MatrixXd A, double sigma, double c)
      : A_(std::move(A)), sigma_(sigma), c_(c) {
    const long d = A_.rows();
    if (sigma < 0.0) throw std::invalid_argument("noisy_quadratic: sigma must be >= 0");
    if (c < 0.0) throw std::invalid_argument("noisy_quadratic: c must be >= 0");
    for (long i = 0; i < d; ++i)
      for (long j = i + 1; j < d; ++j) {
        double scale = std::max({1.0, std::abs(A_(i, j)), std::abs(A_(j, i))});
        if (std::abs(A_(i, j) - A_(j, i)) > 1e-12 * scale) {
          std::ostringstream os;
          os << "noisy_quadratic: A is not symmetric at (" << i << "," << j << "): " << A_(i, j)
             << " vs " << A_(j, i);
          throw std::invalid_argument(os.str());
        }
      }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A_);
    if (es.info() != Eigen::Success)
      throw NumericError("noisy_quadratic: eigendecomposition of A failed");
    const double lo = es.eigenvalues().minCoeff();
    if (!(lo > 0.0)) {
      std::ostringstream os;
      os << "noisy_quadratic: A is not positive definite (smallest eigenvalue " << lo << ")";
      throw std::invalid_argument(os.str());
    }
    lmax_ = es.eigenvalues().maxCoeff();
  }

  long dim() const override { return A_.rows(); }

  double loss(const ParamVector& x) const override {
    check_dim(x, dim(), "noisy_quadratic loss");
    Eigen::Map<const Eigen::VectorXd> xv(x.data(), dim());
    return 0.5 * xv.dot(A_ * xv);
  }

  ParamVector full_gradient(const ParamVector& x) const override {
    check_dim(x, dim(), "noisy_quadratic gradient");
    Eigen::Map<const Eigen::VectorXd> xv(x.data(), dim());
    Eigen::VectorXd g = A_ * xv;
    return ParamVector(g.data(), g.data() + g.size());
  }

  ParamVector stochastic_gradient(const ParamVector& x, RngStream& rng,
                                  long batch) const override {
    if (batch < 1) throw std::invalid_argument("stochastic_gradient: batch must be >= 1");
    ParamVector g = full_gradient(x);
    const long d = dim();
    double gn2 = 0.0;
    for (double v : g) gn2 += v * v;
    const double noise_sd = std::sqrt(sigma_ * sigma_ + c_ * gn2 / static_cast<double>(d));
    ParamVector noise(d, 0.0);
    for (long b = 0; b < batch; ++b)
      for (long i = 0; i < d; ++i) noise[i] += rng.next_gaussian() * noise_sd;
    for (long i = 0; i < d; ++i) g[i] += noise[i] / static_cast<double>(batch);
    return g;
  }

  std::optional<KnownConstants> known_constants() const override {
    return KnownConstants{lmax_, static_cast<double>(dim()) * sigma_ * sigma_, c_};
  }

 private:
  Eigen::MatrixXd A_;
  double sigma_;
  double c_;
  double lmax_ = 0.0;
};

}  // namespace

std::unique_ptr<Problem> make_pure_noise(long d, double sigma) {
  return std::make_unique<PureNoiseProblem>(d, sigma);
}

std::unique_ptr<Problem> make_noisy_quadratic(std::vector<double> A, long d, double sigma,
                                              double c) {
  if (d < 1) throw std::invalid_argument("noisy_quadratic: d must be >= 1");
  if (static_cast<long>(A.size()) != d * d) {
    std::ostringstream os;
    os << "noisy_quadratic: A has " << A.size() << " entries, expected " << d * d;
    throw std::invalid_argument(os.str());
  }
  Eigen::MatrixXd m(d, d);
  for (long i = 0; i < d; ++i)
    for (long j = 0; j < d; ++j) m(i, j) = A[i * d + j];
  return std::make_unique<NoisyQuadraticProblem>(std::move(m), sigma, c);
}

std::unique_ptr<Problem> make_noisy_quadratic_diag(const std::vector<double>& diag, double sigma,
                                                   double c) {
  const long d = static_cast<long>(diag.size());
  if (d < 1) throw std::invalid_argument("noisy_quadratic: d must be >= 1");
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(d, d);
  for (long i = 0; i < d; ++i) m(i, i) = diag[i];
  return std::make_unique<NoisyQuadraticProblem>(std::move(m), sigma, c);
}

// ---------------------------------------------------------------------------

SoftmaxRegressionProblem::SoftmaxRegressionProblem(std::shared_ptr<const Dataset> data)
    : data_(std::move(data)) {
  if (!data_) throw std::invalid_argument("softmax_regression: null dataset");
  validate_dataset(*data_);
}

long SoftmaxRegressionProblem::dim() const { return data_->C * data_->p + data_->C; }

long SoftmaxRegressionProblem::sample_count() const { return data_->n; }

ParamVector SoftmaxRegressionProblem::class_probabilities(const ParamVector& x,
                                                          std::span<const double> row) const {
  check_dim(x, dim(), "softmax_regression");
  const long p = data_->p;
  const long C = data_->C;
  if (static_cast<long>(row.size()) != p)
    throw std::invalid_argument("class_probabilities: feature row length mismatch");
  ParamVector z(C, 0.0);
  for (long c = 0; c < C; ++c) {
    double s = x[C * p + c];  // bias
    const double* w = x.data() + c * p;
    for (long j = 0; j < p; ++j) s += w[j] * row[j];
    z[c] = s;
  }
  const double lse = logsumexp(z.data(), C);
  for (long c = 0; c < C; ++c) z[c] = std::exp(z[c] - lse);
  return z;
}

double SoftmaxRegressionProblem::minibatch_loss(const ParamVector& x,
                                                std::span<const long> idx) const {
  check_dim(x, dim(), "softmax_regression loss");
  if (idx.empty()) throw std::invalid_argument("minibatch_loss: empty index set");
  const long p = data_->p;
  const long C = data_->C;
  double total = 0.0;
  ParamVector z(C);
  for (long i : idx) {
    if (i < 0 || i >= data_->n) throw std::invalid_argument("minibatch_loss: index out of range");
    const double* row = data_->features.data() + i * p;
    for (long c = 0; c < C; ++c) {
      double s = x[C * p + c];
      const double* w = x.data() + c * p;
      for (long j = 0; j < p; ++j) s += w[j] * row[j];
      z[c] = s;
    }
    total += logsumexp(z.data(), C) - z[data_->labels[i]];
  }
  return total / static_cast<double>(idx.size());
}

ParamVector SoftmaxRegressionProblem::minibatch_gradient(const ParamVector& x,
                                                         std::span<const long> idx) const {
  check_dim(x, dim(), "softmax_regression gradient");
  if (idx.empty())
    throw std::invalid_argument("minibatch_gradient: empty index set");
  const long p = data_->p;
  const long C = data_->C;
  ParamVector grad(dim(), 0.0);
  ParamVector z(C);
  for (long i : idx) {
    if (i < 0 || i >= data_->n)
      throw std::invalid_argument("minibatch_gradient: index out of range");
    const double* row = data_->features.data() + i * p;
    for (long c = 0; c < C; ++c) {
      double s = x[C * p + c];
      const double* w = x.data() + c * p;
      for (long j = 0; j < p; ++j) s += w[j] * row[j];
      z[c] = s;
    }
    const double lse = logsumexp(z.data(), C);
    for (long c = 0; c < C; ++c) {
      const double dz = std::exp(z[c] - lse) - (c == data_->labels[i] ? 1.0 : 0.0);
      double* gw = grad.data() + c * p;
      for (long j = 0; j < p; ++j) gw[j] += dz * row[j];
      grad[C * p + c] += dz;
    }
  }
  const double inv = 1.0 / static_cast<double>(idx.size());
  for (double& v : grad) v *= inv;
  return grad;
}

double SoftmaxRegressionProblem::loss(const ParamVector& x) const {
  std::vector<long> all(data_->n);
  std::iota(all.begin(), all.end(), 0L);
  return minibatch_loss(x, all);
}

ParamVector SoftmaxRegressionProblem::full_gradient(const ParamVector& x) const {
  std::vector<long> all(data_->n);
  std::iota(all.begin(), all.end(), 0L);
  return minibatch_gradient(x, all);
}

ParamVector SoftmaxRegressionProblem::stochastic_gradient(const ParamVector& x, RngStream& rng,
                                                          long batch) const {
  if (batch < 1) throw std::invalid_argument("stochastic_gradient: batch must be >= 1");
  std::vector<long> idx = sample_indices(rng, data_->n, batch);
  return minibatch_gradient(x, idx);
}

std::unique_ptr<Problem> make_softmax_regression(std::shared_ptr<const Dataset> data) {
  return std::make_unique<SoftmaxRegressionProblem>(std::move(data));
}

// ---------------------------------------------------------------------------

struct MlpProblem::Pass {
  std::vector<ParamVector> act;  // act[0] = input, act[t] = post-ReLU of layer t
  ParamVector logits;
};

MlpProblem::MlpProblem(MlpSpec spec, std::shared_ptr<const Dataset> data, RngStream& init_rng)
    : spec_(std::move(spec)), data_(std::move(data)) {
  if (!data_) throw std::invalid_argument("mlp: null dataset");
  validate_dataset(*data_);
  if (spec_.hidden.empty()) throw std::invalid_argument("mlp: needs at least one hidden layer");
  if (spec_.input < 1 || spec_.output < 1)
    throw std::invalid_argument("mlp: layer widths must be >= 1");
  for (long w : spec_.hidden)
    if (w < 1) throw std::invalid_argument("mlp: layer widths must be >= 1");
  if (spec_.input != data_->p) {
    std::ostringstream os;
    os << "mlp: input width " << spec_.input << " does not match dataset feature count "
       << data_->p;
    throw std::invalid_argument(os.str());
  }
  if (spec_.output != data_->C) {
    std::ostringstream os;
    os << "mlp: output width " << spec_.output << " does not match dataset class count "
       << data_->C;
    throw std::invalid_argument(os.str());
  }

  std::vector<long> widths;
  widths.push_back(spec_.input);
  widths.insert(widths.end(), spec_.hidden.begin(), spec_.hidden.end());
  widths.push_back(spec_.output);
  long off = 0;
  for (size_t t = 0; t + 1 < widths.size(); ++t) {
    w_offsets_.push_back(off);
    off += widths[t + 1] * widths[t];
    b_offsets_.push_back(off);
    off += widths[t + 1];
  }
  dim_ = off;

  init_.assign(dim_, 0.0);
  for (size_t t = 0; t + 1 < widths.size(); ++t) {
    const double scale = 1.0 / std::sqrt(static_cast<double>(widths[t]));
    double* w = init_.data() + w_offsets_[t];
    for (long i = 0; i < widths[t + 1] * widths[t]; ++i) w[i] = scale * init_rng.next_gaussian();
    // biases stay zero
  }
}

long MlpProblem::dim() const { return dim_; }

long MlpProblem::sample_count() const { return data_->n; }

void MlpProblem::forward(const ParamVector& x, std::span<const double> input, Pass& pass) const {
  const size_t T = w_offsets_.size();  // number of affine layers
  pass.act.assign(T, ParamVector());
  pass.act[0].assign(input.begin(), input.end());
  long in_w = spec_.input;
  for (size_t t = 0; t < T; ++t) {
    const long out_w = (t + 1 < T) ? spec_.hidden[t] : spec_.output;
    const double* W = x.data() + w_offsets_[t];
    const double* b = x.data() + b_offsets_[t];
    const ParamVector& a = pass.act[t];
    ParamVector z(out_w);
    for (long i = 0; i < out_w; ++i) {
      double s = b[i];
      const double* wr = W + i * in_w;
      for (long j = 0; j < in_w; ++j) s += wr[j] * a[j];
      z[i] = s;
    }
    if (t + 1 < T) {
      for (double& v : z) v = std::max(v, 0.0);
      pass.act[t + 1] = std::move(z);
    } else {
      pass.logits = std::move(z);
    }
    in_w = out_w;
  }
}

double MlpProblem::sample_loss_grad(const ParamVector& x, long sample, ParamVector* grad) const {
  if (sample < 0 || sample >= data_->n)
    throw std::invalid_argument("mlp: sample index out of range");
  Pass pass;
  forward(x, std::span<const double>(data_->features.data() + sample * data_->p,
                                     static_cast<size_t>(data_->p)),
          pass);
  const long C = spec_.output;
  const int y = data_->labels[sample];
  const double lse = logsumexp(pass.logits.data(), C);
  const double loss = lse - pass.logits[y];
  if (!grad) return loss;

  const size_t T = w_offsets_.size();
  ParamVector delta(C);
  for (long c = 0; c < C; ++c)
    delta[c] = std::exp(pass.logits[c] - lse) - (c == y ? 1.0 : 0.0);

  for (size_t t = T; t-- > 0;) {
    const long in_w = (t == 0) ? spec_.input : spec_.hidden[t - 1];
    const long out_w = (t + 1 < T) ? spec_.hidden[t] : spec_.output;
    const ParamVector& a = pass.act[t];
    double* gW = grad->data() + w_offsets_[t];
    double* gb = grad->data() + b_offsets_[t];
    for (long i = 0; i < out_w; ++i) {
      const double d = delta[i];
      double* gwr = gW + i * in_w;
      for (long j = 0; j < in_w; ++j) gwr[j] += d * a[j];
      gb[i] += d;
    }
    if (t == 0) break;
    const double* W = x.data() + w_offsets_[t];
    ParamVector prev(in_w, 0.0);
    for (long j = 0; j < in_w; ++j) {
      if (a[j] <= 0.0) continue;  // ReLU gate: act > 0 iff pre-activation > 0
      double s = 0.0;
      for (long i = 0; i < out_w; ++i) s += W[i * in_w + j] * delta[i];
      prev[j] = s;
    }
    delta = std::move(prev);
  }
  return loss;
}

double MlpProblem::minibatch_loss(const ParamVector& x, std::span<const long> idx) const {
  check_dim(x, dim_, "mlp loss");
  if (idx.empty()) throw std::invalid_argument("minibatch_loss: empty index set");
  double total = 0.0;
  for (long i : idx) total += sample_loss_grad(x, i, nullptr);
  return total / static_cast<double>(idx.size());
}

ParamVector MlpProblem::minibatch_gradient(const ParamVector& x, std::span<const long> idx) const {
  check_dim(x, dim_, "mlp gradient");
  if (idx.empty()) throw std::invalid_argument("minibatch_gradient: empty index set");
  ParamVector grad(dim_, 0.0);
  for (long i : idx) sample_loss_grad(x, i, &grad);
  const double inv = 1.0 / static_cast<double>(idx.size());
  for (double& v : grad) v *= inv;
  return grad;
}

double MlpProblem::loss(const ParamVector& x) const {
  std::vector<long> all(data_->n);
  std::iota(all.begin(), all.end(), 0L);
  return minibatch_loss(x, all);
}

ParamVector MlpProblem::full_gradient(const ParamVector& x) const {
  std::vector<long> all(data_->n);
  std::iota(all.begin(), all.end(), 0L);
  return minibatch_gradient(x, all);
}

ParamVector MlpProblem::stochastic_gradient(const ParamVector& x, RngStream& rng,
                                            long batch) const {
  if (batch < 1) throw std::invalid_argument("stochastic_gradient: batch must be >= 1");
  std::vector<long> idx = sample_indices(rng, data_->n, batch);
  return minibatch_gradient(x, idx);
}

std::vector<ParamVector> MlpProblem::hidden_activations(const ParamVector& x,
                                                        std::span<const double> input) const {
  check_dim(x, dim_, "mlp");
  if (static_cast<long>(input.size()) != spec_.input)
    throw std::invalid_argument("hidden_activations: input length mismatch");
  Pass pass;
  forward(x, input, pass);
  return std::vector<ParamVector>(pass.act.begin() + 1, pass.act.end());
}

std::unique_ptr<Problem> make_mlp(MlpSpec spec, std::shared_ptr<const Dataset> data,
                                  RngStream& init_rng) {
  return std::make_unique<MlpProblem>(std::move(spec), std::move(data), init_rng);
}

// ---------------------------------------------------------------------------

DescentLemmaReport descent_lemma_check(const Problem& p, const ParamVector& x,
                                       const ParamVector& xb, std::optional<double> l_override) {
  double L;
  if (l_override) {
    L = *l_override;
  } else if (auto kc = p.known_constants()) {
    L = kc->L;
  } else {
    throw std::invalid_argument(
        "descent_lemma_check: problem has no known Lipschitz constant and no override given");
  }
  if (L < 0.0) throw std::invalid_argument("descent_lemma_check: L must be >= 0");
  check_same_length(x, xb, "descent_lemma_check");
  const ParamVector g = p.full_gradient(xb);
  double lin = 0.0, dist2 = 0.0;
  for (size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - xb[i];
    lin += g[i] * dx;
    dist2 += dx * dx;
  }
  DescentLemmaReport r;
  r.f_x = p.loss(x);
  r.quad_model = p.loss(xb) + lin + 0.5 * L * dist2;
  r.slack = r.quad_model - r.f_x;
  return r;
}

Dataset synthetic_blobs(long n, long p, long C, double spread, RngStream& rng) {
  if (C < 2) throw std::invalid_argument("synthetic_blobs: C must be >= 2");
  if (n < C) throw std::invalid_argument("synthetic_blobs: n must be >= C");
  if (p < 1) throw std::invalid_argument("synthetic_blobs: p must be >= 1");
  if (spread < 0.0) throw std::invalid_argument("synthetic_blobs: spread must be >= 0");

  std::vector<double> centers(static_cast<size_t>(C) * p);
  for (double& v : centers) v = rng.next_gaussian();

  Dataset d;
  d.n = n;
  d.p = p;
  d.C = C;
  d.features.reserve(static_cast<size_t>(n) * p);
  d.labels.reserve(n);
  const long base = n / C;
  const long extra = n % C;
  for (long c = 0; c < C; ++c) {
    const long count = base + (c < extra ? 1 : 0);
    const double* mu = centers.data() + c * p;
    for (long i = 0; i < count; ++i) {
      for (long j = 0; j < p; ++j) d.features.push_back(mu[j] + spread * rng.next_gaussian());
      d.labels.push_back(static_cast<int>(c));
    }
  }
  return d;
}

// ---------------------------------------------------------------------------

EpochSampler::EpochSampler(long n, long batch, RngStream rng)
    : n_(n), batch_(std::min(batch, n)), rng_(std::move(rng)), cursor_(0) {
  if (n < 1) throw std::invalid_argument("EpochSampler: n must be >= 1");
  if (batch < 1) throw std::invalid_argument("EpochSampler: batch must be >= 1");
  order_.resize(n_);
  std::iota(order_.begin(), order_.end(), 0L);
  shuffle();
}

void EpochSampler::shuffle() {
  for (long i = n_ - 1; i > 0; --i) {
    const long j = static_cast<long>(uniform_below(rng_, static_cast<uint64_t>(i) + 1));
    std::swap(order_[i], order_[j]);
  }
  cursor_ = 0;
}

std::vector<long> EpochSampler::next() {
  if (cursor_ == n_) shuffle();
  const long take = std::min(batch_, n_ - cursor_);
  std::vector<long> out(order_.begin() + cursor_, order_.begin() + cursor_ + take);
  cursor_ += take;
  if (cursor_ == n_) ++epochs_;
  return out;
}

}  // namespace limopt
