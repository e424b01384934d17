#pragma once

#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "limopt/rng.hpp"
#include "limopt/vec.hpp"

namespace limopt {

// Constants under which the gradient-noise variance bound
//   tr Cov[g(x)] <= M + M_V * |grad F(x)|^2
// holds, plus the Lipschitz constant L of the full gradient.
struct KnownConstants {
  double L = 0.0;
  double M = 0.0;
  double M_V = 0.0;
};

// A stochastic objective. Problems are immutable after construction; all
// randomness enters through the caller's RngStream, so concurrent use with
// distinct streams is deterministic. stochastic_gradient is unbiased:
// E[stochastic_gradient(x)] = full_gradient(x).
class Problem {
 public:
  virtual ~Problem() = default;

  virtual long dim() const = 0;
  virtual double loss(const ParamVector& x) const = 0;
  virtual ParamVector full_gradient(const ParamVector& x) const = 0;
  virtual ParamVector stochastic_gradient(const ParamVector& x, RngStream& rng,
                                          long batch) const = 0;
  virtual std::optional<KnownConstants> known_constants() const { return std::nullopt; }

  // Conventional starting point for training runs on this problem.
  virtual ParamVector initial_parameters() const { return ParamVector(dim(), 0.0); }

  // Dataset-backed problems additionally evaluate on explicit sample indices;
  // the defaults reject the call.
  virtual long sample_count() const { return 0; }
  virtual double minibatch_loss(const ParamVector& x, std::span<const long> idx) const;
  virtual ParamVector minibatch_gradient(const ParamVector& x, std::span<const long> idx) const;
};

struct Dataset {
  long n = 0;
  long p = 0;
  long C = 0;
  std::vector<double> features;  // n x p, row-major
  std::vector<int> labels;       // each in [0, C)
};

void validate_dataset(const Dataset& d);

struct MlpSpec {
  long input = 0;
  std::vector<long> hidden;  // at least one hidden layer, ReLU
  long output = 0;           // softmax cross-entropy head
};

// F == 0 with i.i.d. N(0, sigma^2) gradient noise; every update direction is
// pure noise, which makes the momentum variance sums exact. Constants:
// L = 0, M = d*sigma^2, M_V = 0.
std::unique_ptr<Problem> make_pure_noise(long d, double sigma);

// F(x) = x'Ax/2 with gradient noise N(0, (sigma^2 + c*|Ax|^2/d) I), so the
// variance bound holds with equality: L = lambda_max(A), M = d*sigma^2,
// M_V = c. A is dense row-major, symmetric positive definite.
std::unique_ptr<Problem> make_noisy_quadratic(std::vector<double> A, long d, double sigma,
                                              double c);
std::unique_ptr<Problem> make_noisy_quadratic_diag(const std::vector<double>& diag, double sigma,
                                                   double c);

// Multinomial logistic regression on a dataset: a C x p weight matrix plus C
// biases flattened into one parameter vector; loss is the mean NLL.
class SoftmaxRegressionProblem final : public Problem {
 public:
  explicit SoftmaxRegressionProblem(std::shared_ptr<const Dataset> data);

  long dim() const override;
  double loss(const ParamVector& x) const override;
  ParamVector full_gradient(const ParamVector& x) const override;
  ParamVector stochastic_gradient(const ParamVector& x, RngStream& rng,
                                  long batch) const override;
  long sample_count() const override;
  double minibatch_loss(const ParamVector& x, std::span<const long> idx) const override;
  ParamVector minibatch_gradient(const ParamVector& x, std::span<const long> idx) const override;

  // Class probabilities for one feature row under parameters x.
  ParamVector class_probabilities(const ParamVector& x, std::span<const double> row) const;

 private:
  std::shared_ptr<const Dataset> data_;
};

std::unique_ptr<Problem> make_softmax_regression(std::shared_ptr<const Dataset> data);

// Fully connected ReLU network with a softmax cross-entropy head; forward and
// backward passes are written out by hand. Parameters are all layers' weights
// (row-major, then biases) flattened in layer order. initial_parameters()
// returns the N(0, 1/fan_in) weight draw taken at construction (biases zero).
class MlpProblem final : public Problem {
 public:
  MlpProblem(MlpSpec spec, std::shared_ptr<const Dataset> data, RngStream& init_rng);

  long dim() const override;
  double loss(const ParamVector& x) const override;
  ParamVector full_gradient(const ParamVector& x) const override;
  ParamVector stochastic_gradient(const ParamVector& x, RngStream& rng,
                                  long batch) const override;
  ParamVector initial_parameters() const override { return init_; }
  long sample_count() const override;
  double minibatch_loss(const ParamVector& x, std::span<const long> idx) const override;
  ParamVector minibatch_gradient(const ParamVector& x, std::span<const long> idx) const override;

  const MlpSpec& spec() const { return spec_; }
  // Post-ReLU activations of each hidden layer for one input row.
  std::vector<ParamVector> hidden_activations(const ParamVector& x,
                                              std::span<const double> input) const;

 private:
  struct Pass;
  void forward(const ParamVector& x, std::span<const double> input, Pass& pass) const;
  double sample_loss_grad(const ParamVector& x, long sample, ParamVector* grad) const;

  MlpSpec spec_;
  std::shared_ptr<const Dataset> data_;
  std::vector<long> w_offsets_;  // per layer: weight block start
  std::vector<long> b_offsets_;  // per layer: bias block start
  long dim_ = 0;
  ParamVector init_;
};

std::unique_ptr<Problem> make_mlp(MlpSpec spec, std::shared_ptr<const Dataset> data,
                                  RngStream& init_rng);

struct DescentLemmaReport {
  double f_x = 0.0;         // F(x)
  double quad_model = 0.0;  // F(xb) + grad F(xb)'(x-xb) + (L/2)|x-xb|^2
  double slack = 0.0;       // quad_model - f_x; negative means a violation
};

// Checks F(x) <= F(xb) + grad F(xb)'(x-xb) + (L/2)|x-xb|^2 with the problem's
// known L. l_override substitutes an empirical bound for problems without one
// (a heuristic, not a certificate).
DescentLemmaReport descent_lemma_check(const Problem& p, const ParamVector& x,
                                       const ParamVector& xb,
                                       std::optional<double> l_override = std::nullopt);

// C Gaussian clusters with N(0, I) centers and the given within-class spread;
// class counts equal up to one. Deterministic given the stream.
Dataset synthetic_blobs(long n, long p, long C, double spread, RngStream& rng);

// Without-replacement minibatch order: a fresh shuffle every epoch, consumed
// in chunks of `batch` (the final chunk of an epoch may be short). Owning the
// epoch cursor here keeps Problem immutable.
class EpochSampler {
 public:
  EpochSampler(long n, long batch, RngStream rng);

  std::vector<long> next();
  long epochs_completed() const { return epochs_; }
  // True when the batch returned by the most recent next() closed an epoch.
  bool epoch_just_finished() const { return cursor_ == n_; }

 private:
  void shuffle();

  long n_;
  long batch_;
  RngStream rng_;
  std::vector<long> order_;
  long cursor_;
  long epochs_ = 0;
};

}  // namespace limopt
