#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "limopt/optimizer.hpp"
#include "limopt/problems.hpp"
#include "limopt/run_record.hpp"
#include "limopt/variance.hpp"

namespace limopt {

enum class ProblemChoice { Noise, Quadratic, LogReg, Mlp2, Mlp3 };

const char* problem_name(ProblemChoice p);
ProblemChoice problem_from_name(const std::string& name);

// One training run. Defaults mirror the experiment setup the optimizers were
// studied under: minibatch 128 and alpha_k = alpha0/sqrt(k).
struct ExperimentConfig {
  ProblemChoice problem = ProblemChoice::Quadratic;
  OptimizerKind optimizer = OptimizerKind::Lim;
  double alpha0 = 0.1;
  double gamma = 0.9;  // sgdm
  double beta = 2.0;   // lim
  long batch = 128;
  long iters = 1000;
  uint64_t seed = 1;
  std::string data_path;  // IDX directory for logreg/mlp; empty = synthetic blobs
  long hidden_width = 128;
  std::string out_dir = ".";
};

void validate(const ExperimentConfig& cfg);

// `<problem>_<optimizer>_s<seed>.csv`
std::string run_filename(const ExperimentConfig& cfg);

// Builds the problem a config trains on. Deterministic in (cfg.problem,
// cfg.seed, cfg.data_path, cfg.hidden_width).
std::unique_ptr<Problem> build_problem(const ExperimentConfig& cfg, std::ostream* log);

// Starting point for a run: (2,2,2,2) on the quadratic, the problem's own
// initial parameters otherwise.
ParamVector run_start_point(const ExperimentConfig& cfg, const Problem& p);

// Executes the training loop and writes the run CSV into out_dir (refusing to
// overwrite). Loss rows: every iteration (exact loss) on noise/quadratic;
// every 10th iteration (batch loss) plus full-dataset rows at epoch ends and
// at the final iteration on the classification problems. Notices (synthetic
// fallback, decay-domain warnings) go to `log` when non-null; file bytes
// depend only on the config. Returns the record and the path written.
std::pair<RunRecord, std::string> cmd_run(const ExperimentConfig& cfg, std::ostream* log);

struct VarianceCmdConfig {
  ProblemChoice problem = ProblemChoice::Noise;  // noise or quadratic
  OptimizerKind optimizer = OptimizerKind::Lim;  // sgdm or lim
  double alpha0 = 0.1;
  double gamma = 0.9;
  double beta = 2.0;
  std::vector<long> ks = {10, 50};
  long replicas = 20000;
  uint64_t seed = 1;
  std::string out_dir = ".";
};

// Monte Carlo direction-variance table, one row per requested k, written as
// `variance_<problem>_<optimizer>_s<seed>.csv` with columns
// k,estimate,standard_error,exact,bound_thm2,bound_thm3. Analytic columns are
// filled for the noise oracle and left empty on the quadratic, whose v_k
// mixes trajectory and noise randomness. Returns reports and the path.
std::pair<std::vector<VarianceReport>, std::string> cmd_variance(const VarianceCmdConfig& cfg,
                                                                 std::ostream* log);

// `# `-commented key=value lines; returns pairs in file order.
std::vector<std::pair<std::string, std::string>> parse_kv_file(const std::string& path);

struct SweepResult {
  std::string summary_path;
  std::vector<std::string> run_paths;
};

// Cartesian sweep over a grid file whose values are comma-separated lists
// (keys are the run flags: optimizer, alpha0, gamma, beta, ...). Each setting
// becomes one run CSV named `sweep_<index>_<problem>_<optimizer>_s<seed>.csv`
// plus a row in `sweep_summary.csv`: final loss, mean loss over the last 10%
// of recorded rows, and a best=1 flag on each optimizer's lowest mean.
SweepResult cmd_sweep(const std::string& grid_path, const ExperimentConfig& base,
                      std::ostream* log);

// Reads run CSVs and renders their loss curves into one SVG. Series are named
// from each file's manifest (optimizer plus its hyperparameters).
void cmd_plot(const std::vector<std::string>& inputs, const std::string& out_path, bool log_y);

struct CheckResult {
  std::string name;
  bool pass = false;
  std::string detail;
};

// Fast self-check suite: closed-form/recursion equivalences, weight
// telescoping, the geometric-sum identity, the descent lemma, gradient
// checks, the first Adam step, and the stepsize divergence floor.
// corrupt_decay perturbs the decay factors used by the closed-form
// reconstruction (a mutation hook proving the equivalence checks can fail);
// 0 disables it.
std::vector<CheckResult> run_checks(double corrupt_decay);

}  // namespace limopt
