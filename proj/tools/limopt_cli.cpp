#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "limopt.h"

namespace {

int exit_code(limopt_status s) { return s == LIMOPT_ERR_USAGE ? 2 : 1; }

int report_failure(limopt_status s) {
  std::cerr << "error (" << limopt_status_name(s) << "): " << limopt_last_error() << "\n";
  return exit_code(s);
}

// `# `-commented key=value file. Returned in file order.
std::vector<std::pair<std::string, std::string>> read_kv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    std::cerr << "error (io error): cannot open config file " << path << "\n";
    std::exit(1);
  }
  auto trim = [](std::string s) {
    const size_t a = s.find_first_not_of(" \t");
    if (a == std::string::npos) return std::string();
    const size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
  };
  std::vector<std::pair<std::string, std::string>> out;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string stripped = trim(line);
    if (stripped.empty() || stripped[0] == '#') continue;
    const size_t eq = stripped.find('=');
    if (eq == std::string::npos || eq == 0) {
      std::cerr << "error (format error): " << path << ":" << line_no
                << ": expected 'key=value'\n";
      std::exit(1);
    }
    out.emplace_back(trim(stripped.substr(0, eq)), trim(stripped.substr(eq + 1)));
  }
  return out;
}

// Applies config-file values to any option the user did not pass on the
// command line, so precedence is defaults < config file < flags.
void layer_config(CLI::App* cmd, const std::string& config_path) {
  if (config_path.empty()) return;
  for (const auto& [key, value] : read_kv_file(config_path)) {
    CLI::Option* opt = cmd->get_option_no_throw("--" + key);
    if (!opt) {
      std::cerr << "error (usage error): config file " << config_path << ": unknown key '" << key
                << "'\n";
      std::exit(2);
    }
    if (opt->count() > 0) continue;  // flag wins
    opt->add_result(value);
    opt->run_callback();
  }
}

struct RunFlags {
  std::string problem = "quadratic";
  std::string optimizer = "lim";
  double alpha0 = 0.1;
  double gamma = 0.9;
  double beta = 2.0;
  long batch = 128;
  long iters = 1000;
  unsigned long long seed = 1;
  std::string data;
  long hidden_width = 128;
  std::string out_dir = ".";
  std::string config;
};

void add_run_options(CLI::App* cmd, RunFlags& f) {
  cmd->add_option("--problem", f.problem, "problem: noise|quadratic|logreg|mlp2|mlp3");
  cmd->add_option("--optimizer", f.optimizer, "optimizer: sgd|sgdm|lim|adam");
  cmd->add_option("--alpha0", f.alpha0, "base stepsize; alpha_k = alpha0/sqrt(k)");
  cmd->add_option("--gamma", f.gamma, "fixed momentum decay (sgdm)");
  cmd->add_option("--beta", f.beta, "inverse-proportional decay exponent (lim)");
  cmd->add_option("--batch", f.batch, "minibatch size");
  cmd->add_option("--iters", f.iters, "iterations");
  cmd->add_option("--seed", f.seed, "master seed");
  cmd->add_option("--data", f.data, "IDX directory (train-images-idx3-ubyte etc.)");
  cmd->add_option("--hidden-width", f.hidden_width, "MLP hidden width");
  cmd->add_option("--out", f.out_dir, "output directory");
  cmd->add_option("--config", f.config, "key=value config file; flags override");
}

limopt_run_config to_config(const RunFlags& f) {
  limopt_run_config cfg;
  limopt_run_config_defaults(&cfg);
  cfg.problem = f.problem.c_str();
  cfg.optimizer = f.optimizer.c_str();
  cfg.alpha0 = f.alpha0;
  cfg.gamma = f.gamma;
  cfg.beta = f.beta;
  cfg.batch = f.batch;
  cfg.iters = f.iters;
  cfg.seed = f.seed;
  cfg.data = f.data.empty() ? nullptr : f.data.c_str();
  cfg.hidden_width = f.hidden_width;
  cfg.out_dir = f.out_dir.c_str();
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"momentum-schedule experiments: training runs, direction-variance "
               "measurements, sweeps, plots, and self-checks"};
  app.require_subcommand(1);

  CLI::App* run = app.add_subcommand("run", "train one optimizer and write a run CSV");
  RunFlags run_flags;
  add_run_options(run, run_flags);

  CLI::App* variance =
      app.add_subcommand("variance", "Monte Carlo variance of the update direction at fixed k");
  RunFlags var_flags;
  var_flags.problem = "noise";
  std::vector<long> var_ks;
  long var_replicas = 20000;
  variance->add_option("--problem", var_flags.problem, "problem: noise|quadratic");
  variance->add_option("--optimizer", var_flags.optimizer, "optimizer: sgdm|lim");
  variance->add_option("--alpha0", var_flags.alpha0, "base stepsize");
  variance->add_option("--gamma", var_flags.gamma, "fixed momentum decay (sgdm)");
  variance->add_option("--beta", var_flags.beta, "inverse-proportional decay exponent (lim)");
  variance->add_option("--k", var_ks, "iterations to measure at (comma list)")->delimiter(',');
  variance->add_option("--replicas", var_replicas, "independent trajectories per k");
  variance->add_option("--seed", var_flags.seed, "master seed");
  variance->add_option("--out", var_flags.out_dir, "output directory");
  variance->add_option("--config", var_flags.config, "key=value config file; flags override");

  CLI::App* sweep = app.add_subcommand("sweep", "Cartesian hyperparameter sweep from a grid file");
  std::string grid_path;
  RunFlags sweep_flags;
  sweep->add_option("grid", grid_path, "grid file: key=comma,separated,values lines")->required();
  add_run_options(sweep, sweep_flags);

  CLI::App* plot = app.add_subcommand("plot", "render run CSVs as an SVG chart");
  std::vector<std::string> plot_inputs;
  std::string plot_out;
  bool log_y = false;
  plot->add_option("inputs", plot_inputs, "run CSV files")->required();
  plot->add_option("--out", plot_out, "output SVG path")->required();
  plot->add_flag("--log-y", log_y, "log-scale y axis");

  CLI::App* check = app.add_subcommand("check", "run the fast self-check suite");
  double corrupt_decay = 0.0;
  check->add_option("--corrupt-decay", corrupt_decay,
                    "perturb decay factors in the closed-form reconstruction (mutation hook)")
      ->group("");  // hidden

  CLI11_PARSE(app, argc, argv);

  char path_buf[4096] = {0};

  if (run->parsed()) {
    layer_config(run, run_flags.config);
    const limopt_run_config cfg = to_config(run_flags);
    const limopt_status s = limopt_cmd_run(&cfg, path_buf, sizeof path_buf);
    if (s != LIMOPT_OK) return report_failure(s);
    std::cout << "wrote " << path_buf << "\n";
    return 0;
  }

  if (variance->parsed()) {
    layer_config(variance, var_flags.config);
    limopt_variance_config cfg;
    limopt_variance_config_defaults(&cfg);
    cfg.problem = var_flags.problem.c_str();
    cfg.optimizer = var_flags.optimizer.c_str();
    cfg.alpha0 = var_flags.alpha0;
    cfg.gamma = var_flags.gamma;
    cfg.beta = var_flags.beta;
    if (!var_ks.empty()) {
      cfg.ks = var_ks.data();
      cfg.n_ks = var_ks.size();
    }
    cfg.replicas = var_replicas;
    cfg.seed = var_flags.seed;
    cfg.out_dir = var_flags.out_dir.c_str();
    const limopt_status s = limopt_cmd_variance(&cfg, path_buf, sizeof path_buf);
    if (s != LIMOPT_OK) return report_failure(s);
    std::cout << "wrote " << path_buf << "\n";
    return 0;
  }

  if (sweep->parsed()) {
    layer_config(sweep, sweep_flags.config);
    const limopt_run_config base = to_config(sweep_flags);
    const limopt_status s = limopt_cmd_sweep(grid_path.c_str(), &base, path_buf, sizeof path_buf);
    if (s != LIMOPT_OK) return report_failure(s);
    std::cout << "wrote " << path_buf << "\n";
    return 0;
  }

  if (plot->parsed()) {
    std::vector<const char*> inputs;
    inputs.reserve(plot_inputs.size());
    for (const std::string& p : plot_inputs) inputs.push_back(p.c_str());
    const limopt_status s =
        limopt_cmd_plot(inputs.data(), inputs.size(), plot_out.c_str(), log_y ? 1 : 0);
    if (s != LIMOPT_OK) return report_failure(s);
    std::cout << "wrote " << plot_out << "\n";
    return 0;
  }

  if (check->parsed()) {
    std::string report(16384, '\0');
    int n_failed = 0;
    const limopt_status s =
        limopt_cmd_check(corrupt_decay, report.data(), report.size(), &n_failed);
    if (s != LIMOPT_OK) return report_failure(s);
    std::cout << report.c_str();
    return n_failed == 0 ? 0 : 1;
  }

  return 0;
}
