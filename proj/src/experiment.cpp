#include "limopt/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "limopt/errors.hpp"
#include "limopt/gradcheck.hpp"
#include "limopt/idx.hpp"
#include "limopt/schedules.hpp"
#include "limopt/svg.hpp"

namespace fs = std::filesystem;

namespace limopt {
namespace {

// Stream roles per master seed; replica indices used elsewhere stay clear of
// these by living in a different command.
constexpr uint64_t kDataStream = 1000;
constexpr uint64_t kInitStream = 1001;
constexpr uint64_t kBatchStream = 1002;
constexpr uint64_t kNoiseStream = 1003;

std::string fmt17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmtg(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t");
  return s.substr(a, b - a + 1);
}

double parse_double(const std::string& s, const std::string& what) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v))
    throw std::invalid_argument(what + ": bad real value '" + s + "'");
  return v;
}

long parse_long(const std::string& s, const std::string& what) {
  long v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw std::invalid_argument(what + ": bad integer '" + s + "'");
  return v;
}

uint64_t parse_u64(const std::string& s, const std::string& what) {
  uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw std::invalid_argument(what + ": bad unsigned integer '" + s + "'");
  return v;
}

bool is_classification(ProblemChoice p) {
  return p == ProblemChoice::LogReg || p == ProblemChoice::Mlp2 || p == ProblemChoice::Mlp3;
}

DecaySchedule run_decay(const ExperimentConfig& cfg) {
  if (cfg.optimizer == OptimizerKind::Sgdm) return DecaySchedule::fixed(cfg.gamma);
  return DecaySchedule::inverse_proportional(cfg.beta);
}

double gamma_at(const ExperimentConfig& cfg, long k) {
  switch (cfg.optimizer) {
    case OptimizerKind::Sgdm:
    case OptimizerKind::Lim: return decay_factor(run_decay(cfg), k);
    default: return 0.0;
  }
}

Optimizer make_optimizer(const ExperimentConfig& cfg, ParamVector x0) {
  const StepSchedule step{cfg.alpha0};
  switch (cfg.optimizer) {
    case OptimizerKind::Sgd: return Optimizer::sgd(std::move(x0), step);
    case OptimizerKind::Sgdm:
      return Optimizer::sgdm(std::move(x0), step, DecaySchedule::fixed(cfg.gamma));
    case OptimizerKind::Lim:
      return Optimizer::lim(std::move(x0), step, DecaySchedule::inverse_proportional(cfg.beta));
    case OptimizerKind::Adam: return Optimizer::adam(std::move(x0), step);
  }
  throw std::invalid_argument("make_optimizer: unknown optimizer kind");
}

std::shared_ptr<const Dataset> build_dataset(const ExperimentConfig& cfg, std::ostream* log) {
  if (!cfg.data_path.empty()) {
    const fs::path dir(cfg.data_path);
    const IdxTensor images = load_idx((dir / "train-images-idx3-ubyte").string());
    const IdxTensor labels = load_idx((dir / "train-labels-idx1-ubyte").string());
    return std::make_shared<const Dataset>(to_dataset(images, labels, true));
  }
  if (log)
    *log << "note: no data path given; falling back to synthetic blobs "
            "(n=10000, p=50, C=10, spread=1)\n";
  RngStream data_rng(cfg.seed, kDataStream);
  return std::make_shared<const Dataset>(synthetic_blobs(10000, 50, 10, 1.0, data_rng));
}

std::string data_manifest_value(const ExperimentConfig& cfg) {
  if (!is_classification(cfg.problem)) return "none";
  return cfg.data_path.empty() ? "synthetic-blobs" : cfg.data_path;
}

fs::path prepare_output(const std::string& out_dir, const std::string& filename,
                        const char* who) {
  const fs::path dir = out_dir.empty() ? fs::path(".") : fs::path(out_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError(std::string(who) + ": cannot create directory " + dir.string());
  const fs::path path = dir / filename;
  if (fs::exists(path))
    throw IoError(std::string(who) + ": refusing to overwrite " + path.string());
  return path;
}

std::pair<RunRecord, std::string> run_impl(const ExperimentConfig& cfg,
                                           const std::string& filename, std::ostream* log) {
  validate(cfg);
  if (cfg.optimizer == OptimizerKind::Lim) {
    if (auto warn = DecaySchedule::inverse_proportional(cfg.beta).domain_warning(); warn && log)
      *log << "warning: " << *warn << "\n";
  }

  const std::unique_ptr<Problem> problem = build_problem(cfg, log);
  Optimizer opt = make_optimizer(cfg, run_start_point(cfg, *problem));
  const StepSchedule step{cfg.alpha0};

  RunRecord rec;
  rec.manifest = {
      {"problem", problem_name(cfg.problem)},
      {"optimizer", optimizer_kind_name(cfg.optimizer)},
      {"alpha0", fmt17(cfg.alpha0)},
      {"gamma", fmt17(cfg.gamma)},
      {"beta", fmt17(cfg.beta)},
      {"batch", std::to_string(cfg.batch)},
      {"iters", std::to_string(cfg.iters)},
      {"seed", std::to_string(cfg.seed)},
      {"hidden_width", std::to_string(cfg.hidden_width)},
      {"data", data_manifest_value(cfg)},
  };

  if (!is_classification(cfg.problem)) {
    RngStream noise_rng(cfg.seed, kNoiseStream);
    for (long k = 1; k <= cfg.iters; ++k) {
      opt.step(problem->stochastic_gradient(opt.x(), noise_rng, cfg.batch));
      RunRow row;
      row.iter = k;
      row.loss = problem->loss(opt.x());
      row.grad_norm = norm2(problem->full_gradient(opt.x()));
      row.step_norm = norm2(opt.last_displacement());
      row.alpha_k = step_size(step, k);
      row.gamma_k = gamma_at(cfg, k);
      rec.rows.push_back(row);
    }
  } else {
    EpochSampler sampler(problem->sample_count(), cfg.batch, RngStream(cfg.seed, kBatchStream));
    for (long k = 1; k <= cfg.iters; ++k) {
      const std::vector<long> idx = sampler.next();
      const ParamVector g = problem->minibatch_gradient(opt.x(), idx);
      const bool tenth = (k % 10 == 0);
      // batch loss at the pre-step iterate: the cost the step was taken on
      const double batch_loss = tenth ? problem->minibatch_loss(opt.x(), idx) : 0.0;
      opt.step(g);
      const bool full = sampler.epoch_just_finished() || k == cfg.iters;
      if (!full && !tenth) continue;
      RunRow row;
      row.iter = k;
      if (full) {
        row.loss = problem->loss(opt.x());
        row.grad_norm = norm2(problem->full_gradient(opt.x()));
      } else {
        row.loss = batch_loss;
        row.grad_norm = norm2(g);
      }
      row.step_norm = norm2(opt.last_displacement());
      row.alpha_k = step_size(step, k);
      row.gamma_k = gamma_at(cfg, k);
      rec.rows.push_back(row);
    }
  }

  const fs::path path = prepare_output(cfg.out_dir, filename, "cmd_run");
  write_run_csv(rec, path.string());
  return {std::move(rec), path.string()};
}

}  // namespace

const char* problem_name(ProblemChoice p) {
  switch (p) {
    case ProblemChoice::Noise: return "noise";
    case ProblemChoice::Quadratic: return "quadratic";
    case ProblemChoice::LogReg: return "logreg";
    case ProblemChoice::Mlp2: return "mlp2";
    case ProblemChoice::Mlp3: return "mlp3";
  }
  return "?";
}

ProblemChoice problem_from_name(const std::string& name) {
  if (name == "noise") return ProblemChoice::Noise;
  if (name == "quadratic") return ProblemChoice::Quadratic;
  if (name == "logreg") return ProblemChoice::LogReg;
  if (name == "mlp2") return ProblemChoice::Mlp2;
  if (name == "mlp3") return ProblemChoice::Mlp3;
  throw std::invalid_argument("unknown problem '" + name +
                              "' (expected noise, quadratic, logreg, mlp2, or mlp3)");
}

void validate(const ExperimentConfig& cfg) {
  if (!(cfg.alpha0 > 0.0)) throw std::invalid_argument("config: alpha0 must be > 0");
  if (cfg.batch < 1) throw std::invalid_argument("config: batch must be >= 1");
  if (cfg.iters < 1) throw std::invalid_argument("config: iters must be >= 1");
  if (cfg.hidden_width < 1) throw std::invalid_argument("config: hidden-width must be >= 1");
  run_decay(cfg);  // validates gamma/beta for the active optimizer
}

std::string run_filename(const ExperimentConfig& cfg) {
  std::ostringstream os;
  os << problem_name(cfg.problem) << "_" << optimizer_kind_name(cfg.optimizer) << "_s" << cfg.seed
     << ".csv";
  return os.str();
}

std::unique_ptr<Problem> build_problem(const ExperimentConfig& cfg, std::ostream* log) {
  switch (cfg.problem) {
    case ProblemChoice::Noise: return make_pure_noise(10, 1.0);
    case ProblemChoice::Quadratic:
      return make_noisy_quadratic_diag({0.25, 0.5, 0.75, 1.0}, 0.1, 0.0);
    case ProblemChoice::LogReg: return make_softmax_regression(build_dataset(cfg, log));
    case ProblemChoice::Mlp2:
    case ProblemChoice::Mlp3: {
      const std::shared_ptr<const Dataset> data = build_dataset(cfg, log);
      MlpSpec spec;
      spec.input = data->p;
      spec.output = data->C;
      const long layers = (cfg.problem == ProblemChoice::Mlp2) ? 2 : 3;
      spec.hidden.assign(layers, cfg.hidden_width);
      RngStream init_rng(cfg.seed, kInitStream);
      return make_mlp(std::move(spec), data, init_rng);
    }
  }
  throw std::invalid_argument("build_problem: unknown problem");
}

ParamVector run_start_point(const ExperimentConfig& cfg, const Problem& p) {
  if (cfg.problem == ProblemChoice::Quadratic) return ParamVector(p.dim(), 2.0);
  return p.initial_parameters();
}

std::pair<RunRecord, std::string> cmd_run(const ExperimentConfig& cfg, std::ostream* log) {
  return run_impl(cfg, run_filename(cfg), log);
}

std::pair<std::vector<VarianceReport>, std::string> cmd_variance(const VarianceCmdConfig& cfg,
                                                                 std::ostream* log) {
  if (cfg.problem != ProblemChoice::Noise && cfg.problem != ProblemChoice::Quadratic)
    throw std::invalid_argument("cmd_variance: problem must be noise or quadratic");
  if (cfg.optimizer != OptimizerKind::Sgdm && cfg.optimizer != OptimizerKind::Lim)
    throw std::invalid_argument("cmd_variance: optimizer must be sgdm or lim");
  if (!(cfg.alpha0 > 0.0)) throw std::invalid_argument("cmd_variance: alpha0 must be > 0");
  if (cfg.ks.empty()) throw std::invalid_argument("cmd_variance: needs at least one k");
  for (long k : cfg.ks)
    if (k < 1) throw std::invalid_argument("cmd_variance: every k must be >= 1");

  const std::unique_ptr<Problem> problem = cfg.problem == ProblemChoice::Noise
                                               ? make_pure_noise(10, 1.0)
                                               : make_noisy_quadratic_diag(
                                                     {0.25, 0.5, 0.75, 1.0}, 0.1, 0.0);
  McConfig mc;
  mc.kind = cfg.optimizer;
  mc.step = StepSchedule{cfg.alpha0};
  mc.decay = (cfg.optimizer == OptimizerKind::Sgdm)
                 ? DecaySchedule::fixed(cfg.gamma)
                 : DecaySchedule::inverse_proportional(cfg.beta);
  mc.x0 = (cfg.problem == ProblemChoice::Quadratic) ? ParamVector(problem->dim(), 2.0)
                                                    : problem->initial_parameters();
  mc.batch = 1;

  std::vector<VarianceReport> reports;
  reports.reserve(cfg.ks.size());
  for (long k : cfg.ks) {
    reports.push_back(monte_carlo_direction_variance(*problem, mc, k, cfg.replicas, cfg.seed));
    if (log && reports.back().exact && cfg.optimizer == OptimizerKind::Lim) {
      // companion value under the other published weight form, (j/k)^beta
      const double paper = exact_noise_variance_paper_weights(
          cfg.beta, mc.step, k, problem->known_constants()->M);
      *log << "k=" << k << " exact=" << fmtg(*reports.back().exact)
           << " alt-weights=" << fmtg(paper) << "\n";
    }
  }

  std::ostringstream name;
  name << "variance_" << problem_name(cfg.problem) << "_" << optimizer_kind_name(cfg.optimizer)
       << "_s" << cfg.seed << ".csv";
  const fs::path path = prepare_output(cfg.out_dir, name.str(), "cmd_variance");

  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cmd_variance: cannot open " + path.string() + " for writing");
  out << "# problem=" << problem_name(cfg.problem) << "\n"
      << "# optimizer=" << optimizer_kind_name(cfg.optimizer) << "\n"
      << "# alpha0=" << fmt17(cfg.alpha0) << "\n";
  if (cfg.optimizer == OptimizerKind::Sgdm)
    out << "# gamma=" << fmt17(cfg.gamma) << "\n";
  else
    out << "# beta=" << fmt17(cfg.beta) << "\n";
  out << "# replicas=" << cfg.replicas << "\n"
      << "# seed=" << cfg.seed << "\n"
      << "k,estimate,standard_error,exact,bound_thm2,bound_thm3\n";
  for (const VarianceReport& r : reports) {
    out << r.k << ',' << fmt17(r.estimate) << ',' << fmt17(r.standard_error) << ',';
    if (r.exact) out << fmt17(*r.exact);
    out << ',';
    if (r.bound_thm2) out << fmt17(*r.bound_thm2);
    out << ',';
    if (r.bound_thm3) out << fmt17(*r.bound_thm3);
    out << "\n";
  }
  out.flush();
  if (!out) throw IoError("cmd_variance: write failure on " + path.string());
  return {std::move(reports), path.string()};
}

std::vector<std::pair<std::string, std::string>> parse_kv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::vector<std::pair<std::string, std::string>> out;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::string stripped = trim(line);
    if (stripped.empty() || stripped[0] == '#') continue;
    const size_t eq = stripped.find('=');
    if (eq == std::string::npos || eq == 0) {
      std::ostringstream os;
      os << path << ":" << line_no << ": expected 'key=value'";
      throw FormatError(os.str());
    }
    out.emplace_back(trim(stripped.substr(0, eq)), trim(stripped.substr(eq + 1)));
  }
  if (in.bad()) throw IoError("read failure on " + path);
  return out;
}

namespace {

void apply_run_key(ExperimentConfig& cfg, const std::string& key, const std::string& value) {
  if (key == "problem") {
    cfg.problem = problem_from_name(value);
  } else if (key == "optimizer") {
    cfg.optimizer = optimizer_kind_from_name(value);
  } else if (key == "alpha0") {
    cfg.alpha0 = parse_double(value, "alpha0");
  } else if (key == "gamma") {
    cfg.gamma = parse_double(value, "gamma");
  } else if (key == "beta") {
    cfg.beta = parse_double(value, "beta");
  } else if (key == "batch") {
    cfg.batch = parse_long(value, "batch");
  } else if (key == "iters") {
    cfg.iters = parse_long(value, "iters");
  } else if (key == "seed") {
    cfg.seed = parse_u64(value, "seed");
  } else if (key == "hidden-width") {
    cfg.hidden_width = parse_long(value, "hidden-width");
  } else if (key == "data") {
    cfg.data_path = value;
  } else {
    throw std::invalid_argument("unknown parameter '" + key + "'");
  }
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> out;
  std::string rest = value;
  for (;;) {
    const size_t comma = rest.find(',');
    if (comma == std::string::npos) {
      out.push_back(trim(rest));
      break;
    }
    out.push_back(trim(rest.substr(0, comma)));
    rest = rest.substr(comma + 1);
  }
  return out;
}

}  // namespace

SweepResult cmd_sweep(const std::string& grid_path, const ExperimentConfig& base,
                      std::ostream* log) {
  struct Axis {
    std::string key;
    std::vector<std::string> values;
  };
  std::vector<Axis> grid;
  for (const auto& [key, value] : parse_kv_file(grid_path)) {
    if (key == "out")
      throw std::invalid_argument("cmd_sweep: parameter 'out' cannot be swept");
    for (const Axis& a : grid)
      if (a.key == key)
        throw std::invalid_argument("cmd_sweep: duplicate grid parameter '" + key + "'");
    Axis axis;
    axis.key = key;
    axis.values = split_list(value);
    for (const std::string& v : axis.values)
      if (v.empty())
        throw std::invalid_argument("cmd_sweep: empty value in list for '" + key + "'");
    {
      // validate the key name (and value syntax) before running anything
      ExperimentConfig probe = base;
      try {
        apply_run_key(probe, key, axis.values[0]);
      } catch (const std::invalid_argument& e) {
        throw std::invalid_argument(std::string("cmd_sweep: ") + e.what());
      }
    }
    grid.push_back(std::move(axis));
  }

  size_t total = 1;
  for (const Axis& a : grid) total *= a.values.size();

  struct Row {
    std::string file;
    std::string setting;
    std::string optimizer;
    double final_loss = 0.0;
    double mean_last10 = 0.0;
  };
  std::vector<Row> rows;
  SweepResult result;

  for (size_t index = 0; index < total; ++index) {
    ExperimentConfig cfg = base;
    std::string setting;
    size_t rem = index;
    // first grid key varies slowest
    for (size_t a = grid.size(); a-- > 0;) {
      const size_t n = grid[a].values.size();
      const std::string& v = grid[a].values[rem % n];
      rem /= n;
      apply_run_key(cfg, grid[a].key, v);
      const std::string part = grid[a].key + "=" + v;
      setting = setting.empty() ? part : part + ";" + setting;
    }
    if (setting.empty()) setting = "base";
    validate(cfg);

    std::ostringstream fname;
    fname << "sweep_" << index << "_" << run_filename(cfg);
    auto [rec, path] = run_impl(cfg, fname.str(), log);
    result.run_paths.push_back(path);

    Row row;
    row.file = fname.str();
    row.setting = setting;
    row.optimizer = optimizer_kind_name(cfg.optimizer);
    row.final_loss = rec.rows.back().loss;
    const size_t n = rec.rows.size();
    const size_t tail = std::max<size_t>(1, n / 10);
    double acc = 0.0;
    for (size_t i = n - tail; i < n; ++i) acc += rec.rows[i].loss;
    row.mean_last10 = acc / static_cast<double>(tail);
    rows.push_back(std::move(row));
  }

  // flag each optimizer's lowest mean-last10 rows
  std::vector<int> best(rows.size(), 0);
  for (size_t i = 0; i < rows.size(); ++i) {
    double min_mean = rows[i].mean_last10;
    for (const Row& r : rows)
      if (r.optimizer == rows[i].optimizer) min_mean = std::min(min_mean, r.mean_last10);
    best[i] = (rows[i].mean_last10 == min_mean) ? 1 : 0;
  }

  const fs::path path = prepare_output(base.out_dir, "sweep_summary.csv", "cmd_sweep");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cmd_sweep: cannot open " + path.string() + " for writing");
  out << "index,file,setting,optimizer,final_loss,mean_last10,best\n";
  for (size_t i = 0; i < rows.size(); ++i) {
    out << i << ',' << rows[i].file << ',' << rows[i].setting << ',' << rows[i].optimizer << ','
        << fmt17(rows[i].final_loss) << ',' << fmt17(rows[i].mean_last10) << ',' << best[i]
        << "\n";
  }
  out.flush();
  if (!out) throw IoError("cmd_sweep: write failure on " + path.string());
  result.summary_path = path.string();
  return result;
}

void cmd_plot(const std::vector<std::string>& inputs, const std::string& out_path, bool log_y) {
  if (inputs.empty()) throw std::invalid_argument("cmd_plot: needs at least one input CSV");
  std::vector<CurveSeries> series;
  for (const std::string& input : inputs) {
    const RunRecord rec = read_run_csv(input);
    const auto opt = manifest_value(rec, "optimizer");
    if (!opt) throw FormatError(input + ": manifest missing the 'optimizer' key");
    std::string name = *opt;
    auto append_param = [&](const char* key) {
      if (const auto v = manifest_value(rec, key))
        name += std::string(" ") + key + "=" + fmtg(parse_double(*v, key));
    };
    if (*opt == "sgdm") append_param("gamma");
    if (*opt == "lim") append_param("beta");
    append_param("alpha0");
    CurveSeries s;
    s.name = std::move(name);
    s.points.reserve(rec.rows.size());
    for (const RunRow& row : rec.rows)
      s.points.emplace_back(static_cast<double>(row.iter), row.loss);
    series.push_back(std::move(s));
  }
  if (fs::exists(out_path))
    throw IoError("cmd_plot: refusing to overwrite " + out_path);
  write_svg_curves(series, out_path, log_y);
}

}  // namespace limopt
