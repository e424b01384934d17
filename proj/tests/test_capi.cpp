#include <cctype>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "limopt.h"

namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("limopt_capi_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string last_error() { return limopt_last_error(); }

size_t count_lines(const fs::path& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  size_t n = 0;
  std::string line;
  while (std::getline(in, line)) ++n;
  return n;
}

}  // namespace

TEST_CASE("version and status names") {
  const char* v = limopt_version();
  REQUIRE(v != nullptr);
  CHECK(std::isdigit(static_cast<unsigned char>(v[0])));

  CHECK(std::string(limopt_status_name(LIMOPT_OK)) == "ok");
  CHECK(std::string(limopt_status_name(LIMOPT_ERR_USAGE)) == "usage error");
  CHECK(std::string(limopt_status_name(LIMOPT_ERR_IO)) == "io error");
  CHECK(std::string(limopt_status_name(LIMOPT_ERR_FORMAT)) == "format error");
  CHECK(std::string(limopt_status_name(LIMOPT_ERR_NUMERIC)) == "numeric error");
  CHECK(std::string(limopt_status_name(LIMOPT_ERR_INTERNAL)) == "internal error");
}

TEST_CASE("optimizer handle lifecycle for every kind") {
  const double x0[2] = {1.0, 2.0};
  const double g[2] = {1.0, -1.0};

  for (const char* kind : {"sgd", "sgdm", "lim", "adam"}) {
    CAPTURE(kind);
    limopt_optimizer* opt = nullptr;
    REQUIRE(limopt_optimizer_new(kind, x0, 2, 0.5, 0.9, 2.0, &opt) == LIMOPT_OK);
    REQUIRE(opt != nullptr);
    CHECK(limopt_optimizer_iterations(opt) == 0);

    CHECK(limopt_optimizer_step(opt, g, 2) == LIMOPT_OK);
    CHECK(limopt_optimizer_iterations(opt) == 1);

    double pos[2] = {0, 0};
    double step[2] = {0, 0};
    CHECK(limopt_optimizer_position(opt, pos, 2) == LIMOPT_OK);
    CHECK(limopt_optimizer_last_step(opt, step, 2) == LIMOPT_OK);
    CHECK(pos[0] == x0[0] + step[0]);
    CHECK(pos[1] == x0[1] + step[1]);

    // every kind's first step moves against the gradient; the non-adaptive
    // kinds move exactly -alpha_1 * g
    if (std::strcmp(kind, "adam") == 0) {
      CHECK(std::abs(std::abs(step[0]) - 0.5) <= 1e-6);
      CHECK(step[0] < 0.0);
      CHECK(step[1] > 0.0);
    } else {
      CHECK(step[0] == -0.5);
      CHECK(step[1] == 0.5);
    }
    limopt_optimizer_free(opt);
  }
}

TEST_CASE("lim handle matches the two-step hand computation") {
  const double x0[1] = {0.0};
  const double g[1] = {1.0};
  limopt_optimizer* opt = nullptr;
  REQUIRE(limopt_optimizer_new("lim", x0, 1, 1.0, 0.0, 2.0, &opt) == LIMOPT_OK);
  CHECK(limopt_optimizer_step(opt, g, 1) == LIMOPT_OK);
  CHECK(limopt_optimizer_step(opt, g, 1) == LIMOPT_OK);

  // m1 = -1, m2 = (2/3)^2 * m1 - 1/sqrt(2)
  const double m2 = -(4.0 / 9.0 + 1.0 / std::sqrt(2.0));
  double step[1];
  REQUIRE(limopt_optimizer_last_step(opt, step, 1) == LIMOPT_OK);
  CHECK(step[0] == doctest::Approx(m2).epsilon(1e-15));
  double pos[1];
  REQUIRE(limopt_optimizer_position(opt, pos, 1) == LIMOPT_OK);
  CHECK(pos[0] == doctest::Approx(-1.0 + m2).epsilon(1e-15));
  limopt_optimizer_free(opt);
}

TEST_CASE("optimizer handle error paths") {
  const double x0[2] = {0.0, 0.0};
  limopt_optimizer* opt = nullptr;

  CHECK(limopt_optimizer_new("nadam", x0, 2, 0.1, 0.9, 2.0, &opt) == LIMOPT_ERR_USAGE);
  CHECK(last_error().find("nadam") != std::string::npos);
  CHECK(limopt_optimizer_new(nullptr, x0, 2, 0.1, 0.9, 2.0, &opt) == LIMOPT_ERR_USAGE);
  CHECK(limopt_optimizer_new("sgd", nullptr, 2, 0.1, 0.9, 2.0, &opt) == LIMOPT_ERR_USAGE);
  CHECK(limopt_optimizer_new("sgd", x0, 0, 0.1, 0.9, 2.0, &opt) == LIMOPT_ERR_USAGE);
  CHECK(limopt_optimizer_new("sgd", x0, 2, 0.0, 0.9, 2.0, &opt) == LIMOPT_ERR_USAGE);
  CHECK(limopt_optimizer_new("sgdm", x0, 2, 0.1, 1.0, 2.0, &opt) == LIMOPT_ERR_USAGE);
  CHECK(limopt_optimizer_new("lim", x0, 2, 0.1, 0.9, 0.0, &opt) == LIMOPT_ERR_USAGE);

  REQUIRE(limopt_optimizer_new("sgd", x0, 2, 0.1, 0.9, 2.0, &opt) == LIMOPT_OK);
  const double g1[1] = {1.0};
  CHECK(limopt_optimizer_step(opt, g1, 1) == LIMOPT_ERR_USAGE);
  CHECK(limopt_optimizer_step(nullptr, g1, 1) == LIMOPT_ERR_USAGE);
  double out3[3];
  CHECK(limopt_optimizer_position(opt, out3, 3) == LIMOPT_ERR_USAGE);
  CHECK(last_error().find("dim mismatch") != std::string::npos);
  double out2[2];
  CHECK(limopt_optimizer_last_step(opt, out2, 2) == LIMOPT_ERR_USAGE);  // no step yet
  limopt_optimizer_free(opt);

  CHECK(limopt_optimizer_iterations(nullptr) == -1);
  limopt_optimizer_free(nullptr);
}

TEST_CASE("scalar helpers match hand values") {
  double out = 0.0;
  REQUIRE(limopt_step_size(0.5, 4, &out) == LIMOPT_OK);
  CHECK(out == 0.25);
  REQUIRE(limopt_decay_invprop(2.0, 3, &out) == LIMOPT_OK);
  CHECK(out == doctest::Approx(0.5625).epsilon(1e-15));

  // gamma=0.5, alpha0=1, k=2: w = (0.5, 1/sqrt(2)), sum of squares 0.75
  REQUIRE(limopt_exact_noise_variance_fixed(0.5, 1.0, 2, 1.0, &out) == LIMOPT_OK);
  CHECK(out == doctest::Approx(0.75).epsilon(1e-15));
  // beta=1, alpha0=1, k=2: w = (2/3, 1/sqrt(2)), sum of squares 1/2 + 4/9
  REQUIRE(limopt_exact_noise_variance_invprop(1.0, 1.0, 2, 1.0, &out) == LIMOPT_OK);
  CHECK(out == doctest::Approx(0.5 + 4.0 / 9.0).epsilon(1e-15));

  REQUIRE(limopt_bound_thm2(1.0, 0.5, 5.0, 0.0, 0.0, 0.0, 0.0, &out) == LIMOPT_OK);
  CHECK(out == doctest::Approx(5.0 / 0.75).epsilon(1e-15));
  REQUIRE(limopt_bound_thm3(1.0, 2.0, 20.0, 0.0, 0.0, 0.0, 0.0, &out) == LIMOPT_OK);
  CHECK(out == doctest::Approx(5.0).epsilon(1e-15));
}

TEST_CASE("scalar helper error paths") {
  double out = 0.0;
  CHECK(limopt_step_size(0.0, 1, &out) == LIMOPT_ERR_USAGE);
  CHECK(limopt_step_size(1.0, 0, &out) == LIMOPT_ERR_USAGE);
  CHECK(limopt_step_size(1.0, 1, nullptr) == LIMOPT_ERR_USAGE);
  CHECK(limopt_decay_invprop(0.0, 1, &out) == LIMOPT_ERR_USAGE);
  CHECK(limopt_decay_invprop(1.0, 0, &out) == LIMOPT_ERR_USAGE);
  CHECK(limopt_exact_noise_variance_fixed(1.0, 1.0, 2, 1.0, &out) == LIMOPT_ERR_USAGE);
  CHECK(limopt_exact_noise_variance_invprop(1.0, 1.0, 2, -1.0, &out) == LIMOPT_ERR_USAGE);
  CHECK(limopt_bound_thm2(1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, &out) == LIMOPT_ERR_USAGE);
  CHECK(limopt_bound_thm3(1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, &out) == LIMOPT_ERR_USAGE);
  CHECK(last_error().size() > 0);
}

TEST_CASE("run config defaults") {
  limopt_run_config cfg;
  limopt_run_config_defaults(&cfg);
  CHECK(std::string(cfg.problem) == "quadratic");
  CHECK(std::string(cfg.optimizer) == "lim");
  CHECK(cfg.alpha0 == 0.1);
  CHECK(cfg.gamma == 0.9);
  CHECK(cfg.beta == 2.0);
  CHECK(cfg.batch == 128);
  CHECK(cfg.iters == 1000);
  CHECK(cfg.seed == 1);
  CHECK(cfg.data == nullptr);
  CHECK(cfg.hidden_width == 128);
  CHECK(cfg.out_dir == nullptr);
  limopt_run_config_defaults(nullptr);  // tolerated
}

TEST_CASE("cmd_run through the C boundary") {
  const fs::path dir = fresh_dir("run");
  const std::string out_dir = dir.string();

  limopt_run_config cfg;
  limopt_run_config_defaults(&cfg);
  cfg.iters = 30;
  cfg.seed = 12;
  cfg.out_dir = out_dir.c_str();

  char path[512] = {0};
  REQUIRE(limopt_cmd_run(&cfg, path, sizeof path) == LIMOPT_OK);
  CHECK(std::string(path) == (dir / "quadratic_lim_s12.csv").string());
  CHECK(fs::exists(path));
  CHECK(count_lines(path) == 10 + 1 + 30);  // manifest, header, rows

  SUBCASE("second run refuses to overwrite") {
    CHECK(limopt_cmd_run(&cfg, path, sizeof path) == LIMOPT_ERR_IO);
    CHECK(last_error().find("refusing to overwrite") != std::string::npos);
  }
  SUBCASE("bad problem name") {
    cfg.problem = "mnist";
    CHECK(limopt_cmd_run(&cfg, path, sizeof path) == LIMOPT_ERR_USAGE);
    CHECK(last_error().find("mnist") != std::string::npos);
  }
  SUBCASE("null config") { CHECK(limopt_cmd_run(nullptr, path, sizeof path) == LIMOPT_ERR_USAGE); }
  SUBCASE("path truncation keeps the terminator") {
    cfg.seed = 13;
    char tiny[8];
    REQUIRE(limopt_cmd_run(&cfg, tiny, sizeof tiny) == LIMOPT_OK);
    CHECK(std::strlen(tiny) == 7);
  }
}

TEST_CASE("cmd_variance through the C boundary") {
  const fs::path dir = fresh_dir("variance");
  const std::string out_dir = dir.string();

  limopt_variance_config cfg;
  limopt_variance_config_defaults(&cfg);
  CHECK(std::string(cfg.problem) == "noise");
  CHECK(std::string(cfg.optimizer) == "lim");
  CHECK(cfg.replicas == 20000);

  const long ks[2] = {3, 5};
  cfg.ks = ks;
  cfg.n_ks = 2;
  cfg.replicas = 500;
  cfg.seed = 4;
  cfg.out_dir = out_dir.c_str();

  char path[512] = {0};
  REQUIRE(limopt_cmd_variance(&cfg, path, sizeof path) == LIMOPT_OK);
  CHECK(std::string(path) == (dir / "variance_noise_lim_s4.csv").string());

  std::ifstream in(path);
  std::string line;
  size_t header_at = 0, rows = 0, line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line == "k,estimate,standard_error,exact,bound_thm2,bound_thm3") header_at = line_no;
    else if (!line.empty() && line[0] != '#') ++rows;
  }
  CHECK(header_at > 0);
  CHECK(rows == 2);

  SUBCASE("replica floor") {
    cfg.replicas = 1;
    cfg.seed = 5;
    CHECK(limopt_cmd_variance(&cfg, path, sizeof path) == LIMOPT_ERR_USAGE);
    CHECK(last_error().find("replicas") != std::string::npos);
  }
  SUBCASE("only the momentum kinds are allowed") {
    cfg.optimizer = "sgd";
    cfg.seed = 6;
    CHECK(limopt_cmd_variance(&cfg, path, sizeof path) == LIMOPT_ERR_USAGE);
  }
  SUBCASE("ks null with positive count") {
    cfg.ks = nullptr;
    cfg.n_ks = 1;
    cfg.seed = 7;
    CHECK(limopt_cmd_variance(&cfg, path, sizeof path) == LIMOPT_ERR_USAGE);
  }
}

TEST_CASE("sweep, plot, and check through the C boundary") {
  const fs::path dir = fresh_dir("cmds");
  const std::string out_dir = (dir / "runs").string();

  const fs::path grid = dir / "grid.cfg";
  {
    std::ofstream g(grid);
    g << "optimizer = sgd, lim\n";
  }

  limopt_run_config base;
  limopt_run_config_defaults(&base);
  base.iters = 20;
  base.seed = 3;
  base.out_dir = out_dir.c_str();

  char summary[512] = {0};
  REQUIRE(limopt_cmd_sweep(grid.string().c_str(), &base, summary, sizeof summary) == LIMOPT_OK);
  CHECK(fs::path(summary).filename() == "sweep_summary.csv");
  CHECK(count_lines(summary) == 3);

  const std::string run0 = (fs::path(out_dir) / "sweep_0_quadratic_sgd_s3.csv").string();
  const std::string run1 = (fs::path(out_dir) / "sweep_1_quadratic_lim_s3.csv").string();
  REQUIRE(fs::exists(run0));
  REQUIRE(fs::exists(run1));

  const char* inputs[2] = {run0.c_str(), run1.c_str()};
  const std::string svg = (dir / "loss.svg").string();
  REQUIRE(limopt_cmd_plot(inputs, 2, svg.c_str(), 1) == LIMOPT_OK);
  CHECK(fs::exists(svg));
  CHECK(limopt_cmd_plot(inputs, 2, svg.c_str(), 1) == LIMOPT_ERR_IO);
  CHECK(limopt_cmd_plot(nullptr, 0, svg.c_str(), 0) == LIMOPT_ERR_USAGE);

  SUBCASE("sweep rejects an unknown grid key") {
    std::ofstream g(dir / "bad.cfg");
    g << "lr = 1\n";
    g.close();
    CHECK(limopt_cmd_sweep((dir / "bad.cfg").string().c_str(), &base, summary, sizeof summary) ==
          LIMOPT_ERR_USAGE);
  }
}

TEST_CASE("cmd_check reports pass/fail lines and a failure count") {
  std::string report(16384, '\0');
  int n_failed = -1;
  REQUIRE(limopt_cmd_check(0.0, report.data(), report.size(), &n_failed) == LIMOPT_OK);
  CHECK(n_failed == 0);
  const std::string clean(report.c_str());
  CHECK(clean.find("[PASS] ") != std::string::npos);
  CHECK(clean.find("[FAIL]") == std::string::npos);
  CHECK(clean.find("lim_closed_form") != std::string::npos);

  REQUIRE(limopt_cmd_check(0.05, report.data(), report.size(), &n_failed) == LIMOPT_OK);
  CHECK(n_failed >= 1);
  CHECK(std::string(report.c_str()).find("[FAIL] ") != std::string::npos);

  // a tiny buffer still comes back terminated
  char tiny[10];
  REQUIRE(limopt_cmd_check(0.0, tiny, sizeof tiny, nullptr) == LIMOPT_OK);
  CHECK(std::strlen(tiny) == 9);
}
