#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"

#ifndef LIMOPT_CLI_PATH
#error "LIMOPT_CLI_PATH must point at the CLI binary"
#endif

namespace fs = std::filesystem;

namespace {

struct CliResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("limopt_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

CliResult run_cli(const std::string& args) {
  static int call = 0;
  const fs::path cap = fs::temp_directory_path() / "limopt_cli_capture";
  fs::create_directories(cap);
  const fs::path out = cap / ("out_" + std::to_string(call) + ".txt");
  const fs::path err = cap / ("err_" + std::to_string(call) + ".txt");
  ++call;

  const std::string cmd = std::string("\"") + LIMOPT_CLI_PATH + "\" " + args + " > " +
                          out.string() + " 2> " + err.string();
  const int status = std::system(cmd.c_str());

  CliResult r;
  if (WIFEXITED(status)) r.exit_code = WEXITSTATUS(status);
  r.out = slurp(out);
  r.err = slurp(err);
  return r;
}

// `# key=value` manifest lines at the top of a CSV
std::map<std::string, std::string> manifest_map(const fs::path& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  std::map<std::string, std::string> kv;
  std::string line;
  while (std::getline(in, line)) {
    if (line.size() < 2 || line[0] != '#') break;
    const size_t eq = line.find('=');
    if (eq == std::string::npos) continue;
    kv[line.substr(2, eq - 2)] = line.substr(eq + 1);
  }
  return kv;
}

size_t data_row_count(const fs::path& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  size_t rows = 0;
  bool seen_header = false;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!seen_header) {
      seen_header = true;
      continue;
    }
    ++rows;
  }
  return rows;
}

// enough of an XML scan to catch unbalanced or mangled SVG output
bool xml_well_formed(const std::string& text) {
  std::vector<std::string> stack;
  size_t i = 0;
  const size_t n = text.size();
  while (i < n) {
    if (text[i] != '<') {
      ++i;
      continue;
    }
    if (text.compare(i, 4, "<!--") == 0) {
      const size_t end = text.find("-->", i + 4);
      if (end == std::string::npos) return false;
      i = end + 3;
      continue;
    }
    if (text.compare(i, 2, "<?") == 0) {
      const size_t end = text.find("?>", i + 2);
      if (end == std::string::npos) return false;
      i = end + 2;
      continue;
    }
    size_t j = i + 1;
    char quote = 0;
    while (j < n && (quote != 0 || text[j] != '>')) {
      if (quote == 0 && (text[j] == '"' || text[j] == '\'')) quote = text[j];
      else if (text[j] == quote) quote = 0;
      ++j;
    }
    if (j >= n) return false;
    std::string tag = text.substr(i + 1, j - i - 1);
    i = j + 1;
    if (tag.empty()) return false;
    if (tag[0] == '/') {
      std::string name = tag.substr(1);
      while (!name.empty() && (name.back() == ' ' || name.back() == '\t')) name.pop_back();
      if (stack.empty() || stack.back() != name) return false;
      stack.pop_back();
      continue;
    }
    const bool self_closing = tag.back() == '/';
    if (self_closing) tag.pop_back();
    std::string name;
    for (char c : tag) {
      if (c == ' ' || c == '\t' || c == '\n' || c == '\r') break;
      name += c;
    }
    if (name.empty()) return false;
    if (!self_closing) stack.push_back(name);
  }
  return stack.empty();
}

}  // namespace

TEST_CASE("run: smoke, announcement, and determinism") {
  const fs::path a = fresh_dir("run_a");
  const fs::path b = fresh_dir("run_b");
  const std::string flags = "--problem quadratic --optimizer lim --alpha0 0.1 --iters 20 --seed 5";

  const CliResult r1 = run_cli("run " + flags + " --out " + a.string());
  CHECK(r1.exit_code == 0);
  const fs::path csv_a = a / "quadratic_lim_s5.csv";
  CHECK(r1.out == "wrote " + csv_a.string() + "\n");
  REQUIRE(fs::exists(csv_a));
  CHECK(data_row_count(csv_a) == 20);

  const CliResult r2 = run_cli("run " + flags + " --out " + b.string());
  CHECK(r2.exit_code == 0);
  CHECK(slurp(csv_a) == slurp(b / "quadratic_lim_s5.csv"));
}

TEST_CASE("run: usage errors exit 2 before writing anything") {
  const fs::path dir = fresh_dir("run_bad");

  const CliResult beta0 = run_cli("run --optimizer lim --beta 0 --out " + dir.string());
  CHECK(beta0.exit_code == 2);
  CHECK(beta0.err.find("usage error") != std::string::npos);

  const CliResult unknown = run_cli("run --problem cifar --out " + dir.string());
  CHECK(unknown.exit_code == 2);
  CHECK(unknown.err.find("unknown problem 'cifar'") != std::string::npos);

  CHECK(fs::is_empty(dir));
}

TEST_CASE("run: clashing output names are refused, exit 1") {
  const fs::path dir = fresh_dir("run_clash");
  const std::string cmd = "run --problem quadratic --iters 5 --seed 2 --out " + dir.string();
  CHECK(run_cli(cmd).exit_code == 0);

  const CliResult again = run_cli(cmd);
  CHECK(again.exit_code == 1);
  CHECK(again.err.find("io error") != std::string::npos);
  CHECK(again.err.find("refusing to overwrite") != std::string::npos);
}

TEST_CASE("run: config precedence is defaults < config file < flags") {
  const fs::path dir = fresh_dir("run_cfg");
  const fs::path cfg = dir / "exp.cfg";
  write_text(cfg,
             "# experiment defaults\n"
             "alpha0 = 0.05\n"
             "beta = 3\n"
             "seed = 77\n");

  const CliResult r = run_cli("run --config " + cfg.string() + " --alpha0 0.2 --iters 10 --out " +
                              dir.string());
  REQUIRE(r.exit_code == 0);

  const fs::path csv = dir / "quadratic_lim_s77.csv";  // seed came from the config
  REQUIRE(fs::exists(csv));
  const auto kv = manifest_map(csv);
  CHECK(std::stod(kv.at("alpha0")) == 0.2);  // flag beats config
  CHECK(std::stod(kv.at("beta")) == 3.0);    // config beats default
  CHECK(std::stod(kv.at("gamma")) == 0.9);   // untouched default
  CHECK(kv.at("iters") == "10");

  SUBCASE("unknown config key") {
    write_text(dir / "bad.cfg", "turbo = 1\n");
    const CliResult bad = run_cli("run --config " + (dir / "bad.cfg").string() + " --out " +
                                  dir.string());
    CHECK(bad.exit_code == 2);
    CHECK(bad.err.find("unknown key 'turbo'") != std::string::npos);
  }
  SUBCASE("missing config file") {
    const CliResult missing = run_cli("run --config " + (dir / "absent.cfg").string());
    CHECK(missing.exit_code == 1);
    CHECK(missing.err.find("cannot open config file") != std::string::npos);
  }
}

TEST_CASE("variance: table layout, exact column, determinism") {
  const fs::path a = fresh_dir("var_a");
  const fs::path b = fresh_dir("var_b");
  const std::string flags =
      "--problem noise --optimizer lim --beta 1 --alpha0 1 --k 2,3 --replicas 400 --seed 8";

  const CliResult r1 = run_cli("variance " + flags + " --out " + a.string());
  REQUIRE(r1.exit_code == 0);
  const fs::path csv = a / "variance_noise_lim_s8.csv";
  REQUIRE(fs::exists(csv));

  std::ifstream in(csv);
  std::string line;
  bool header = false;
  std::vector<std::vector<std::string>> rows;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!header) {
      CHECK(line == "k,estimate,standard_error,exact,bound_thm2,bound_thm3");
      header = true;
      continue;
    }
    std::vector<std::string> fields;
    std::string f;
    std::istringstream ls(line);
    while (std::getline(ls, f, ',')) fields.push_back(f);
    while (fields.size() < 6) fields.push_back("");
    rows.push_back(fields);
  }
  REQUIRE(rows.size() == 2);
  CHECK(rows[0][0] == "2");
  // d=10, sigma=1, beta=1, alpha0=1 at k=2: 10*(1/2 + 4/9)
  CHECK(std::stod(rows[0][3]) == doctest::Approx(85.0 / 9.0).epsilon(1e-12));
  CHECK(std::stod(rows[0][5]) > 0.0);  // thm3 column present for lim
  CHECK(rows[0][4].empty());           // thm2 column is sgdm-only

  const CliResult r2 = run_cli("variance " + flags + " --out " + b.string());
  REQUIRE(r2.exit_code == 0);
  CHECK(slurp(csv) == slurp(b / "variance_noise_lim_s8.csv"));

  SUBCASE("replica floor is a usage error") {
    const CliResult bad = run_cli("variance --replicas 1 --out " + a.string());
    CHECK(bad.exit_code == 2);
    CHECK(bad.err.find("usage error") != std::string::npos);
  }
}

TEST_CASE("sweep: expands the grid and writes the summary") {
  const fs::path dir = fresh_dir("sweep");
  write_text(dir / "grid.cfg", "optimizer = sgdm, lim\nalpha0 = 0.05, 0.1\n");
  const fs::path out = dir / "runs";

  const CliResult r = run_cli("sweep " + (dir / "grid.cfg").string() +
                              " --problem quadratic --iters 20 --seed 2 --out " + out.string());
  REQUIRE(r.exit_code == 0);
  CHECK(r.out.find("sweep_summary.csv") != std::string::npos);

  CHECK(fs::exists(out / "sweep_0_quadratic_sgdm_s2.csv"));
  CHECK(fs::exists(out / "sweep_1_quadratic_sgdm_s2.csv"));
  CHECK(fs::exists(out / "sweep_2_quadratic_lim_s2.csv"));
  CHECK(fs::exists(out / "sweep_3_quadratic_lim_s2.csv"));
  CHECK(data_row_count(out / "sweep_summary.csv") == 4);

  SUBCASE("unknown grid key") {
    write_text(dir / "bad.cfg", "warmup = 1, 2\n");
    const CliResult bad = run_cli("sweep " + (dir / "bad.cfg").string() + " --out " +
                                  (dir / "none").string());
    CHECK(bad.exit_code == 2);
    CHECK(bad.err.find("warmup") != std::string::npos);
  }
}

TEST_CASE("plot: well-formed SVG from run CSVs") {
  const fs::path dir = fresh_dir("plot");
  REQUIRE(run_cli("run --problem quadratic --optimizer sgdm --iters 25 --seed 1 --out " +
                  dir.string())
              .exit_code == 0);
  REQUIRE(run_cli("run --problem quadratic --optimizer lim --iters 25 --seed 1 --out " +
                  dir.string())
              .exit_code == 0);
  const std::string a = (dir / "quadratic_sgdm_s1.csv").string();
  const std::string b = (dir / "quadratic_lim_s1.csv").string();

  const fs::path svg = dir / "loss.svg";
  const CliResult r = run_cli("plot " + a + " " + b + " --out " + svg.string());
  REQUIRE(r.exit_code == 0);

  const std::string text = slurp(svg);
  CHECK(text.find("<svg") != std::string::npos);
  CHECK(text.find("version=\"1.1\"") != std::string::npos);
  CHECK(xml_well_formed(text));
  CHECK(text.find(">sgdm gamma=0.9 alpha0=0.1<") != std::string::npos);
  CHECK(text.find(">lim beta=2 alpha0=0.1<") != std::string::npos);

  SUBCASE("log-y variant") {
    const fs::path svg_log = dir / "loss_log.svg";
    CHECK(run_cli("plot " + a + " --log-y --out " + svg_log.string()).exit_code == 0);
    CHECK(xml_well_formed(slurp(svg_log)));
  }
  SUBCASE("overwrite refused") {
    CHECK(run_cli("plot " + a + " --out " + svg.string()).exit_code == 1);
  }
  SUBCASE("missing input") {
    const CliResult bad = run_cli("plot " + (dir / "absent.csv").string() + " --out " +
                                  (dir / "x.svg").string());
    CHECK(bad.exit_code == 1);
    CHECK(!fs::exists(dir / "x.svg"));
  }
}

TEST_CASE("check: exit status reflects the suite") {
  const CliResult clean = run_cli("check");
  CHECK(clean.exit_code == 0);
  size_t pass_lines = 0;
  std::istringstream is(clean.out);
  std::string line;
  while (std::getline(is, line))
    if (line.rfind("[PASS] ", 0) == 0) ++pass_lines;
  CHECK(pass_lines >= 6);
  CHECK(clean.out.find("[FAIL]") == std::string::npos);

  const CliResult corrupted = run_cli("check --corrupt-decay 0.05");
  CHECK(corrupted.exit_code == 1);
  CHECK(corrupted.out.find("[FAIL] ") != std::string::npos);
}

TEST_CASE("a subcommand is required") {
  CHECK(run_cli("").exit_code != 0);
}
