#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace limopt {

struct RunRow {
  long iter = 0;
  double loss = 0.0;
  double grad_norm = 0.0;
  double step_norm = 0.0;
  double alpha_k = 0.0;
  double gamma_k = 0.0;
};

// A training run: ordered `# key=value` manifest lines followed by the
// per-iteration table. iter is strictly increasing and every real is finite.
struct RunRecord {
  std::vector<std::pair<std::string, std::string>> manifest;
  std::vector<RunRow> rows;
};

std::optional<std::string> manifest_value(const RunRecord& r, const std::string& key);

// CSV layout: manifest first, then the header
// `iter,loss,grad_norm,step_norm,alpha_k,gamma_k`, then one row per
// iteration. Reals are written with 17 significant digits, so a round-trip
// through write/read reproduces every bit.
void write_run_csv(const RunRecord& r, const std::string& path);
RunRecord read_run_csv(const std::string& path);

}  // namespace limopt
