#include "limopt/run_record.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string_view>

#include "limopt/errors.hpp"

namespace limopt {
namespace {

constexpr const char* kHeader = "iter,loss,grad_norm,step_norm,alpha_k,gamma_k";

std::string fmt17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void require_finite_row(const RunRow& r, size_t index) {
  const double vals[] = {r.loss, r.grad_norm, r.step_norm, r.alpha_k, r.gamma_k};
  for (double v : vals) {
    if (!std::isfinite(v)) {
      std::ostringstream os;
      os << "run record: non-finite value in row " << index << " (iter " << r.iter << ")";
      throw std::invalid_argument(os.str());
    }
  }
}

[[noreturn]] void parse_fail(const std::string& path, size_t line_no, const std::string& what) {
  std::ostringstream os;
  os << path << ":" << line_no << ": " << what;
  throw FormatError(os.str());
}

double parse_real(const std::string& path, size_t line_no, std::string_view field) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc() || ptr != field.data() + field.size())
    parse_fail(path, line_no, "bad real value '" + std::string(field) + "'");
  if (!std::isfinite(v))
    parse_fail(path, line_no, "non-finite value '" + std::string(field) + "'");
  return v;
}

long parse_iter(const std::string& path, size_t line_no, std::string_view field) {
  long v = 0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc() || ptr != field.data() + field.size())
    parse_fail(path, line_no, "bad iteration count '" + std::string(field) + "'");
  return v;
}

}  // namespace

std::optional<std::string> manifest_value(const RunRecord& r, const std::string& key) {
  for (const auto& [k, v] : r.manifest)
    if (k == key) return v;
  return std::nullopt;
}

void write_run_csv(const RunRecord& r, const std::string& path) {
  long prev = -1;
  for (size_t i = 0; i < r.rows.size(); ++i) {
    if (r.rows[i].iter <= prev) {
      std::ostringstream os;
      os << "run record: iter not strictly increasing at row " << i;
      throw std::invalid_argument(os.str());
    }
    prev = r.rows[i].iter;
    require_finite_row(r.rows[i], i);
  }
  for (const auto& [k, v] : r.manifest) {
    if (k.empty() || k.find('=') != std::string::npos || k.find('\n') != std::string::npos ||
        v.find('\n') != std::string::npos)
      throw std::invalid_argument("run record: manifest key/value must be line-safe and '='-free");
  }

  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("write_run_csv: cannot open " + path + " for writing");
  for (const auto& [k, v] : r.manifest) out << "# " << k << "=" << v << "\n";
  out << kHeader << "\n";
  for (const RunRow& row : r.rows) {
    out << row.iter << ',' << fmt17(row.loss) << ',' << fmt17(row.grad_norm) << ','
        << fmt17(row.step_norm) << ',' << fmt17(row.alpha_k) << ',' << fmt17(row.gamma_k) << "\n";
  }
  out.flush();
  if (!out) throw IoError("write_run_csv: write failure on " + path);
}

RunRecord read_run_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("read_run_csv: cannot open " + path);

  RunRecord rec;
  std::string line;
  size_t line_no = 0;
  bool header_seen = false;
  long prev_iter = -1;

  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) {
      if (in.peek() != EOF) parse_fail(path, line_no, "blank line inside table");
      continue;
    }
    if (line[0] == '#') {
      if (header_seen) parse_fail(path, line_no, "manifest line after header");
      size_t start = 1;
      while (start < line.size() && line[start] == ' ') ++start;
      const size_t eq = line.find('=', start);
      if (eq == std::string::npos || eq == start)
        parse_fail(path, line_no, "manifest line is not '# key=value'");
      rec.manifest.emplace_back(line.substr(start, eq - start), line.substr(eq + 1));
      continue;
    }
    if (!header_seen) {
      if (line != kHeader)
        parse_fail(path, line_no, "expected header '" + std::string(kHeader) + "', got '" + line + "'");
      header_seen = true;
      continue;
    }

    std::vector<std::string_view> fields;
    std::string_view rest = line;
    for (;;) {
      const size_t comma = rest.find(',');
      if (comma == std::string_view::npos) {
        fields.push_back(rest);
        break;
      }
      fields.push_back(rest.substr(0, comma));
      rest.remove_prefix(comma + 1);
    }
    if (fields.size() != 6) {
      std::ostringstream os;
      os << "expected 6 comma-separated fields, got " << fields.size();
      parse_fail(path, line_no, os.str());
    }
    RunRow row;
    row.iter = parse_iter(path, line_no, fields[0]);
    if (row.iter <= prev_iter) parse_fail(path, line_no, "iter not strictly increasing");
    prev_iter = row.iter;
    row.loss = parse_real(path, line_no, fields[1]);
    row.grad_norm = parse_real(path, line_no, fields[2]);
    row.step_norm = parse_real(path, line_no, fields[3]);
    row.alpha_k = parse_real(path, line_no, fields[4]);
    row.gamma_k = parse_real(path, line_no, fields[5]);
    rec.rows.push_back(row);
  }
  if (in.bad()) throw IoError("read_run_csv: read failure on " + path);
  if (!header_seen) parse_fail(path, line_no, "missing header line");
  return rec;
}

}  // namespace limopt
