#include "limopt/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "limopt/errors.hpp"

namespace limopt {
namespace {

constexpr double kWidth = 960, kHeight = 600;
constexpr double kLeft = 70, kRight = 935, kTop = 25, kBottom = 555;

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                          "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};

std::string xml_escape(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string num(double v, const char* spec = "%.2f") {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

void pad_if_flat(double& lo, double& hi) {
  if (hi - lo > 0.0) return;
  const double pad = 0.5 * std::max(1.0, std::abs(lo));
  lo -= pad;
  hi += pad;
}

// 1/2/5 tick ladder, ~6 ticks.
std::vector<double> nice_ticks(double lo, double hi) {
  const double raw = (hi - lo) / 5.0;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  const double r = raw / mag;
  const double step = (r < 1.5 ? 1.0 : r < 3.5 ? 2.0 : r < 7.5 ? 5.0 : 10.0) * mag;
  std::vector<double> ticks;
  double t = std::ceil(lo / step - 1e-9) * step;
  for (; t <= hi + 1e-9 * step; t += step) ticks.push_back(t == 0.0 ? 0.0 : t);
  return ticks;
}

// Integer decades within [lo, hi] (log10 space); falls back to the 1/2/5
// ladder when the range spans less than two decades.
std::vector<double> decade_ticks(double lo, double hi) {
  std::vector<double> ticks;
  for (long p = static_cast<long>(std::ceil(lo - 1e-9)); p <= std::floor(hi + 1e-9); ++p)
    ticks.push_back(static_cast<double>(p));
  if (ticks.size() < 2) return nice_ticks(lo, hi);
  return ticks;
}

}  // namespace

void write_svg_curves(const std::vector<CurveSeries>& series, const std::string& path,
                      bool log_y) {
  if (series.empty())
    throw std::invalid_argument("write_svg_curves: needs at least one series");
  for (const CurveSeries& s : series) {
    if (s.points.size() < 2) {
      std::ostringstream os;
      os << "write_svg_curves: series '" << s.name << "' has " << s.points.size()
         << " points, needs at least 2";
      throw std::invalid_argument(os.str());
    }
    for (size_t i = 0; i < s.points.size(); ++i) {
      const auto& [x, y] = s.points[i];
      if (!std::isfinite(x) || !std::isfinite(y)) {
        std::ostringstream os;
        os << "write_svg_curves: non-finite point " << i << " in series '" << s.name << "'";
        throw std::invalid_argument(os.str());
      }
      if (log_y && y <= 0.0) {
        std::ostringstream os;
        os << "write_svg_curves: log scale requires positive values; series '" << s.name
           << "' point " << i << " is " << y;
        throw std::invalid_argument(os.str());
      }
    }
  }

  auto yval = [log_y](double y) { return log_y ? std::log10(y) : y; };

  double xlo = series[0].points[0].first, xhi = xlo;
  double ylo = yval(series[0].points[0].second), yhi = ylo;
  for (const CurveSeries& s : series)
    for (const auto& [x, y] : s.points) {
      xlo = std::min(xlo, x);
      xhi = std::max(xhi, x);
      ylo = std::min(ylo, yval(y));
      yhi = std::max(yhi, yval(y));
    }
  pad_if_flat(xlo, xhi);
  pad_if_flat(ylo, yhi);

  const std::vector<double> xticks = nice_ticks(xlo, xhi);
  const std::vector<double> yticks = log_y ? decade_ticks(ylo, yhi) : nice_ticks(ylo, yhi);

  auto tx = [&](double x) { return kLeft + (x - xlo) / (xhi - xlo) * (kRight - kLeft); };
  auto ty = [&](double y) { return kBottom - (yval(y) - ylo) / (yhi - ylo) * (kBottom - kTop); };
  auto ty_raw = [&](double v) { return kBottom - (v - ylo) / (yhi - ylo) * (kBottom - kTop); };

  std::ostringstream out;
  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"960\" "
         "height=\"600\" viewBox=\"0 0 960 600\">\n"
      << "<rect x=\"0\" y=\"0\" width=\"" << num(kWidth) << "\" height=\"" << num(kHeight)
      << "\" fill=\"white\"/>\n";

  // grid + tick labels
  for (double t : xticks) {
    const double px = tx(t);
    out << "<line x1=\"" << num(px) << "\" y1=\"" << num(kTop) << "\" x2=\"" << num(px)
        << "\" y2=\"" << num(kBottom) << "\" stroke=\"#dddddd\" stroke-width=\"1\"/>\n";
    out << "<text x=\"" << num(px) << "\" y=\"" << num(kBottom + 20)
        << "\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\">"
        << num(t, "%g") << "</text>\n";
  }
  for (double t : yticks) {
    const double py = ty_raw(t);
    const double label = log_y ? std::pow(10.0, t) : t;
    out << "<line x1=\"" << num(kLeft) << "\" y1=\"" << num(py) << "\" x2=\"" << num(kRight)
        << "\" y2=\"" << num(py) << "\" stroke=\"#dddddd\" stroke-width=\"1\"/>\n";
    out << "<text x=\"" << num(kLeft - 8) << "\" y=\"" << num(py + 4)
        << "\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"end\">"
        << num(label, "%g") << "</text>\n";
  }

  // axes
  out << "<line x1=\"" << num(kLeft) << "\" y1=\"" << num(kTop) << "\" x2=\"" << num(kLeft)
      << "\" y2=\"" << num(kBottom) << "\" stroke=\"black\" stroke-width=\"1.5\"/>\n";
  out << "<line x1=\"" << num(kLeft) << "\" y1=\"" << num(kBottom) << "\" x2=\"" << num(kRight)
      << "\" y2=\"" << num(kBottom) << "\" stroke=\"black\" stroke-width=\"1.5\"/>\n";
  out << "<text x=\"" << num((kLeft + kRight) / 2) << "\" y=\"" << num(kBottom + 38)
      << "\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\">iteration"
      << "</text>\n";

  // curves
  for (size_t i = 0; i < series.size(); ++i) {
    const char* color = kPalette[i % (sizeof kPalette / sizeof kPalette[0])];
    out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    for (size_t j = 0; j < series[i].points.size(); ++j) {
      if (j) out << ' ';
      out << num(tx(series[i].points[j].first)) << ',' << num(ty(series[i].points[j].second));
    }
    out << "\"/>\n";
  }

  // legend, top-right inside the plot
  const double lx = kRight - 250, ly0 = kTop + 14;
  for (size_t i = 0; i < series.size(); ++i) {
    const char* color = kPalette[i % (sizeof kPalette / sizeof kPalette[0])];
    const double ly = ly0 + 18.0 * static_cast<double>(i);
    out << "<line x1=\"" << num(lx) << "\" y1=\"" << num(ly - 4) << "\" x2=\"" << num(lx + 28)
        << "\" y2=\"" << num(ly - 4) << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    out << "<text x=\"" << num(lx + 34) << "\" y=\"" << num(ly)
        << "\" font-family=\"sans-serif\" font-size=\"13\">" << xml_escape(series[i].name)
        << "</text>\n";
  }

  out << "</svg>\n";

  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("write_svg_curves: cannot open " + path + " for writing");
  f << out.str();
  f.flush();
  if (!f) throw IoError("write_svg_curves: write failure on " + path);
}

}  // namespace limopt
