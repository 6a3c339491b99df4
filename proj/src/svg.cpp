#include "qsi/svg.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "qsi/errors.hpp"

namespace qsi::svg {

namespace {

struct Range {
  double lo = 0.0;
  double hi = 1.0;
  double map(double v, double out_lo, double out_hi) const {
    const double t = (v - lo) / (hi - lo);
    return out_lo + t * (out_hi - out_lo);
  }
};

Range data_range(const Plot& plot, bool y_axis) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const auto& s : plot.series) {
    const auto& vals = y_axis ? s.y : s.x;
    for (size_t i = 0; i < vals.size(); ++i) {
      double v = vals[i];
      if (!std::isfinite(v)) continue;
      double err = (y_axis && i < s.yerr.size() && std::isfinite(s.yerr[i])) ? s.yerr[i] : 0.0;
      lo = std::min(lo, v - err);
      hi = std::max(hi, v + err);
    }
  }
  if (!std::isfinite(lo) || !std::isfinite(hi)) return {0.0, 1.0};
  if (hi - lo < 1e-12) {
    lo -= 0.5;
    hi += 0.5;
  }
  const double pad = 0.05 * (hi - lo);
  return {lo - pad, hi + pad};
}

std::string fmt(double v) {
  std::ostringstream ss;
  ss.precision(6);
  ss << v;
  return ss.str();
}

}  // namespace

std::string render(const Plot& plot) {
  const double ml = 70, mr = 20, mt = 40, mb = 55;
  const double x0 = ml, x1 = plot.width - mr;
  const double y0 = plot.height - mb, y1 = mt;  // svg y grows downward
  const Range rx = data_range(plot, false);
  const Range ry = data_range(plot, true);

  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << plot.width << "\" height=\""
      << plot.height << "\" viewBox=\"0 0 " << plot.width << " " << plot.height << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << plot.width / 2 << "\" y=\"22\" text-anchor=\"middle\" "
      << "font-family=\"sans-serif\" font-size=\"15\">" << plot.title << "</text>\n";

  // axes
  out << "<line x1=\"" << x0 << "\" y1=\"" << y0 << "\" x2=\"" << x1 << "\" y2=\"" << y0
      << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << x0 << "\" y1=\"" << y0 << "\" x2=\"" << x0 << "\" y2=\"" << y1
      << "\" stroke=\"black\"/>\n";

  const int n_ticks = 6;
  for (int t = 0; t < n_ticks; ++t) {
    const double fx = rx.lo + (rx.hi - rx.lo) * t / (n_ticks - 1);
    const double px = rx.map(fx, x0, x1);
    out << "<line x1=\"" << px << "\" y1=\"" << y0 << "\" x2=\"" << px << "\" y2=\"" << y0 + 5
        << "\" stroke=\"black\"/>\n";
    out << "<text x=\"" << px << "\" y=\"" << y0 + 20
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" << fmt(fx)
        << "</text>\n";
    const double fy = ry.lo + (ry.hi - ry.lo) * t / (n_ticks - 1);
    const double py = ry.map(fy, y0, y1);
    out << "<line x1=\"" << x0 - 5 << "\" y1=\"" << py << "\" x2=\"" << x0 << "\" y2=\"" << py
        << "\" stroke=\"black\"/>\n";
    out << "<text x=\"" << x0 - 8 << "\" y=\"" << py + 4
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" << fmt(fy)
        << "</text>\n";
  }
  out << "<text x=\"" << (x0 + x1) / 2 << "\" y=\"" << plot.height - 12
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">" << plot.x_label
      << "</text>\n";
  out << "<text x=\"16\" y=\"" << (y0 + y1) / 2 << "\" text-anchor=\"middle\" "
      << "font-family=\"sans-serif\" font-size=\"13\" transform=\"rotate(-90 16 "
      << (y0 + y1) / 2 << ")\">" << plot.y_label << "</text>\n";

  double legend_y = mt + 4;
  for (const auto& s : plot.series) {
    if (s.line) {
      out << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.5\" points=\"";
      for (size_t i = 0; i < s.x.size(); ++i) {
        if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
        out << rx.map(s.x[i], x0, x1) << "," << ry.map(s.y[i], y0, y1) << " ";
      }
      out << "\"/>\n";
    } else {
      for (size_t i = 0; i < s.x.size(); ++i) {
        if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
        const double px = rx.map(s.x[i], x0, x1);
        const double py = ry.map(s.y[i], y0, y1);
        if (i < s.yerr.size() && std::isfinite(s.yerr[i]) && s.yerr[i] > 0.0) {
          const double ea = ry.map(s.y[i] - s.yerr[i], y0, y1);
          const double eb = ry.map(s.y[i] + s.yerr[i], y0, y1);
          out << "<line x1=\"" << px << "\" y1=\"" << ea << "\" x2=\"" << px << "\" y2=\"" << eb
              << "\" stroke=\"" << s.color << "\"/>\n";
          out << "<line x1=\"" << px - 3 << "\" y1=\"" << ea << "\" x2=\"" << px + 3 << "\" y2=\""
              << ea << "\" stroke=\"" << s.color << "\"/>\n";
          out << "<line x1=\"" << px - 3 << "\" y1=\"" << eb << "\" x2=\"" << px + 3 << "\" y2=\""
              << eb << "\" stroke=\"" << s.color << "\"/>\n";
        }
        out << "<circle cx=\"" << px << "\" cy=\"" << py << "\" r=\"2.5\" fill=\"" << s.color
            << "\"/>\n";
      }
    }
    if (!s.label.empty()) {
      out << "<line x1=\"" << x1 - 120 << "\" y1=\"" << legend_y << "\" x2=\"" << x1 - 100
          << "\" y2=\"" << legend_y << "\" stroke=\"" << s.color << "\" stroke-width=\"2\"/>\n";
      out << "<text x=\"" << x1 - 94 << "\" y=\"" << legend_y + 4
          << "\" font-family=\"sans-serif\" font-size=\"11\">" << s.label << "</text>\n";
      legend_y += 16;
    }
  }
  out << "</svg>\n";
  return out.str();
}

void write(const std::filesystem::path& path, const Plot& plot) {
  std::ofstream out(path);
  if (!out) throw qsi::FormatError("svg: cannot open for writing: " + path.string());
  out << render(plot);
}

}  // namespace qsi::svg
