#include "neos/harness/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "neos/error.hpp"

namespace neos::harness {

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string tick(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      default: out += c;
    }
  }
  return out;
}

struct Range {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  void add(double v) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  bool empty() const { return !(lo <= hi); }
  void pad() {
    if (empty()) {
      lo = 0;
      hi = 1;
    } else if (hi - lo < 1e-300 * std::max(1.0, std::abs(hi))) {
      lo -= 0.5;
      hi += 0.5;
    }
  }
};

void render_panel(std::ostringstream& s, const Panel& p, double ox, double oy, double w, double h) {
  const double ml = 62, mr = 12, mt = 26, mb = 40;
  const double pw = w - ml - mr, ph = h - mt - mb;
  auto ty = [&](double y) { return p.log_y ? std::log10(y) : y; };
  auto usable = [&](double y) { return std::isfinite(y) && (!p.log_y || y > 0); };

  Range xr, yr;
  for (const auto& ser : p.series)
    for (std::size_t i = 0; i < ser.x.size() && i < ser.y.size(); ++i)
      if (std::isfinite(ser.x[i]) && usable(ser.y[i])) {
        xr.add(ser.x[i]);
        yr.add(ty(ser.y[i]));
      }
  if (p.vline) xr.add(*p.vline);
  xr.pad();
  yr.pad();
  const double ypad = 0.05 * (yr.hi - yr.lo);
  yr.lo -= ypad;
  yr.hi += ypad;
  auto px = [&](double x) { return ox + ml + (x - xr.lo) / (xr.hi - xr.lo) * pw; };
  auto py = [&](double y) { return oy + mt + ph - (ty(y) - yr.lo) / (yr.hi - yr.lo) * ph; };

  s << "<rect x=\"" << num(ox + ml) << "\" y=\"" << num(oy + mt) << "\" width=\"" << num(pw) << "\" height=\""
    << num(ph) << "\" fill=\"none\" stroke=\"#444\"/>\n";
  s << "<text x=\"" << num(ox + ml + pw / 2) << "\" y=\"" << num(oy + 17)
    << "\" text-anchor=\"middle\" font-size=\"13\">" << escape(p.title) << "</text>\n";
  s << "<text x=\"" << num(ox + ml + pw / 2) << "\" y=\"" << num(oy + h - 6)
    << "\" text-anchor=\"middle\" font-size=\"11\">" << escape(p.xlabel) << "</text>\n";
  s << "<text transform=\"translate(" << num(ox + 12) << "," << num(oy + mt + ph / 2)
    << ") rotate(-90)\" text-anchor=\"middle\" font-size=\"11\">" << escape(p.ylabel) << "</text>\n";
  for (int k = 0; k <= 4; ++k) {
    const double fx = xr.lo + (xr.hi - xr.lo) * k / 4.0;
    const double fy = yr.lo + (yr.hi - yr.lo) * k / 4.0;
    const double yval = p.log_y ? std::pow(10.0, fy) : fy;
    s << "<text x=\"" << num(px(fx)) << "\" y=\"" << num(oy + mt + ph + 14)
      << "\" text-anchor=\"middle\" font-size=\"10\">" << tick(fx) << "</text>\n";
    s << "<text x=\"" << num(ox + ml - 4) << "\" y=\"" << num(py(yval) + 3)
      << "\" text-anchor=\"end\" font-size=\"10\">" << tick(yval) << "</text>\n";
  }
  if (p.vline)
    s << "<line x1=\"" << num(px(*p.vline)) << "\" x2=\"" << num(px(*p.vline)) << "\" y1=\"" << num(oy + mt)
      << "\" y2=\"" << num(oy + mt + ph) << "\" stroke=\"#555\" stroke-width=\"1\"/>\n";

  int legend = 0;
  for (const auto& ser : p.series) {
    const std::string dash = ser.dashed ? " stroke-dasharray=\"6,4\"" : "";
    if (ser.markers) {
      for (std::size_t i = 0; i < ser.x.size() && i < ser.y.size(); ++i)
        if (usable(ser.y[i]))
          s << "<circle cx=\"" << num(px(ser.x[i])) << "\" cy=\"" << num(py(ser.y[i])) << "\" r=\"2.2\" fill=\""
            << ser.color << "\"/>\n";
    } else {
      std::string pts;
      auto flush = [&] {
        if (!pts.empty())
          s << "<polyline fill=\"none\" stroke=\"" << ser.color << "\" stroke-width=\"1.3\"" << dash << " points=\""
            << pts << "\"/>\n";
        pts.clear();
      };
      for (std::size_t i = 0; i < ser.x.size() && i < ser.y.size(); ++i) {
        if (!usable(ser.y[i])) {
          flush();
          continue;
        }
        pts += (pts.empty() ? "" : " ") + num(px(ser.x[i])) + "," + num(py(ser.y[i]));
      }
      flush();
    }
    if (!ser.label.empty()) {
      const double lx = ox + ml + 8, ly = oy + mt + 12 + 13 * legend++;
      s << "<line x1=\"" << num(lx) << "\" x2=\"" << num(lx + 18) << "\" y1=\"" << num(ly - 4) << "\" y2=\""
        << num(ly - 4) << "\" stroke=\"" << ser.color << "\" stroke-width=\"2\"" << dash << "/>\n";
      s << "<text x=\"" << num(lx + 22) << "\" y=\"" << num(ly) << "\" font-size=\"10\">" << escape(ser.label)
        << "</text>\n";
    }
  }
}

}  // namespace

std::string render_svg(const std::vector<Panel>& panels, int columns, int panel_width, int panel_height) {
  columns = std::max(1, columns);
  const int rows = static_cast<int>((panels.size() + static_cast<std::size_t>(columns) - 1) / columns);
  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << panel_width * columns << "\" height=\""
    << panel_height * std::max(rows, 1) << "\" font-family=\"sans-serif\">\n";
  s << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  for (std::size_t i = 0; i < panels.size(); ++i) {
    const double ox = static_cast<double>(static_cast<int>(i) % columns) * panel_width;
    const double oy = static_cast<double>(static_cast<int>(i) / columns) * panel_height;
    render_panel(s, panels[i], ox, oy, panel_width, panel_height);
  }
  s << "</svg>\n";
  return s.str();
}

void write_svg(const std::filesystem::path& file, const std::vector<Panel>& panels, int columns) {
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + file.string());
  out << render_svg(panels, columns);
}

std::vector<double> exp_smooth(const std::vector<double>& v, double alpha) {
  std::vector<double> out(v.size());
  double state = std::numeric_limits<double>::quiet_NaN();
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!std::isfinite(v[i])) {
      out[i] = v[i];
      continue;
    }
    state = std::isfinite(state) ? alpha * v[i] + (1 - alpha) * state : v[i];
    out[i] = state;
  }
  return out;
}

Series hline(const std::string& label, double y, double x0, double x1, const std::string& color) {
  Series s;
  s.label = label;
  s.x = {x0, x1};
  s.y = {y, y};
  s.color = color;
  s.dashed = true;
  return s;
}

}  // namespace neos::harness
