#include "loopsim/cli/svg.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <limits>

#include "loopsim/errors.hpp"

namespace loopsim::cli {
namespace {

struct Stroke {
  const char* colour;
  const char* dash;  // empty: solid
};

// Colour and dash cycles have coprime lengths so styles stay distinct for 35 series.
constexpr std::array<const char*, 7> kColours = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                                 "#ff7f0e", "#17becf", "#8c564b"};
constexpr std::array<const char*, 5> kDashes = {"", "6 3", "2 2", "8 3 2 3", "1 3"};

Stroke stroke_for(std::size_t i) { return {kColours[i % kColours.size()], kDashes[i % kDashes.size()]}; }

std::string fixed(double v) {
  std::array<char, 32> buf{};
  const auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v, std::chars_format::fixed, 2);
  return ec == std::errc() ? std::string(buf.data(), end) : std::string("0");
}

std::string tick_label(double v) {
  if (std::abs(v) < 1e-12) v = 0.0;
  std::array<char, 32> buf{};
  const auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v, std::chars_format::general, 4);
  return ec == std::errc() ? std::string(buf.data(), end) : std::string("?");
}

double nice_step(double span, int target_ticks) {
  const double raw = span / target_ticks;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  const double f = raw / mag;
  const double nice = f <= 1.0 ? 1.0 : f <= 2.0 ? 2.0 : f <= 5.0 ? 5.0 : 10.0;
  return nice * mag;
}

struct Range {
  double lo = 0.0;
  double hi = 1.0;
  double step = 0.2;
};

Range nice_range(double lo, double hi, int target_ticks) {
  if (!(hi > lo)) {
    const double pad = std::max(std::abs(lo) * 0.05, 0.5);
    lo -= pad;
    hi += pad;
  }
  const double step = nice_step(hi - lo, target_ticks);
  return {std::floor(lo / step) * step, std::ceil(hi / step) * step, step};
}

void panel_svg(std::string& out, const Panel& panel, const ChartOptions& o, double ox, double oy) {
  constexpr double kLeft = 62.0, kRight = 130.0, kTop = 30.0, kBottom = 46.0;
  const double pw = o.panel_width - kLeft - kRight;
  const double ph = o.panel_height - kTop - kBottom;

  double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
  double ymin = xmin, ymax = -xmin;
  for (const Series& s : panel.series) {
    for (const auto& [x, y] : s.points) {
      if (!std::isfinite(x) || !std::isfinite(y)) continue;
      xmin = std::min(xmin, x);
      xmax = std::max(xmax, x);
      ymin = std::min(ymin, y);
      ymax = std::max(ymax, y);
    }
  }
  if (!std::isfinite(xmin)) xmin = xmax = ymin = ymax = 0.0;
  const Range xr = nice_range(xmin, xmax, 6);
  const Range yr = nice_range(ymin, ymax, 5);
  const auto sx = [&](double x) { return ox + kLeft + (x - xr.lo) / (xr.hi - xr.lo) * pw; };
  const auto sy = [&](double y) { return oy + kTop + ph - (y - yr.lo) / (yr.hi - yr.lo) * ph; };

  out += "<g class=\"panel\">\n";
  out += "<text x=\"" + fixed(ox + kLeft + pw / 2) + "\" y=\"" + fixed(oy + 18) +
         "\" text-anchor=\"middle\" font-size=\"13\">" + xml_escape(panel.title) + "</text>\n";
  out += "<rect x=\"" + fixed(ox + kLeft) + "\" y=\"" + fixed(oy + kTop) + "\" width=\"" + fixed(pw) +
         "\" height=\"" + fixed(ph) + "\" fill=\"none\" stroke=\"#444\" stroke-width=\"1\"/>\n";

  for (double t = xr.lo; t <= xr.hi + xr.step * 1e-9; t += xr.step) {
    const double x = sx(t);
    out += "<line x1=\"" + fixed(x) + "\" y1=\"" + fixed(oy + kTop + ph) + "\" x2=\"" + fixed(x) + "\" y2=\"" +
           fixed(oy + kTop + ph + 4) + "\" stroke=\"#444\"/>\n";
    out += "<text x=\"" + fixed(x) + "\" y=\"" + fixed(oy + kTop + ph + 16) +
           "\" text-anchor=\"middle\" font-size=\"10\">" + tick_label(t) + "</text>\n";
  }
  for (double t = yr.lo; t <= yr.hi + yr.step * 1e-9; t += yr.step) {
    const double y = sy(t);
    out += "<line x1=\"" + fixed(ox + kLeft - 4) + "\" y1=\"" + fixed(y) + "\" x2=\"" + fixed(ox + kLeft + pw) +
           "\" y2=\"" + fixed(y) + "\" stroke=\"#ddd\"/>\n";
    out += "<text x=\"" + fixed(ox + kLeft - 7) + "\" y=\"" + fixed(y + 3.5) +
           "\" text-anchor=\"end\" font-size=\"10\">" + tick_label(t) + "</text>\n";
  }
  out += "<text x=\"" + fixed(ox + kLeft + pw / 2) + "\" y=\"" + fixed(oy + o.panel_height - 10) +
         "\" text-anchor=\"middle\" font-size=\"11\">" + xml_escape(o.x_label) + "</text>\n";
  const double ylx = ox + 16, yly = oy + kTop + ph / 2;
  out += "<text x=\"" + fixed(ylx) + "\" y=\"" + fixed(yly) + "\" text-anchor=\"middle\" font-size=\"11\" transform=\"rotate(-90 " +
         fixed(ylx) + " " + fixed(yly) + ")\">" + xml_escape(o.y_label) + "</text>\n";

  for (std::size_t i = 0; i < panel.series.size(); ++i) {
    const Series& s = panel.series[i];
    const Stroke st = stroke_for(i);
    std::string dash = *st.dash ? std::string(" stroke-dasharray=\"") + st.dash + "\"" : std::string();
    std::string pts;
    for (const auto& [x, y] : s.points) {
      if (!std::isfinite(x) || !std::isfinite(y)) continue;
      if (!pts.empty()) pts += ' ';
      pts += fixed(sx(x)) + "," + fixed(sy(y));
    }
    out += "<g class=\"series\" data-label=\"" + xml_escape(s.label) + "\">\n";
    out += "<polyline points=\"" + pts + "\" fill=\"none\" stroke=\"" + st.colour + "\" stroke-width=\"1.6\"" +
           dash + "/>\n";
    for (const auto& [x, y] : s.points) {
      if (!std::isfinite(x) || !std::isfinite(y)) continue;
      out += "<circle cx=\"" + fixed(sx(x)) + "\" cy=\"" + fixed(sy(y)) + "\" r=\"2\" fill=\"" + st.colour + "\"/>\n";
    }
    out += "</g>\n";

    const double lx = ox + kLeft + pw + 12, ly = oy + kTop + 10 + 18.0 * static_cast<double>(i);
    out += "<g class=\"legend-entry\">\n";
    out += "<line x1=\"" + fixed(lx) + "\" y1=\"" + fixed(ly) + "\" x2=\"" + fixed(lx + 24) + "\" y2=\"" + fixed(ly) +
           "\" stroke=\"" + st.colour + "\" stroke-width=\"1.6\"" + dash + "/>\n";
    out += "<text x=\"" + fixed(lx + 30) + "\" y=\"" + fixed(ly + 3.5) + "\" font-size=\"10\">" +
           xml_escape(s.label) + "</text>\n";
    out += "</g>\n";
  }
  out += "</g>\n";
}

}  // namespace

std::string xml_escape(const std::string& text) {
  std::string out;
  out.reserve(text.size());
  for (char c : text) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&apos;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string emit_svg(const std::vector<Panel>& panels, const ChartOptions& options) {
  if (panels.empty()) throw ContractViolation("emit_svg: no panels");
  for (const Panel& p : panels) {
    for (const Series& s : p.series) {
      if (s.points.empty()) throw ContractViolation("emit_svg: series '" + s.label + "' has no points");
    }
  }
  const std::size_t cols = std::max<std::size_t>(1, std::min(options.columns, panels.size()));
  const std::size_t rows = (panels.size() + cols - 1) / cols;
  constexpr double kHeader = 34.0;
  const double width = options.panel_width * static_cast<double>(cols);
  const double height = kHeader + options.panel_height * static_cast<double>(rows);

  std::string out = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  out += "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" + fixed(width) + "\" height=\"" +
         fixed(height) + "\" viewBox=\"0 0 " + fixed(width) + " " + fixed(height) +
         "\" font-family=\"sans-serif\">\n";
  out += "<rect width=\"100%\" height=\"100%\" fill=\"#fff\"/>\n";
  out += "<text x=\"" + fixed(width / 2) + "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" +
         xml_escape(options.title) + "</text>\n";
  for (std::size_t i = 0; i < panels.size(); ++i) {
    const double ox = options.panel_width * static_cast<double>(i % cols);
    const double oy = kHeader + options.panel_height * static_cast<double>(i / cols);
    panel_svg(out, panels[i], options, ox, oy);
  }
  out += "</svg>\n";
  return out;
}

}  // namespace loopsim::cli
