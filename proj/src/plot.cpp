#include <twinmap/plot.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace twinmap {

namespace {

constexpr double kWidth = 640, kHeight = 480;
constexpr double kLeft = 80, kRight = 110, kTop = 40, kBottom = 60;

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

std::string xml_escape(const std::string &s) {
  std::string out;
  for (char c : s) {
    switch (c) {
    case '&':
      out += "&amp;";
      break;
    case '<':
      out += "&lt;";
      break;
    case '>':
      out += "&gt;";
      break;
    case '"':
      out += "&quot;";
      break;
    default:
      out += c;
    }
  }
  return out;
}

struct Scale {
  double lo, hi, px_lo, px_hi;
  double operator()(double v) const {
    if (hi == lo)
      return 0.5 * (px_lo + px_hi);
    return px_lo + (v - lo) / (hi - lo) * (px_hi - px_lo);
  }
};

void ticks(std::ostringstream &svg, const Scale &s, bool horizontal, double fixed) {
  for (int k = 0; k <= 4; ++k) {
    const double v = s.lo + (s.hi - s.lo) * k / 4.0;
    const double p = s(v);
    if (horizontal)
      svg << "<line x1=\"" << num(p) << "\" y1=\"" << num(fixed) << "\" x2=\"" << num(p) << "\" y2=\""
          << num(fixed + 5) << "\" stroke=\"black\"/><text x=\"" << num(p) << "\" y=\"" << num(fixed + 18)
          << "\" text-anchor=\"middle\" font-size=\"11\">" << num(v) << "</text>\n";
    else
      svg << "<line x1=\"" << num(fixed - 5) << "\" y1=\"" << num(p) << "\" x2=\"" << num(fixed) << "\" y2=\""
          << num(p) << "\" stroke=\"black\"/><text x=\"" << num(fixed - 8) << "\" y=\"" << num(p + 4)
          << "\" text-anchor=\"end\" font-size=\"11\">" << num(v) << "</text>\n";
  }
}

std::pair<double, double> extent(const std::vector<double> &v) {
  const auto [a, b] = std::minmax_element(v.begin(), v.end());
  return {*a, *b};
}

// Cell edges halfway between neighbouring coordinates.
std::vector<double> edges(const std::vector<double> &c) {
  std::vector<double> e(c.size() + 1);
  if (c.size() == 1) {
    e[0] = c[0] - 0.5;
    e[1] = c[0] + 0.5;
    return e;
  }
  for (std::size_t i = 1; i < c.size(); ++i)
    e[i] = 0.5 * (c[i - 1] + c[i]);
  e[0] = c[0] - (e[1] - c[0]);
  e[c.size()] = c.back() + (c.back() - e[c.size() - 1]);
  return e;
}

} // namespace

std::string diverging_color(double db, double range) {
  const double t = range > 0 ? std::clamp(db / range, -1.0, 1.0) : 0.0;
  // White at 0, saturating to blue (negative) or red (positive).
  const auto mix = [](double a, double b, double f) { return static_cast<int>(std::lround(a + (b - a) * f)); };
  int r, g, b;
  if (t < 0) {
    r = mix(255, 33, -t);
    g = mix(255, 102, -t);
    b = mix(255, 172, -t);
  } else {
    r = mix(255, 178, t);
    g = mix(255, 24, t);
    b = mix(255, 43, t);
  }
  char buf[8];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", r, g, b);
  return buf;
}

std::string render_svg(const NoiseMap &map, const PlotOptions &options) {
  map.validate();
  double range = options.db_range;
  if (!(range > 0)) {
    range = 0;
    for (const auto &v : map.values)
      if (std::isfinite(v.nrf_db))
        range = std::max(range, std::abs(v.nrf_db));
    if (range == 0)
      range = 1;
  }

  std::ostringstream svg;
  svg << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
      << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\" font-family=\"sans-serif\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  if (!options.title.empty())
    svg << "<text x=\"" << num(kWidth / 2) << "\" y=\"24\" text-anchor=\"middle\" font-size=\"14\">"
        << xml_escape(options.title) << "</text>\n";

  const double x0 = kLeft, x1 = kWidth - kRight, y0 = kHeight - kBottom, y1 = kTop;
  const char *ax = to_string(map.settings.config.sweep_axis);

  if (map.kind == MapKind::raster) {
    const auto pe = edges(map.probe_coords);
    const auto ce = edges(map.conj_coords);
    const auto [plo, phi] = extent(pe);
    const auto [clo, chi] = extent(ce);
    const Scale sx{plo, phi, x0, x1};
    const Scale sy{clo, chi, y0, y1};
    svg << "<g id=\"cells\" shape-rendering=\"crispEdges\">\n";
    for (std::size_t i = 0; i < map.probe_coords.size(); ++i)
      for (std::size_t j = 0; j < map.conj_coords.size(); ++j) {
        const double xa = sx(pe[i]), xb = sx(pe[i + 1]);
        const double ya = sy(ce[j]), yb = sy(ce[j + 1]);
        const double db = map.at(i, j).nrf_db;
        svg << "<rect class=\"cell\" x=\"" << num(std::min(xa, xb)) << "\" y=\"" << num(std::min(ya, yb))
            << "\" width=\"" << num(std::abs(xb - xa)) << "\" height=\"" << num(std::abs(yb - ya))
            << "\" fill=\"" << diverging_color(db, range) << "\"><title>" << num(db) << " dB</title></rect>\n";
      }
    svg << "</g>\n";
    ticks(svg, sx, true, y0);
    ticks(svg, sy, false, x0);
    svg << "<text x=\"" << num((x0 + x1) / 2) << "\" y=\"" << num(kHeight - 18)
        << "\" text-anchor=\"middle\" font-size=\"12\">probe edge " << ax << " (mm)</text>\n"
        << "<text transform=\"translate(22," << num((y0 + y1) / 2)
        << ") rotate(-90)\" text-anchor=\"middle\" font-size=\"12\">conjugate edge " << ax << " (mm)</text>\n";

    // Color bar.
    const double bx = kWidth - kRight + 30;
    const int steps = 50;
    for (int k = 0; k < steps; ++k) {
      const double v = range - 2.0 * range * (k + 0.5) / steps;
      svg << "<rect x=\"" << num(bx) << "\" y=\"" << num(y1 + (y0 - y1) * k / steps) << "\" width=\"16\" height=\""
          << num((y0 - y1) / steps + 0.5) << "\" fill=\"" << diverging_color(v, range) << "\"/>\n";
    }
    const Scale sb{-range, range, y0, y1};
    ticks(svg, sb, false, bx + 16 + 40);
    svg << "<text x=\"" << num(bx + 8) << "\" y=\"" << num(y1 - 8)
        << "\" text-anchor=\"middle\" font-size=\"11\">dB</text>\n";
  } else {
    const auto [plo, phi] = extent(map.probe_coords);
    double lo = 0, hi = 0;
    for (const auto &v : map.values)
      if (std::isfinite(v.nrf_db)) {
        lo = std::min(lo, v.nrf_db);
        hi = std::max(hi, v.nrf_db);
      }
    const double pad = 0.05 * std::max(hi - lo, 0.1);
    const Scale sx{plo, phi, x0, x1};
    const Scale sy{lo - pad, hi + pad, y0, y1};
    svg << "<line x1=\"" << num(x0) << "\" y1=\"" << num(sy(0)) << "\" x2=\"" << num(x1) << "\" y2=\""
        << num(sy(0)) << "\" stroke=\"gray\" stroke-dasharray=\"4 3\"/>\n";
    svg << "<polyline class=\"sweep\" fill=\"none\" stroke=\"#2166ac\" stroke-width=\"2\" points=\"";
    for (std::size_t k = 0; k < map.values.size(); ++k)
      svg << (k ? " " : "") << num(sx(map.probe_coords[k])) << ',' << num(sy(map.values[k].nrf_db));
    svg << "\"/>\n";
    for (std::size_t k = 0; k < map.values.size(); ++k)
      svg << "<circle cx=\"" << num(sx(map.probe_coords[k])) << "\" cy=\"" << num(sy(map.values[k].nrf_db))
          << "\" r=\"2.5\" fill=\"" << diverging_color(map.values[k].nrf_db, range) << "\" stroke=\"#333\"/>\n";
    ticks(svg, sx, true, y0);
    ticks(svg, sy, false, x0);
    svg << "<text x=\"" << num((x0 + x1) / 2) << "\" y=\"" << num(kHeight - 18)
        << "\" text-anchor=\"middle\" font-size=\"12\">probe edge " << ax << " (mm)</text>\n"
        << "<text transform=\"translate(22," << num((y0 + y1) / 2)
        << ") rotate(-90)\" text-anchor=\"middle\" font-size=\"12\">noise relative to shot noise (dB)</text>\n";
  }
  svg << "<rect x=\"" << num(x0) << "\" y=\"" << num(y1) << "\" width=\"" << num(x1 - x0) << "\" height=\""
      << num(y0 - y1) << "\" fill=\"none\" stroke=\"black\"/>\n</svg>\n";
  return svg.str();
}

} // namespace twinmap
