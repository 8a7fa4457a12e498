#include "pooltrend/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace pooltrend {

namespace {

constexpr double kWidth = 860.0, kHeight = 420.0;
constexpr double kLeft = 64.0, kRight = 24.0, kTop = 36.0, kBottom = 48.0;

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

struct Scale {
  double t_lo, t_hi, p_hi;
  double x(double t) const {
    return kLeft + (t - t_lo) / (t_hi - t_lo) * (kWidth - kLeft - kRight);
  }
  double y(double p) const {
    return kHeight - kBottom - p / p_hi * (kHeight - kTop - kBottom);
  }
};

std::string polyline_points(const Scale& sc, const std::vector<double>& t,
                            const std::vector<double>& v) {
  std::string pts;
  for (std::size_t i = 0; i < t.size(); ++i)
    pts += num(sc.x(t[i])) + "," + num(sc.y(v[i])) + " ";
  return pts;
}

// round a tick step to 1/2/5 times a power of ten
double nice_step(double range, int ticks) {
  double raw = range / ticks;
  double mag = std::pow(10.0, std::floor(std::log10(raw)));
  double frac = raw / mag;
  double step = frac < 1.5 ? 1.0 : frac < 3.5 ? 2.0 : frac < 7.5 ? 5.0 : 10.0;
  return step * mag;
}

}  // namespace

void write_curve_svg(const std::string& path, const PlotSpec& spec) {
  const auto& s = spec.summary;
  if (s.times.empty()) throw std::invalid_argument("write_curve_svg: empty summary");
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");

  Scale sc;
  sc.t_lo = s.times.front();
  sc.t_hi = s.times.back();
  double p_hi = 0.0;
  for (double v : s.hi95) p_hi = std::max(p_hi, v);
  if (spec.truth)
    for (double v : spec.truth->values) p_hi = std::max(p_hi, v);
  for (const auto& o : spec.overlays)
    for (double v : o.values) p_hi = std::max(p_hi, v);
  sc.p_hi = std::min(1.0, std::max(1e-6, p_hi * 1.1));

  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
      << kHeight << "\" viewBox=\"0 0 " << kWidth << " " << kHeight << "\">\n";
  out << "<rect width=\"" << kWidth << "\" height=\"" << kHeight << "\" fill=\"white\"/>\n";
  if (!spec.title.empty())
    out << "<text x=\"" << kLeft << "\" y=\"22\" font-family=\"sans-serif\" font-size=\"14\">"
        << spec.title << "</text>\n";

  // axes
  out << "<line x1=\"" << kLeft << "\" y1=\"" << kHeight - kBottom << "\" x2=\""
      << kWidth - kRight << "\" y2=\"" << kHeight - kBottom
      << "\" stroke=\"#333\" stroke-width=\"1\"/>\n";
  out << "<line x1=\"" << kLeft << "\" y1=\"" << kTop << "\" x2=\"" << kLeft << "\" y2=\""
      << kHeight - kBottom << "\" stroke=\"#333\" stroke-width=\"1\"/>\n";

  double xstep = nice_step(sc.t_hi - sc.t_lo, 8);
  for (double t = std::ceil(sc.t_lo / xstep) * xstep; t <= sc.t_hi + 1e-9; t += xstep) {
    out << "<line x1=\"" << num(sc.x(t)) << "\" y1=\"" << kHeight - kBottom << "\" x2=\""
        << num(sc.x(t)) << "\" y2=\"" << kHeight - kBottom + 5
        << "\" stroke=\"#333\" stroke-width=\"1\"/>\n";
    out << "<text x=\"" << num(sc.x(t)) << "\" y=\"" << kHeight - kBottom + 20
        << "\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\">" << num(t)
        << "</text>\n";
  }
  double ystep = nice_step(sc.p_hi, 6);
  for (double p = 0.0; p <= sc.p_hi + 1e-12; p += ystep) {
    out << "<line x1=\"" << kLeft - 5 << "\" y1=\"" << num(sc.y(p)) << "\" x2=\"" << kLeft
        << "\" y2=\"" << num(sc.y(p)) << "\" stroke=\"#333\" stroke-width=\"1\"/>\n";
    out << "<text x=\"" << kLeft - 9 << "\" y=\"" << num(sc.y(p) + 4)
        << "\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\">" << num(p)
        << "</text>\n";
  }
  out << "<text x=\"" << (kLeft + kWidth - kRight) / 2 << "\" y=\"" << kHeight - 10
      << "\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\">time (days)"
      << "</text>\n";
  out << "<text x=\"16\" y=\"" << (kTop + kHeight - kBottom) / 2
      << "\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\" "
         "transform=\"rotate(-90 16 "
      << (kTop + kHeight - kBottom) / 2 << ")\">prevalence</text>\n";

  // credible band
  out << "<polygon fill=\"#c6dbef\" stroke=\"none\" points=\"";
  for (std::size_t i = 0; i < s.times.size(); ++i)
    out << num(sc.x(s.times[i])) << "," << num(sc.y(s.hi95[i])) << " ";
  for (std::size_t i = s.times.size(); i-- > 0;)
    out << num(sc.x(s.times[i])) << "," << num(sc.y(s.lo95[i])) << " ";
  out << "\"/>\n";

  for (const auto& o : spec.overlays)
    out << "<polyline fill=\"none\" stroke=\"#d62728\" stroke-width=\"1\" stroke-opacity=\"0.45\""
        << " points=\"" << polyline_points(sc, o.times, o.values) << "\"/>\n";

  if (spec.truth)
    out << "<polyline fill=\"none\" stroke=\"#555\" stroke-width=\"1.5\" stroke-dasharray=\"6 4\""
        << " points=\"" << polyline_points(sc, spec.truth->times, spec.truth->values)
        << "\"/>\n";

  out << "<polyline fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"2\" points=\""
      << polyline_points(sc, s.times, s.median) << "\"/>\n";

  for (double t : spec.rug_times)
    out << "<line x1=\"" << num(sc.x(t)) << "\" y1=\"" << kHeight - kBottom - 7 << "\" x2=\""
        << num(sc.x(t)) << "\" y2=\"" << kHeight - kBottom
        << "\" stroke=\"#333\" stroke-width=\"1\"/>\n";

  out << "</svg>\n";
}

}  // namespace pooltrend
