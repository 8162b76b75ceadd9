#include "cyldet/stats_report.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>

namespace cyldet {

void write_stats_csv(const std::vector<VoxelStatsRow>& rows, std::ostream& os) {
  os << "range_m,mean_cyl,mean_cart\n";
  for (const auto& r : rows) os << r.range_m << ',' << r.mean_cyl << ',' << r.mean_cart << '\n';
}

std::string stats_svg(const std::vector<VoxelStatsRow>& rows) {
  const double width = 640, height = 480;
  const double ml = 60, mr = 20, mt = 30, mb = 45;

  double x_max = 1.0, y_max = 1.0, y_min = 1.0;
  bool any = false;
  for (const auto& r : rows) {
    x_max = std::max(x_max, r.range_m);
    for (double v : {r.mean_cyl, r.mean_cart})
      if (v > 0) {
        y_max = std::max(y_max, v);
        y_min = any ? std::min(y_min, v) : v;
        any = true;
      }
  }
  if (!any) y_min = 0.1;
  y_min = std::min(y_min, y_max / 10.0);
  const double ly_min = std::log10(y_min), ly_max = std::log10(y_max * 1.1);

  auto px = [&](double x) { return ml + (width - ml - mr) * x / x_max; };
  auto py = [&](double v) {
    const double ly = std::log10(std::max(v, y_min));
    return height - mb - (height - mt - mb) * (ly - ly_min) / std::max(1e-9, ly_max - ly_min);
  };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
      << height << "\" viewBox=\"0 0 " << width << ' ' << height << "\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<text x=\"" << width / 2 << "\" y=\"18\" text-anchor=\"middle\" font-size=\"14\">"
      << "Mean points per voxel vs range</text>\n";
  // axes
  svg << "<line x1=\"" << ml << "\" y1=\"" << height - mb << "\" x2=\"" << width - mr
      << "\" y2=\"" << height - mb << "\" stroke=\"black\"/>\n";
  svg << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\""
      << height - mb << "\" stroke=\"black\"/>\n";
  svg << "<text x=\"" << width / 2 << "\" y=\"" << height - 10
      << "\" text-anchor=\"middle\" font-size=\"12\">range (m)</text>\n";
  svg << "<text x=\"15\" y=\"" << height / 2
      << "\" text-anchor=\"middle\" font-size=\"12\" transform=\"rotate(-90 15 " << height / 2
      << ")\">points per voxel (log)</text>\n";
  // decade ticks
  for (int d = static_cast<int>(std::floor(ly_min)); d <= static_cast<int>(std::ceil(ly_max));
       ++d) {
    const double v = std::pow(10.0, d);
    if (v < y_min || std::log10(v) > ly_max) continue;
    svg << "<line x1=\"" << ml - 4 << "\" y1=\"" << py(v) << "\" x2=\"" << ml << "\" y2=\""
        << py(v) << "\" stroke=\"black\"/>\n";
    svg << "<text x=\"" << ml - 8 << "\" y=\"" << py(v) + 4
        << "\" text-anchor=\"end\" font-size=\"10\">1e" << d << "</text>\n";
  }

  auto polyline = [&](bool cyl, const char* color) {
    std::ostringstream pts;
    for (const auto& r : rows) {
      const double v = cyl ? r.mean_cyl : r.mean_cart;
      if (v <= 0) continue;
      pts << px(r.range_m) << ',' << py(v) << ' ';
    }
    std::string s = pts.str();
    if (s.empty()) return;
    svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\""
        << s << "\"/>\n";
  };
  polyline(true, "#d62728");
  polyline(false, "#1f77b4");
  svg << "<rect x=\"" << width - 180 << "\" y=\"" << mt + 6
      << "\" width=\"12\" height=\"3\" fill=\"#d62728\"/>\n";
  svg << "<text x=\"" << width - 162 << "\" y=\"" << mt + 11
      << "\" font-size=\"11\">cylindrical</text>\n";
  svg << "<rect x=\"" << width - 180 << "\" y=\"" << mt + 22
      << "\" width=\"12\" height=\"3\" fill=\"#1f77b4\"/>\n";
  svg << "<text x=\"" << width - 162 << "\" y=\"" << mt + 27
      << "\" font-size=\"11\">cartesian</text>\n";
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace cyldet
