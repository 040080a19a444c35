// Copyright 2026 The biased-sgd Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// =============================================================================

#include "bsgd/cli/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>
#include <vector>

namespace bsgd::cli {

namespace {

constexpr double kWidth = 720.0;
constexpr double kHeight = 440.0;
constexpr double kLeft = 80.0;
constexpr double kRight = 220.0;
constexpr double kTop = 40.0;
constexpr double kBottom = 60.0;
constexpr std::size_t kMaxPoints = 1500;

const char* const kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                                "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

std::string Fixed(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

std::string Escape(const std::string& s) {
  std::string out;
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

bool Plottable(double y) { return std::isfinite(y) && y > 0.0; }

}  // namespace

std::string RenderLogYPlot(const std::string& title, const std::string& x_label,
                           const std::string& y_label, const std::vector<PlotSeries>& series) {
  double x_min = std::numeric_limits<double>::infinity();
  double x_max = -x_min;
  double y_min = x_min;
  double y_max = -x_min;
  for (const auto& s : series) {
    for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
      if (!Plottable(s.y[i]) || !std::isfinite(s.x[i])) continue;
      x_min = std::min(x_min, s.x[i]);
      x_max = std::max(x_max, s.x[i]);
      y_min = std::min(y_min, s.y[i]);
      y_max = std::max(y_max, s.y[i]);
    }
  }
  if (!std::isfinite(x_min)) {
    x_min = 0.0;
    x_max = 1.0;
    y_min = 1e-1;
    y_max = 1.0;
  }
  if (x_max <= x_min) x_max = x_min + 1.0;
  const double lo = std::floor(std::log10(y_min));
  const double hi = std::max(lo + 1.0, std::ceil(std::log10(y_max)));

  const double pw = kWidth - kLeft - kRight;
  const double ph = kHeight - kTop - kBottom;
  const auto px = [&](double x) { return kLeft + (x - x_min) / (x_max - x_min) * pw; };
  const auto py = [&](double y) { return kTop + (hi - std::log10(y)) / (hi - lo) * ph; };

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
     << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << Fixed(kLeft + pw / 2) << "\" y=\"24\" text-anchor=\"middle\" font-size=\"14\">"
     << Escape(title) << "</text>\n";

  const int decades = static_cast<int>(hi - lo);
  const int label_step = std::max(1, decades / 8);
  for (int e = static_cast<int>(lo); e <= static_cast<int>(hi); ++e) {
    const double y = py(std::pow(10.0, e));
    os << "<line x1=\"" << Fixed(kLeft) << "\" y1=\"" << Fixed(y) << "\" x2=\"" << Fixed(kLeft + pw)
       << "\" y2=\"" << Fixed(y) << "\" stroke=\"#e0e0e0\"/>\n";
    if ((e - static_cast<int>(lo)) % label_step == 0)
      os << "<text x=\"" << Fixed(kLeft - 6) << "\" y=\"" << Fixed(y + 4)
         << "\" text-anchor=\"end\">1e" << e << "</text>\n";
  }
  for (int i = 0; i <= 5; ++i) {
    const double xv = x_min + (x_max - x_min) * i / 5.0;
    const double x = px(xv);
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4g", xv);
    os << "<line x1=\"" << Fixed(x) << "\" y1=\"" << Fixed(kTop) << "\" x2=\"" << Fixed(x)
       << "\" y2=\"" << Fixed(kTop + ph) << "\" stroke=\"#f0f0f0\"/>\n";
    os << "<text x=\"" << Fixed(x) << "\" y=\"" << Fixed(kTop + ph + 18)
       << "\" text-anchor=\"middle\">" << buf << "</text>\n";
  }
  os << "<rect x=\"" << Fixed(kLeft) << "\" y=\"" << Fixed(kTop) << "\" width=\"" << Fixed(pw)
     << "\" height=\"" << Fixed(ph) << "\" fill=\"none\" stroke=\"black\"/>\n";
  os << "<text x=\"" << Fixed(kLeft + pw / 2) << "\" y=\"" << Fixed(kHeight - 16)
     << "\" text-anchor=\"middle\">" << Escape(x_label) << "</text>\n";
  os << "<text transform=\"translate(18," << Fixed(kTop + ph / 2)
     << ") rotate(-90)\" text-anchor=\"middle\">" << Escape(y_label) << "</text>\n";

  for (std::size_t s = 0; s < series.size(); ++s) {
    const auto& ser = series[s];
    const char* color = kPalette[s % (sizeof(kPalette) / sizeof(kPalette[0]))];
    const std::size_t n = std::min(ser.x.size(), ser.y.size());
    const std::size_t stride = std::max<std::size_t>(1, (n + kMaxPoints - 1) / kMaxPoints);
    std::string path;
    bool pen_down = false;
    std::vector<std::size_t> picks;
    for (std::size_t i = 0; i < n; i += stride) picks.push_back(i);
    if (n > 0 && picks.back() != n - 1) picks.push_back(n - 1);
    for (std::size_t i : picks) {
      if (!Plottable(ser.y[i]) || !std::isfinite(ser.x[i])) {
        pen_down = false;
        continue;
      }
      path += (pen_down ? " L" : " M") + Fixed(px(ser.x[i])) + "," + Fixed(py(ser.y[i]));
      pen_down = true;
    }
    if (!path.empty())
      os << "<path d=\"" << path.substr(1) << "\" fill=\"none\" stroke=\"" << color
         << "\" stroke-width=\"1.5\"/>\n";
    const double ly = kTop + 14.0 + 18.0 * static_cast<double>(s);
    os << "<line x1=\"" << Fixed(kLeft + pw + 12) << "\" y1=\"" << Fixed(ly - 4) << "\" x2=\""
       << Fixed(kLeft + pw + 32) << "\" y2=\"" << Fixed(ly - 4) << "\" stroke=\"" << color
       << "\" stroke-width=\"2\"/>\n";
    os << "<text x=\"" << Fixed(kLeft + pw + 38) << "\" y=\"" << Fixed(ly) << "\">"
       << Escape(ser.label) << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace bsgd::cli
