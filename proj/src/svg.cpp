#include "twinforge/svg.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "twinforge/format.hpp"

namespace twinforge {

namespace {

constexpr double kWidth = 640, kHeight = 400;
constexpr double kLeft = 70, kRight = 150, kTop = 40, kBottom = 50;
constexpr const char* kPalette[] = {"#4e79a7", "#f28e2b", "#59a14f", "#e15759", "#76b7b2", "#edc948"};

std::string escape(const std::string& s) {
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

const char* color(std::size_t i) { return kPalette[i % (sizeof(kPalette) / sizeof(kPalette[0]))]; }

void open_svg(std::ostringstream& os, const std::string& title) {
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
     << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << kWidth / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" << escape(title)
     << "</text>\n";
}

void axes(std::ostringstream& os, double y_min, double y_max, const std::string& x_label, const std::string& y_label) {
  const double x0 = kLeft, x1 = kWidth - kRight, y0 = kHeight - kBottom, y1 = kTop;
  os << "<line x1=\"" << x0 << "\" y1=\"" << y0 << "\" x2=\"" << x1 << "\" y2=\"" << y0 << "\" stroke=\"black\"/>\n";
  os << "<line x1=\"" << x0 << "\" y1=\"" << y0 << "\" x2=\"" << x0 << "\" y2=\"" << y1 << "\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 5; ++i) {
    const double v = y_min + (y_max - y_min) * i / 5.0;
    const double y = y0 - (y0 - y1) * i / 5.0;
    os << "<line x1=\"" << x0 - 4 << "\" y1=\"" << num(y, 2) << "\" x2=\"" << x0 << "\" y2=\"" << num(y, 2)
       << "\" stroke=\"black\"/>\n";
    os << "<text x=\"" << x0 - 6 << "\" y=\"" << num(y + 4, 2) << "\" text-anchor=\"end\">" << num(v, 3)
       << "</text>\n";
  }
  os << "<text x=\"" << (x0 + x1) / 2 << "\" y=\"" << kHeight - 12 << "\" text-anchor=\"middle\">" << escape(x_label)
     << "</text>\n";
  os << "<text x=\"16\" y=\"" << (y0 + y1) / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
     << (y0 + y1) / 2 << ")\">" << escape(y_label) << "</text>\n";
}

void legend(std::ostringstream& os, const std::vector<std::string>& names) {
  const double x = kWidth - kRight + 15;
  for (std::size_t i = 0; i < names.size(); ++i) {
    const double y = kTop + 10 + 20.0 * static_cast<double>(i);
    os << "<rect x=\"" << x << "\" y=\"" << y - 9 << "\" width=\"12\" height=\"12\" fill=\"" << color(i) << "\"/>\n";
    os << "<text x=\"" << x + 18 << "\" y=\"" << y + 1 << "\">" << escape(names[i]) << "</text>\n";
  }
}

}  // namespace

std::string bar_chart_svg(const std::string& title, const std::string& y_label,
                          const std::vector<std::string>& categories, const std::vector<BarSeries>& series) {
  double y_max = 0;
  for (const auto& s : series) {
    for (double v : s.values) y_max = std::max(y_max, v);
    for (double v : s.high) y_max = std::max(y_max, v);
  }
  if (!(y_max > 0)) y_max = 1;
  y_max *= 1.1;

  std::ostringstream os;
  open_svg(os, title);
  axes(os, 0, y_max, "", y_label);
  const double x0 = kLeft, x1 = kWidth - kRight, y0 = kHeight - kBottom, y1 = kTop;
  const double group = (x1 - x0) / static_cast<double>(std::max<std::size_t>(categories.size(), 1));
  const double bar = group * 0.8 / static_cast<double>(std::max<std::size_t>(series.size(), 1));
  auto ypos = [&](double v) { return y0 - (y0 - y1) * v / y_max; };
  for (std::size_t c = 0; c < categories.size(); ++c) {
    const double gx = x0 + group * static_cast<double>(c) + group * 0.1;
    for (std::size_t s = 0; s < series.size(); ++s) {
      if (c >= series[s].values.size()) continue;
      const double v = series[s].values[c];
      const double bx = gx + bar * static_cast<double>(s);
      os << "<rect x=\"" << num(bx, 2) << "\" y=\"" << num(ypos(v), 2) << "\" width=\"" << num(bar * 0.9, 2)
         << "\" height=\"" << num(y0 - ypos(v), 2) << "\" fill=\"" << color(s) << "\"/>\n";
      if (c < series[s].low.size() && c < series[s].high.size()) {
        const double cx = bx + bar * 0.45;
        os << "<line x1=\"" << num(cx, 2) << "\" y1=\"" << num(ypos(series[s].low[c]), 2) << "\" x2=\"" << num(cx, 2)
           << "\" y2=\"" << num(ypos(series[s].high[c]), 2) << "\" stroke=\"black\"/>\n";
      }
    }
    os << "<text x=\"" << num(x0 + group * (static_cast<double>(c) + 0.5), 2) << "\" y=\"" << y0 + 16
       << "\" text-anchor=\"middle\">" << escape(categories[c]) << "</text>\n";
  }
  std::vector<std::string> names;
  for (const auto& s : series) names.push_back(s.name);
  legend(os, names);
  os << "</svg>\n";
  return os.str();
}

std::string line_chart_svg(const std::string& title, const std::string& x_label, const std::string& y_label,
                           const std::vector<LineSeries>& series, double y_min, double y_max) {
  double x_lo = 0, x_hi = 1;
  bool first = true;
  for (const auto& s : series)
    for (double x : s.x) {
      if (first) x_lo = x_hi = x;
      x_lo = std::min(x_lo, x);
      x_hi = std::max(x_hi, x);
      first = false;
    }
  if (x_hi <= x_lo) x_hi = x_lo + 1;
  if (y_max <= y_min) y_max = y_min + 1;

  std::ostringstream os;
  open_svg(os, title);
  axes(os, y_min, y_max, x_label, y_label);
  const double x0 = kLeft, x1 = kWidth - kRight, y0 = kHeight - kBottom, y1 = kTop;
  auto px = [&](double x) { return x0 + (x1 - x0) * (x - x_lo) / (x_hi - x_lo); };
  auto py = [&](double y) { return y0 - (y0 - y1) * (std::clamp(y, y_min, y_max) - y_min) / (y_max - y_min); };
  for (double x = std::ceil(x_lo); x <= x_hi; x += std::max(1.0, std::floor((x_hi - x_lo) / 12))) {
    os << "<text x=\"" << num(px(x), 2) << "\" y=\"" << y0 + 16 << "\" text-anchor=\"middle\">" << num(x, 0)
       << "</text>\n";
  }
  for (std::size_t i = 0; i < series.size(); ++i) {
    os << "<polyline fill=\"none\" stroke=\"" << color(i) << "\" stroke-width=\"2\" points=\"";
    for (std::size_t k = 0; k < series[i].x.size() && k < series[i].y.size(); ++k)
      os << (k ? " " : "") << num(px(series[i].x[k]), 2) << ',' << num(py(series[i].y[k]), 2);
    os << "\"/>\n";
  }
  std::vector<std::string> names;
  for (const auto& s : series) names.push_back(s.name);
  legend(os, names);
  os << "</svg>\n";
  return os.str();
}

}  // namespace twinforge
