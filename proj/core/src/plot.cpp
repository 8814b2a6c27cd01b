#include "robrl/plot.hpp"

#include "robrl/serialize.hpp"
#include "robrl/types.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace robrl {

namespace {

constexpr double kWidth = 720.0;
constexpr double kHeight = 480.0;
constexpr double kLeft = 80.0;
constexpr double kRight = 20.0;
constexpr double kTop = 40.0;
constexpr double kBottom = 60.0;
// Values at or below this are drawn on the floor of the log axis.
constexpr double kFloor = 1e-300;

std::string color_for(const std::string& algorithm, std::size_t index) {
  if (algorithm == "robust_td" || algorithm == "robust_nac") return "#1f4fd6";
  if (algorithm == "plain_td") return "#d62728";
  static const char* palette[] = {"#7f3fbf", "#ff7f0e", "#8c564b", "#17becf"};
  return palette[index % 4];
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", x);
  return buf;
}

// Log-log frame fitted to the data.
class Frame {
 public:
  void include(double t, double v) {
    if (!(t > 0.0) || !std::isfinite(v)) return;
    v = std::max(v, kFloor);
    t_lo_ = std::min(t_lo_, t);
    t_hi_ = std::max(t_hi_, t);
    v_lo_ = std::min(v_lo_, v);
    v_hi_ = std::max(v_hi_, v);
  }

  void finish() {
    if (!(t_lo_ <= t_hi_)) t_lo_ = t_hi_ = 1.0;
    if (!(v_lo_ <= v_hi_)) v_lo_ = v_hi_ = 1.0;
    lx0_ = std::floor(std::log10(t_lo_));
    lx1_ = std::max(std::ceil(std::log10(t_hi_)), lx0_ + 1.0);
    ly0_ = std::floor(std::log10(v_lo_));
    ly1_ = std::max(std::ceil(std::log10(v_hi_)), ly0_ + 1.0);
  }

  double x(double t) const {
    return kLeft + (std::log10(t) - lx0_) / (lx1_ - lx0_) * (kWidth - kLeft - kRight);
  }
  double y(double v) const {
    v = std::max(v, kFloor);
    return kHeight - kBottom -
           (std::log10(v) - ly0_) / (ly1_ - ly0_) * (kHeight - kTop - kBottom);
  }

  void axes(std::ostringstream& os, const PlotLabels& labels) const {
    const double x0 = kLeft, x1 = kWidth - kRight, y0 = kHeight - kBottom, y1 = kTop;
    os << "<rect x='" << num(x0) << "' y='" << num(y1) << "' width='" << num(x1 - x0)
       << "' height='" << num(y0 - y1) << "' fill='none' stroke='#333'/>\n";
    const int xstep = std::max(1, static_cast<int>((lx1_ - lx0_) / 8.0 + 0.999));
    for (int e = static_cast<int>(lx0_); e <= static_cast<int>(lx1_); e += xstep) {
      const double px = x(std::pow(10.0, e));
      os << "<line x1='" << num(px) << "' y1='" << num(y0) << "' x2='" << num(px) << "' y2='"
         << num(y0 + 5) << "' stroke='#333'/>"
         << "<text x='" << num(px) << "' y='" << num(y0 + 20)
         << "' font-size='12' text-anchor='middle'>1e" << e << "</text>\n";
    }
    const int ystep = std::max(1, static_cast<int>((ly1_ - ly0_) / 8.0 + 0.999));
    for (int e = static_cast<int>(ly0_); e <= static_cast<int>(ly1_); e += ystep) {
      const double py = y(std::pow(10.0, e));
      os << "<line x1='" << num(x0 - 5) << "' y1='" << num(py) << "' x2='" << num(x0)
         << "' y2='" << num(py) << "' stroke='#333'/>"
         << "<text x='" << num(x0 - 8) << "' y='" << num(py + 4)
         << "' font-size='12' text-anchor='end'>1e" << e << "</text>\n";
    }
    os << "<text x='" << num((x0 + x1) / 2) << "' y='" << num(kHeight - 15)
       << "' font-size='14' text-anchor='middle'>" << escape(labels.x) << "</text>\n";
    os << "<text x='20' y='" << num((y0 + y1) / 2) << "' font-size='14' text-anchor='middle' "
       << "transform='rotate(-90 20 " << num((y0 + y1) / 2) << ")'>" << escape(labels.y)
       << "</text>\n";
    os << "<text x='" << num(kWidth / 2) << "' y='24' font-size='16' text-anchor='middle'>"
       << escape(labels.title) << "</text>\n";
  }

 private:
  double t_lo_ = std::numeric_limits<double>::infinity();
  double t_hi_ = -std::numeric_limits<double>::infinity();
  double v_lo_ = std::numeric_limits<double>::infinity();
  double v_hi_ = -std::numeric_limits<double>::infinity();
  double lx0_ = 0, lx1_ = 1, ly0_ = 0, ly1_ = 1;
};

template <typename ValueAt>
void polyline(std::ostringstream& os, const Frame& f, const std::vector<std::uint64_t>& t,
              ValueAt value, const std::string& attrs) {
  os << "<polyline fill='none' " << attrs << " points='";
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double v = value(i);
    if (!std::isfinite(v)) continue;
    os << num(f.x(static_cast<double>(t[i]))) << ',' << num(f.y(v)) << ' ';
  }
  os << "'/>\n";
}

std::vector<std::uint64_t> grid_of(const AggregateCurve& c) {
  std::vector<std::uint64_t> t;
  for (const auto& p : c.points) t.push_back(p.t);
  return t;
}

void band(std::ostringstream& os, const Frame& f, const AggregateCurve& c,
          const std::string& color) {
  os << "<polygon fill='" << color << "' fill-opacity='0.15' stroke='none' points='";
  for (const auto& p : c.points) {
    if (std::isfinite(p.q90)) os << num(f.x(double(p.t))) << ',' << num(f.y(p.q90)) << ' ';
  }
  for (auto it = c.points.rbegin(); it != c.points.rend(); ++it) {
    if (std::isfinite(it->q10)) os << num(f.x(double(it->t))) << ',' << num(f.y(it->q10)) << ' ';
  }
  os << "'/>\n";
}

void mean_line(std::ostringstream& os, const Frame& f, const AggregateCurve& c,
               const std::string& color) {
  const auto t = grid_of(c);
  polyline(os, f, t, [&](std::size_t i) { return c.points[i].mean; },
           "stroke='" + color + "' stroke-width='2.5'");
  for (const auto& p : c.points) {
    if (!std::isfinite(p.mean)) continue;
    os << "<circle cx='" << num(f.x(double(p.t))) << "' cy='" << num(f.y(p.mean))
       << "' r='3.5' fill='" << color << "'/>\n";
  }
}

void legend(std::ostringstream& os, const std::vector<std::pair<std::string, std::string>>& rows) {
  double y = kTop + 18;
  for (const auto& [label, style] : rows) {
    os << "<line x1='" << num(kWidth - kRight - 170) << "' y1='" << num(y - 4) << "' x2='"
       << num(kWidth - kRight - 145) << "' y2='" << num(y - 4) << "' " << style << "/>"
       << "<text x='" << num(kWidth - kRight - 140) << "' y='" << num(y)
       << "' font-size='12'>" << escape(label) << "</text>\n";
    y += 18;
  }
}

std::string open_svg() {
  std::ostringstream os;
  os << "<svg xmlns='http://www.w3.org/2000/svg' width='" << kWidth << "' height='" << kHeight
     << "' viewBox='0 0 " << kWidth << ' ' << kHeight
     << "' font-family='sans-serif'>\n<rect width='100%' height='100%' fill='white'/>\n";
  return os.str();
}

}  // namespace

std::string spaghetti_svg(const PlotSeries& series, const PlotLabels& labels) {
  if (series.trials.empty() || series.aggregate.points.empty()) {
    throw ConfigError("spaghetti_svg: nothing to plot for " + series.algorithm);
  }
  Frame f;
  for (const auto& tr : series.trials) {
    for (std::size_t i = 0; i < tr.t.size(); ++i) f.include(double(tr.t[i]), tr.value[i]);
  }
  for (const auto& p : series.aggregate.points) f.include(double(p.t), p.mean);
  f.finish();

  std::ostringstream os;
  os << open_svg();
  f.axes(os, labels);
  for (const auto& tr : series.trials) {
    polyline(os, f, tr.t, [&](std::size_t i) { return tr.value[i]; },
             "stroke='#2ca02c' stroke-opacity='0.25' stroke-width='1'");
  }
  const std::string color = color_for(series.algorithm, 0);
  band(os, f, series.aggregate, color);
  polyline(os, f, grid_of(series.aggregate),
           [&](std::size_t i) { return series.aggregate.points[i].median; },
           "stroke='" + color + "' stroke-width='1.5' stroke-dasharray='6 4'");
  mean_line(os, f, series.aggregate, color);
  legend(os, {{"trials (" + std::to_string(series.trials.size()) + ")",
               "stroke='#2ca02c' stroke-opacity='0.5'"},
              {series.algorithm + " mean", "stroke='" + color + "' stroke-width='2.5'"},
              {series.algorithm + " median", "stroke='" + color + "' stroke-dasharray='6 4'"}});
  os << "</svg>\n";
  return os.str();
}

std::string comparison_svg(std::span<const AggregateCurve> curves, const PlotLabels& labels) {
  if (curves.empty()) throw ConfigError("comparison_svg: no curves");
  Frame f;
  for (const auto& c : curves) {
    for (const auto& p : c.points) {
      f.include(double(p.t), p.mean);
      f.include(double(p.t), p.q10);
      f.include(double(p.t), p.q90);
    }
  }
  f.finish();
  std::ostringstream os;
  os << open_svg();
  f.axes(os, labels);
  std::vector<std::pair<std::string, std::string>> rows;
  for (std::size_t k = 0; k < curves.size(); ++k) {
    const std::string color = color_for(curves[k].algorithm, k);
    band(os, f, curves[k], color);
    mean_line(os, f, curves[k], color);
    rows.emplace_back(curves[k].algorithm + " mean", "stroke='" + color + "' stroke-width='2.5'");
  }
  legend(os, rows);
  os << "</svg>\n";
  return os.str();
}

std::string plot_data_csv(std::span<const PlotSeries> series) {
  std::ostringstream os;
  os << "series,kind,trial,t,value\n";
  for (const auto& s : series) {
    for (const auto& tr : s.trials) {
      for (std::size_t i = 0; i < tr.t.size(); ++i) {
        os << s.algorithm << ",trial," << tr.trial << ',' << tr.t[i] << ','
           << format_double(tr.value[i]) << '\n';
      }
    }
    for (const auto& p : s.aggregate.points) {
      os << s.algorithm << ",mean,," << p.t << ',' << format_double(p.mean) << '\n';
      os << s.algorithm << ",median,," << p.t << ',' << format_double(p.median) << '\n';
      os << s.algorithm << ",q10,," << p.t << ',' << format_double(p.q10) << '\n';
      os << s.algorithm << ",q90,," << p.t << ',' << format_double(p.q90) << '\n';
    }
  }
  return os.str();
}

std::vector<std::filesystem::path> emit_plots(std::span<const PlotSeries> series,
                                              const std::filesystem::path& dir,
                                              const std::string& stem, const PlotLabels& labels) {
  if (series.empty()) throw ConfigError("emit_plots: empty trial set");
  for (const auto& s : series) {
    if (s.trials.empty()) throw ConfigError("emit_plots: no trials for " + s.algorithm);
  }
  std::vector<std::filesystem::path> written;
  for (const auto& s : series) {
    PlotLabels l = labels;
    l.title = labels.title.empty() ? s.algorithm : labels.title + " (" + s.algorithm + ")";
    const auto path = dir / (stem + "_" + s.algorithm + ".svg");
    write_text_file(path, spaghetti_svg(s, l));
    written.push_back(path);
  }
  if (series.size() > 1) {
    std::vector<AggregateCurve> curves;
    for (const auto& s : series) curves.push_back(s.aggregate);
    PlotLabels l = labels;
    if (l.title.empty()) l.title = "expected error";
    const auto path = dir / (stem + "_comparison.svg");
    write_text_file(path, comparison_svg(curves, l));
    written.push_back(path);
  }
  const auto data = dir / (stem + "_data.csv");
  write_text_file(data, plot_data_csv(series));
  written.push_back(data);
  return written;
}

}  // namespace robrl
