#include "demand/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cctype>
#include <cstdio>
#include <limits>

#include "demand/error.hpp"
#include "demand/io.hpp"

namespace demand {

namespace {

constexpr double width = 640, height = 400;
constexpr double left = 64, right = 160, top = 40, bottom = 48;

const char* const palette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                               "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

std::string label_num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3g", v);
  return buf;
}

std::string escape(std::string_view text) {
  std::string out;
  for (char c : text) {
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

struct Frame {
  double x0, x1, y0, y1;

  double px(double x) const { return left + (x - x0) / (x1 - x0) * (width - left - right); }
  double py(double y) const { return height - bottom - (y - y0) / (y1 - y0) * (height - top - bottom); }
};

Frame make_frame(double x0, double x1, double y0, double y1) {
  if (!(x1 > x0)) x1 = x0 + 1.0;
  if (!(y1 > y0)) {
    y0 -= 0.5;
    y1 += 0.5;
  }
  const double pad = 0.05 * (y1 - y0);
  return {x0, x1, y0 - pad, y1 + pad};
}

std::string open_svg(const Axes& axes, const Frame& f) {
  std::string s = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(width) + "\" height=\"" + num(height) +
       "\" viewBox=\"0 0 " + num(width) + " " + num(height) + "\">\n";
  s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s += "<text x=\"" + num(width / 2) + "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">" + escape(axes.title) +
       "</text>\n";
  const double plot_r = width - right;
  const double plot_b = height - bottom;
  s += "<line x1=\"" + num(left) + "\" y1=\"" + num(plot_b) + "\" x2=\"" + num(plot_r) + "\" y2=\"" + num(plot_b) +
       "\" stroke=\"black\"/>\n";
  s += "<line x1=\"" + num(left) + "\" y1=\"" + num(top) + "\" x2=\"" + num(left) + "\" y2=\"" + num(plot_b) +
       "\" stroke=\"black\"/>\n";
  for (int t = 0; t <= 4; ++t) {
    const double xv = f.x0 + (f.x1 - f.x0) * t / 4.0;
    const double yv = f.y0 + (f.y1 - f.y0) * t / 4.0;
    s += "<text x=\"" + num(f.px(xv)) + "\" y=\"" + num(plot_b + 16) +
         "\" text-anchor=\"middle\" font-size=\"11\">" + label_num(xv) + "</text>\n";
    s += "<text x=\"" + num(left - 6) + "\" y=\"" + num(f.py(yv) + 4) + "\" text-anchor=\"end\" font-size=\"11\">" +
         label_num(yv) + "</text>\n";
  }
  s += "<text x=\"" + num((left + plot_r) / 2) + "\" y=\"" + num(height - 10) +
       "\" text-anchor=\"middle\" font-size=\"12\">" + escape(axes.x_label) + "</text>\n";
  s += "<text x=\"16\" y=\"" + num((top + plot_b) / 2) + "\" text-anchor=\"middle\" font-size=\"12\" transform=\"rotate(-90 16 " +
       num((top + plot_b) / 2) + ")\">" + escape(axes.y_label) + "</text>\n";
  return s;
}

std::string polyline(const Frame& f, const Series& s, const char* color) {
  std::string pts;
  for (std::size_t i = 0; i < s.xs.size(); ++i) {
    if (i) pts += ' ';
    pts += num(f.px(s.xs[i])) + "," + num(f.py(s.ys[i]));
  }
  return "<polyline fill=\"none\" stroke=\"" + std::string(color) + "\" stroke-width=\"1.5\" points=\"" + pts + "\"/>\n";
}

std::string legend(std::span<const Series> series) {
  std::string s;
  const double x = width - right + 12;
  for (std::size_t i = 0; i < series.size(); ++i) {
    const double y = top + 14.0 * static_cast<double>(i);
    s += "<line x1=\"" + num(x) + "\" y1=\"" + num(y) + "\" x2=\"" + num(x + 16) + "\" y2=\"" + num(y) +
         "\" stroke=\"" + palette[i % 10] + "\" stroke-width=\"2\"/>\n";
    s += "<text x=\"" + num(x + 20) + "\" y=\"" + num(y + 4) + "\" font-size=\"10\">" + escape(series[i].label) +
         "</text>\n";
  }
  return s;
}

void bounds(std::span<const double> v, double& lo, double& hi) {
  for (double x : v) {
    lo = std::min(lo, x);
    hi = std::max(hi, x);
  }
}

double quantile(const std::vector<double>& sorted, double q) {
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto i = static_cast<std::size_t>(std::floor(pos));
  const double frac = pos - static_cast<double>(i);
  if (i + 1 >= sorted.size()) return sorted.back();
  return sorted[i] + frac * (sorted[i + 1] - sorted[i]);
}

std::string safe_stem(std::string_view id) {
  std::string out;
  for (char c : id) out += (std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_') ? c : '_';
  return out;
}

}  // namespace

std::string line_chart_svg(const Axes& axes, std::span<const Series> series) {
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  for (const auto& s : series) {
    bounds(s.xs, x0, x1);
    bounds(s.ys, y0, y1);
  }
  if (series.empty() || !std::isfinite(x0)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  const Frame f = make_frame(x0, x1, y0, y1);
  std::string svg = open_svg(axes, f);
  for (std::size_t i = 0; i < series.size(); ++i) svg += polyline(f, series[i], palette[i % 10]);
  svg += legend(series);
  return svg + "</svg>\n";
}

std::string bar_chart_svg(const Axes& axes, std::span<const double> xs, std::span<const double> ys) {
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = 0.0, y1 = 0.0;
  bounds(xs, x0, x1);
  bounds(ys, y0, y1);
  if (xs.empty()) x0 = 0, x1 = 1;
  const Frame f = make_frame(x0 - 0.5, x1 + 0.5, y0, y1);
  std::string svg = open_svg(axes, f);
  const double bar = 0.6 * (f.px(1.0) - f.px(0.0));
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double ya = f.py(std::max(ys[i], 0.0)), yb = f.py(std::min(ys[i], 0.0));
    svg += "<rect x=\"" + num(f.px(xs[i]) - bar / 2) + "\" y=\"" + num(ya) + "\" width=\"" + num(bar) +
           "\" height=\"" + num(yb - ya) + "\" fill=\"" + palette[0] + "\"/>\n";
  }
  return svg + "</svg>\n";
}

std::vector<BoxStats> slot_box_stats(const Eigen::MatrixXd& day_matrix) {
  if (day_matrix.rows() == 0) throw InputError("plot", "slot_box_stats", "empty day matrix");
  std::vector<BoxStats> out;
  std::vector<double> col(static_cast<std::size_t>(day_matrix.rows()));
  for (Eigen::Index j = 0; j < day_matrix.cols(); ++j) {
    for (Eigen::Index i = 0; i < day_matrix.rows(); ++i) col[static_cast<std::size_t>(i)] = day_matrix(i, j);
    std::sort(col.begin(), col.end());
    BoxStats b;
    b.q1 = quantile(col, 0.25);
    b.median = quantile(col, 0.5);
    b.q3 = quantile(col, 0.75);
    const double iqr = b.q3 - b.q1;
    b.low = b.q1;
    b.high = b.q3;
    for (double v : col) {
      if (v >= b.q1 - 1.5 * iqr) b.low = std::min(b.low, v);
      if (v <= b.q3 + 1.5 * iqr) b.high = std::max(b.high, v);
    }
    out.push_back(b);
  }
  return out;
}

std::string box_plot_svg(const Axes& axes, std::span<const BoxStats> boxes, std::span<const Series> overlays) {
  double y0 = std::numeric_limits<double>::infinity(), y1 = -y0;
  for (const auto& b : boxes) {
    y0 = std::min(y0, b.low);
    y1 = std::max(y1, b.high);
  }
  for (const auto& s : overlays) bounds(s.ys, y0, y1);
  if (!std::isfinite(y0)) y0 = 0, y1 = 1;
  const Frame f = make_frame(-0.5, static_cast<double>(boxes.size()) - 0.5, y0, y1);
  std::string svg = open_svg(axes, f);
  const double w = 0.3 * (f.px(1.0) - f.px(0.0));
  for (std::size_t i = 0; i < boxes.size(); ++i) {
    const auto& b = boxes[i];
    const double cx = f.px(static_cast<double>(i));
    svg += "<line x1=\"" + num(cx) + "\" y1=\"" + num(f.py(b.low)) + "\" x2=\"" + num(cx) + "\" y2=\"" +
           num(f.py(b.high)) + "\" stroke=\"gray\"/>\n";
    svg += "<rect x=\"" + num(cx - w) + "\" y=\"" + num(f.py(b.q3)) + "\" width=\"" + num(2 * w) + "\" height=\"" +
           num(f.py(b.q1) - f.py(b.q3)) + "\" fill=\"#dddddd\" stroke=\"gray\"/>\n";
  }
  for (std::size_t i = 0; i < overlays.size(); ++i) svg += polyline(f, overlays[i], palette[i % 10]);
  svg += legend(overlays);
  return svg + "</svg>\n";
}

std::vector<std::filesystem::path> emit_cluster_plots(const std::filesystem::path& dir, const ProfileMatrix& profiles,
                                                      const ClusterModel& model) {
  if (static_cast<Eigen::Index>(model.labels.size()) != profiles.rows()) {
    throw InputError("plot", "emit_cluster_plots", "model labels do not match the profile matrix");
  }
  std::vector<std::filesystem::path> written;
  for (int c = 0; c < model.k; ++c) {
    std::vector<Series> series;
    std::string csv = "household_id";
    for (Eigen::Index s = 0; s < profiles.cols(); ++s) csv += ",slot_" + std::to_string(s);
    csv += '\n';
    for (Eigen::Index i = 0; i < profiles.rows(); ++i) {
      if (model.labels[static_cast<std::size_t>(i)] != c) continue;
      Series s{profiles.household_ids[static_cast<std::size_t>(i)], {}, {}};
      csv += s.label;
      for (Eigen::Index j = 0; j < profiles.cols(); ++j) {
        s.xs.push_back(static_cast<double>(j));
        s.ys.push_back(profiles.matrix(i, j));
        csv += ',' + format_double(profiles.matrix(i, j));
      }
      csv += '\n';
      series.push_back(std::move(s));
    }
    const Axes axes{"Cluster " + std::to_string(c + 1) + " (" + std::to_string(series.size()) + " households)",
                    "slot", "normalized consumption"};
    const auto stem = dir / ("cluster_" + std::to_string(c + 1));
    write_text_file(stem.string() + ".svg", line_chart_svg(axes, series), "plot", "emit_cluster_plots");
    write_text_file(stem.string() + ".csv", csv, "plot", "emit_cluster_plots");
    written.push_back(stem.string() + ".svg");
  }
  return written;
}

std::vector<std::filesystem::path> emit_box_plots(const std::filesystem::path& dir,
                                                  const std::map<std::string, HouseholdSeries>& households,
                                                  std::span<const std::string> household_ids) {
  std::vector<std::filesystem::path> written;
  for (const auto& id : household_ids) {
    const auto it = households.find(id);
    if (it == households.end()) throw InputError("plot", "emit_box_plots", "unknown household " + id);
    const auto boxes = slot_box_stats(it->second.day_matrix);
    Series median{"median", {}, {}};
    Series scaled{"normalized median (scaled)", {}, {}};
    double peak = 0.0, norm = 0.0;
    for (const auto& b : boxes) {
      peak = std::max(peak, b.high);
      norm += b.median * b.median;
    }
    norm = std::sqrt(norm);
    double unit_peak = 0.0;
    for (const auto& b : boxes) unit_peak = std::max(unit_peak, norm > 0.0 ? b.median / norm : 0.0);
    std::string csv = "slot,low,q1,median,q3,high,normalized_median\n";
    for (std::size_t s = 0; s < boxes.size(); ++s) {
      const auto& b = boxes[s];
      const double unit = norm > 0.0 ? b.median / norm : 0.0;
      median.xs.push_back(static_cast<double>(s));
      median.ys.push_back(b.median);
      scaled.xs.push_back(static_cast<double>(s));
      scaled.ys.push_back(unit_peak > 0.0 ? unit * peak / unit_peak : 0.0);
      csv += std::to_string(s) + ',' + format_double(b.low) + ',' + format_double(b.q1) + ',' +
             format_double(b.median) + ',' + format_double(b.q3) + ',' + format_double(b.high) + ',' +
             format_double(unit) + '\n';
    }
    const std::vector<Series> overlays{median, scaled};
    const Axes axes{"Daily consumption of " + id, "slot", "kWh"};
    const auto stem = dir / ("boxplot_" + safe_stem(id));
    write_text_file(stem.string() + ".svg", box_plot_svg(axes, boxes, overlays), "plot", "emit_box_plots");
    write_text_file(stem.string() + ".csv", csv, "plot", "emit_box_plots");
    written.push_back(stem.string() + ".svg");
  }
  return written;
}

std::filesystem::path emit_curve_plot(const std::filesystem::path& dir, std::string_view stem, const Axes& axes,
                                      std::span<const double> xs, std::span<const double> ys) {
  const std::vector<Series> series{{axes.y_label, {xs.begin(), xs.end()}, {ys.begin(), ys.end()}}};
  const auto path = dir / (std::string(stem) + ".svg");
  write_text_file(path, line_chart_svg(axes, series), "plot", "emit_curve_plot");
  std::string csv = axes.x_label + ',' + axes.y_label + '\n';
  for (std::size_t i = 0; i < xs.size(); ++i) csv += format_double(xs[i]) + ',' + format_double(ys[i]) + '\n';
  write_text_file(dir / (std::string(stem) + ".csv"), csv, "plot", "emit_curve_plot");
  return path;
}

std::filesystem::path emit_gap_plot(const std::filesystem::path& dir, const GapResult& gap) {
  std::vector<double> ks(gap.k_values.begin(), gap.k_values.end());
  const auto path = dir / "gap.svg";
  write_text_file(path, bar_chart_svg({"Gap statistic (chosen k = " + std::to_string(gap.chosen_k) + ")", "k", "gap"}, ks, gap.gap),
                  "plot", "emit_gap_plot");
  write_text_file(dir / "gap_plot.csv", gap_csv(gap), "plot", "emit_gap_plot");
  return path;
}

}  // namespace demand
