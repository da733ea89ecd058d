#pragma once

#include <Eigen/Dense>

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "demand/cluster.hpp"
#include "demand/ingest.hpp"
#include "demand/preprocess.hpp"

namespace demand {

struct Series {
  std::string label;
  std::vector<double> xs;
  std::vector<double> ys;
};

struct Axes {
  std::string title;
  std::string x_label;
  std::string y_label;
};

std::string line_chart_svg(const Axes& axes, std::span<const Series> series);
std::string bar_chart_svg(const Axes& axes, std::span<const double> xs, std::span<const double> ys);

/// Per-slot box statistics; quartiles by linear interpolation, whiskers at
/// the most extreme points within 1.5 IQR.
struct BoxStats {
  double low = 0.0;
  double q1 = 0.0;
  double median = 0.0;
  double q3 = 0.0;
  double high = 0.0;
};
std::vector<BoxStats> slot_box_stats(const Eigen::MatrixXd& day_matrix);
std::string box_plot_svg(const Axes& axes, std::span<const BoxStats> boxes, std::span<const Series> overlays);

/// One SVG + CSV per cluster showing each member's normalized profile.
std::vector<std::filesystem::path> emit_cluster_plots(const std::filesystem::path& dir, const ProfileMatrix& profiles,
                                                      const ClusterModel& model);
/// One SVG + CSV per requested household: daily box plots with the median
/// and the normalized median scaled to the median's peak.
std::vector<std::filesystem::path> emit_box_plots(const std::filesystem::path& dir,
                                                  const std::map<std::string, HouseholdSeries>& households,
                                                  std::span<const std::string> household_ids);
std::filesystem::path emit_curve_plot(const std::filesystem::path& dir, std::string_view stem, const Axes& axes,
                                      std::span<const double> xs, std::span<const double> ys);
std::filesystem::path emit_gap_plot(const std::filesystem::path& dir, const GapResult& gap);

}  // namespace demand
