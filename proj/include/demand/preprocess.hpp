#pragma once

#include <Eigen/Dense>

#include <map>
#include <string>
#include <vector>

#include "demand/ingest.hpp"

namespace demand {

/// Row-normalized median daily profiles, one row per household.
struct ProfileMatrix {
  Eigen::MatrixXd matrix;  // n x 24/r, unit rows
  std::vector<std::string> household_ids;

  Eigen::Index rows() const { return matrix.rows(); }
  Eigen::Index cols() const { return matrix.cols(); }
};

/// Per-slot median over days; even counts average the two middle values.
Eigen::VectorXd median_daily_profile(const Eigen::MatrixXd& day_matrix);
Eigen::VectorXd median_daily_profile(const HouseholdSeries& series);

/// Divides every row by its Euclidean norm. A zero row is an InputError
/// naming its household.
ProfileMatrix normalize_rows(Eigen::MatrixXd m, std::vector<std::string> household_ids);

/// Median profile of every household followed by row normalization. Rows are
/// in household_id order; at least two households are required.
ProfileMatrix preprocess(const std::map<std::string, HouseholdSeries>& households, int resolution_hours);

std::string profile_csv(const ProfileMatrix& profiles);
ProfileMatrix parse_profile_csv(std::string_view text);

}  // namespace demand
