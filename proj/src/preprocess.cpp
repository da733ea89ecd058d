#include "demand/preprocess.hpp"

#include <algorithm>

#include "demand/error.hpp"
#include "demand/io.hpp"

namespace demand {

Eigen::VectorXd median_daily_profile(const Eigen::MatrixXd& day_matrix) {
  const Eigen::Index n = day_matrix.rows();
  if (n == 0) throw InputError("preprocess", "median_daily_profile", "empty day matrix");
  Eigen::VectorXd median(day_matrix.cols());
  std::vector<double> column(static_cast<std::size_t>(n));
  for (Eigen::Index j = 0; j < day_matrix.cols(); ++j) {
    for (Eigen::Index i = 0; i < n; ++i) column[static_cast<std::size_t>(i)] = day_matrix(i, j);
    std::sort(column.begin(), column.end());
    const auto mid = static_cast<std::size_t>(n / 2);
    median(j) = n % 2 == 1 ? column[mid] : (column[mid - 1] + column[mid]) / 2.0;
  }
  return median;
}

Eigen::VectorXd median_daily_profile(const HouseholdSeries& series) {
  if (series.day_matrix.rows() == 0) {
    throw InputError("preprocess", "median_daily_profile", "household " + series.household_id + " has no days");
  }
  return median_daily_profile(series.day_matrix);
}

ProfileMatrix normalize_rows(Eigen::MatrixXd m, std::vector<std::string> household_ids) {
  if (static_cast<Eigen::Index>(household_ids.size()) != m.rows()) {
    throw InputError("preprocess", "normalize_rows", "household id count does not match row count");
  }
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    const double norm = m.row(i).norm();
    if (!(norm > 0.0)) {
      throw InputError("preprocess", "normalize_rows",
                       "household " + household_ids[static_cast<std::size_t>(i)] +
                           " has an all-zero median profile and cannot be normalized");
    }
    m.row(i) /= norm;
  }
  return {std::move(m), std::move(household_ids)};
}

ProfileMatrix preprocess(const std::map<std::string, HouseholdSeries>& households, int resolution_hours) {
  const int d = slots_per_day(resolution_hours);
  if (households.size() < 2) {
    throw InputError("preprocess", "preprocess",
                     "need at least 2 households, got " + std::to_string(households.size()));
  }
  Eigen::MatrixXd medians(static_cast<Eigen::Index>(households.size()), d);
  std::vector<std::string> ids;
  ids.reserve(households.size());
  Eigen::Index row = 0;
  for (const auto& [id, series] : households) {
    if (series.day_matrix.cols() != d) {
      throw InputError("preprocess", "preprocess", "household " + id + " has " +
                                                       std::to_string(series.day_matrix.cols()) + " slots, expected " +
                                                       std::to_string(d));
    }
    medians.row(row++) = median_daily_profile(series).transpose();
    ids.push_back(id);
  }
  return normalize_rows(std::move(medians), std::move(ids));
}

std::string profile_csv(const ProfileMatrix& profiles) {
  return labeled_matrix_csv(profiles.matrix, profiles.household_ids, "slot_");
}

ProfileMatrix parse_profile_csv(std::string_view text) {
  auto table = parse_labeled_matrix_csv(text, "preprocess", "parse_profile_csv");
  return {std::move(table.matrix), std::move(table.ids)};
}

}  // namespace demand
