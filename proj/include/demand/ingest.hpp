#pragma once

#include <Eigen/Dense>

#include <chrono>
#include <istream>
#include <map>
#include <ostream>
#include <span>
#include <string>
#include <vector>

namespace demand {

using Date = std::chrono::year_month_day;

/// One hourly (or r-hourly) meter observation.
struct MeterReading {
  std::string household_id;
  Date day;
  int slot = 0;  // in [0, 24/r)
  double energy = 0.0;  // kWh, >= 0
};

/// Complete days of one household, one row per day ordered by date.
struct HouseholdSeries {
  std::string household_id;
  std::vector<Date> days;
  Eigen::MatrixXd day_matrix;  // days.size() x 24/r
  int n_days_dropped = 0;
};

struct Exclusion {
  std::string household_id;
  std::string reason;
  int n_complete_days = 0;
};

struct DayMatrices {
  std::map<std::string, HouseholdSeries> households;  // sorted by id
  std::vector<Exclusion> excluded;
};

inline constexpr int default_min_complete_days = 10;

/// Slots per day for resolution r; throws ConfigError unless r divides 24.
int slots_per_day(int resolution_hours);

/// Parses `household_id,timestamp,kwh` CSV. Timestamps are
/// YYYY-MM-DDTHH[:00[:00]] local wall-clock; the hour must be a multiple of r.
std::vector<MeterReading> parse_readings(std::istream& csv, int resolution_hours);

/// Groups readings into day matrices, dropping days with any missing slot and
/// excluding households left with fewer than `min_complete_days` days.
DayMatrices build_day_matrices(std::span<const MeterReading> readings, int resolution_hours,
                               int min_complete_days = default_min_complete_days);

std::string format_timestamp(const Date& day, int hour);
std::string format_date(const Date& day);

void write_readings_csv(std::ostream& out, std::span<const MeterReading> readings, int resolution_hours);
/// Serializes retained days back to the ingest schema.
void write_readings_csv(std::ostream& out, const std::map<std::string, HouseholdSeries>& households,
                        int resolution_hours);
void write_exclusions_csv(std::ostream& out, std::span<const Exclusion> excluded);

}  // namespace demand
